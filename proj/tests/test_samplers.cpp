#include "srkdiff/samplers.hpp"

#include <cmath>
#include <sstream>

#include <doctest.h>

#include "srkdiff/gaussian.hpp"
#include "srkdiff/rng.hpp"
#include "srkdiff/sweep.hpp"

using namespace srkdiff;

namespace {

class ZeroScore : public ScoreField {
 public:
  ZeroScore(int d, double horizon) : d_(d), horizon_(horizon) {}
  double horizon() const override { return horizon_; }
  int dim() const override { return d_; }
  bool bounded_support() const override { return false; }

 protected:
  Eigen::VectorXd eval(double, const Eigen::VectorXd& x) const override {
    return Eigen::VectorXd::Zero(x.size());
  }

 private:
  int d_;
  double horizon_;
};

class BlowUpScore : public ScoreField {
 public:
  BlowUpScore(int d, double horizon, int bad_step_time_index,
              const TimeGrid& grid)
      : d_(d), horizon_(horizon),
        bad_time_(grid.times()[static_cast<std::size_t>(bad_step_time_index)]) {}
  double horizon() const override { return horizon_; }
  int dim() const override { return d_; }
  bool bounded_support() const override { return false; }

 protected:
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& x) const override {
    if (t >= bad_time_)
      return Eigen::VectorXd::Constant(
          x.size(), std::numeric_limits<double>::quiet_NaN());
    return Eigen::VectorXd::Zero(x.size());
  }

 private:
  int d_;
  double horizon_;
  double bad_time_;
};

std::shared_ptr<const ScoreField> stationary_score(int d, double horizon) {
  GaussianTarget g;
  g.mean = Eigen::VectorXd::Zero(d);
  g.cov_diag = Eigen::VectorXd::Ones(d);
  return make_analytic_score(TargetSpec(std::move(g)), horizon);
}

}  // namespace

TEST_CASE("srk step with a zero score is the pure noise update") {
  const int d = 3;
  const ZeroScore zero(d, 2.0);
  const auto c = coefficients(0.05);
  const NoiseStream draw(3, 0);
  const Eigen::VectorXd state = draw.normal_vector(d);
  const Eigen::VectorXd g1 = NoiseStream(3, 1).normal_vector(d);
  const Eigen::VectorXd g3 = NoiseStream(3, 2).normal_vector(d);
  const Eigen::VectorXd got = srk_step(state, c, zero, 0.3, g1, g3);
  const Eigen::VectorXd want =
      state / std::sqrt(c.alpha) + c.zeta2 * g1 + c.zeta3 * g3;
  CHECK((got - want).norm() <= 1e-14 * want.norm());
}

TEST_CASE("srk step contracts the stationary score without noise") {
  const int d = 2;
  const auto score = stationary_score(d, 2.0);
  const auto c = coefficients(0.1);
  const Eigen::Vector2d state(0.8, -0.5);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd got = srk_step(state, c, *score, 0.4, zero, zero);
  // (1/sqrt(a)) (1 - (1-a)) y = sqrt(a) y.
  CHECK((got - std::sqrt(c.alpha) * state).norm() <= 1e-14);
}

TEST_CASE("srk drift equals the e^Delta form on random inputs") {
  const int d = 4;
  const auto score = stationary_score(d, 2.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  for (double delta : {1e-6, 1e-3, 0.1, 0.25}) {
    const auto c = coefficients(delta);
    for (int rep = 0; rep < 32; ++rep) {
      const Eigen::VectorXd y =
          NoiseStream(50 + rep, 0).normal_vector(d);
      const Eigen::VectorXd via_alpha = srk_step(y, c, *score, 0.5, zero, zero);
      const Eigen::VectorXd s = (*score)(0.5, y);
      const Eigen::VectorXd via_exp =
          std::exp(delta) * y + 2.0 * std::sinh(delta) * s;
      CHECK((via_alpha - via_exp).norm() <=
            1e-12 * std::max(1.0, via_exp.norm()));
    }
  }
}

TEST_CASE("ddpm step: zero score grows exponentially, small width is continuous") {
  const int d = 2;
  const ZeroScore zero_field(d, 2.0);
  const Eigen::Vector2d state(1.0, -2.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd got = ddpm_ei_step(state, 0.2, zero_field, 0.1, zero);
  CHECK((got - std::exp(0.2) * state).norm() <= 1e-14);

  const auto score = stationary_score(d, 2.0);
  const Eigen::VectorXd g = NoiseStream(4, 0).normal_vector(d);
  const Eigen::VectorXd tiny = ddpm_ei_step(state, 1e-13, *score, 0.1, g);
  CHECK((tiny - state).norm() <= 1e-5);
}

TEST_CASE("ddpm one-step stationary variance deviates at second order") {
  for (double delta : {0.01, 0.003}) {
    const double a = 2.0 - std::exp(delta);
    const double variance = a * a + std::expm1(2.0 * delta);
    const double ratio = std::abs(variance - 1.0) / (delta * delta);
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
  }
}

TEST_CASE("limit variant: noise-free drift coincides with srk") {
  const int d = 3;
  const auto score = stationary_score(d, 2.0);
  const double delta = 0.07;
  const auto c = coefficients(delta);
  const Eigen::VectorXd y = NoiseStream(8, 0).normal_vector(d);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd a = srk_step(y, c, *score, 0.2, zero, zero);
  const Eigen::VectorXd b = limit_variant_step(y, delta, *score, 0.2, zero, zero);
  CHECK((a - b).norm() <= 1e-13 * a.norm());
}

TEST_CASE("limit variant differs from srk only in the noise weights when the score is zero") {
  const int d = 5;
  const ZeroScore zero_field(d, 2.0);
  const double delta = 0.04;
  const auto c = coefficients(delta);
  const Eigen::VectorXd y = NoiseStream(9, 0).normal_vector(d);
  const Eigen::VectorXd g1 = NoiseStream(9, 1).normal_vector(d);
  const Eigen::VectorXd g3 = NoiseStream(9, 2).normal_vector(d);
  const Eigen::VectorXd a = srk_step(y, c, zero_field, 0.2, g1, g3);
  const Eigen::VectorXd b = limit_variant_step(y, delta, zero_field, 0.2, g1, g3);
  const double zeta = std::sqrt(delta);
  const Eigen::VectorXd want =
      (c.zeta2 - zeta) * g1 + (c.zeta3 - zeta) * g3;
  CHECK(((a - b) - want).norm() <= 1e-13);
}

TEST_CASE("limit variant stays close to srk at tiny widths") {
  const int d = 8;
  const auto score = stationary_score(d, 2.0);
  const double delta = 1e-6;
  const auto c = coefficients(delta);
  for (int rep = 0; rep < 16; ++rep) {
    const Eigen::VectorXd y = NoiseStream(100 + rep, 0).normal_vector(d);
    const Eigen::VectorXd g1 = NoiseStream(100 + rep, 1).normal_vector(d);
    const Eigen::VectorXd g3 = NoiseStream(100 + rep, 2).normal_vector(d);
    const Eigen::VectorXd a = srk_step(y, c, *score, 0.5, g1, g3);
    const Eigen::VectorXd b =
        limit_variant_step(y, delta, *score, 0.5, g1, g3);
    CHECK((a - b).norm() <=
          0.25 * std::sqrt(delta) * (g1.norm() + g3.norm()));
  }
}

TEST_CASE("steps reject non-finite states") {
  const int d = 2;
  const ZeroScore zero_field(d, 2.0);
  Eigen::VectorXd bad(d);
  bad << 1.0, std::numeric_limits<double>::infinity();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  CHECK_THROWS_AS(srk_step(bad, coefficients(0.1), zero_field, 0.1, zero, zero),
                  std::invalid_argument);
  CHECK_THROWS_AS(ddpm_ei_step(bad, 0.1, zero_field, 0.1, zero),
                  std::invalid_argument);
  CHECK_THROWS_AS(limit_variant_step(bad, 0.1, zero_field, 0.1, zero, zero),
                  std::invalid_argument);
}

TEST_CASE("run_sampler is a pure function of the seed") {
  const TimeGrid grid = build_uniform_grid(2.0, 25, 0.05);
  const auto score = stationary_score(3, 2.0);
  for (SamplerKind kind :
       {SamplerKind::SRK, SamplerKind::DdpmEI, SamplerKind::LimitVariant}) {
    SamplerRun run{&grid, kind, score.get(), 1234, true};
    const Trajectory a = run_sampler(run);
    const Trajectory b = run_sampler(run);
    REQUIRE(a.states.size() == 26);
    CHECK(a.nfe == 25);
    for (std::size_t i = 0; i < a.states.size(); ++i)
      CHECK((a.states[i] - b.states[i]).norm() == 0.0);
    SamplerRun other{&grid, kind, score.get(), 1235, false};
    CHECK((run_sampler(other).final_state - a.final_state).norm() != 0.0);
  }
}

TEST_CASE("every sampler kind consumes exactly one score evaluation per step") {
  const TimeGrid grid = build_uniform_grid(2.0, 17, 0.05);
  auto counted = std::make_shared<CountingScore>(stationary_score(2, 2.0));
  for (SamplerKind kind :
       {SamplerKind::SRK, SamplerKind::DdpmEI, SamplerKind::LimitVariant}) {
    const auto before = counted->count();
    SamplerRun run{&grid, kind, counted.get(), 7, false};
    const Trajectory t = run_sampler(run);
    CHECK(counted->count() - before == 17);
    CHECK(t.nfe == 17);
  }
}

TEST_CASE("run_sampler aborts with the failing step index") {
  const TimeGrid grid = build_uniform_grid(2.0, 10, 0.05);
  const BlowUpScore bad(2, 2.0, 6, grid);
  SamplerRun run{&grid, SamplerKind::DdpmEI, &bad, 3, false};
  try {
    run_sampler(run);
    FAIL("expected abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("step 6") != std::string::npos);
  }
}

TEST_CASE("run_sampler rejects a score with a mismatched horizon") {
  const TimeGrid grid = build_uniform_grid(2.0, 10, 0.05);
  const auto score = stationary_score(2, 3.0);
  SamplerRun run{&grid, SamplerKind::SRK, score.get(), 1, false};
  CHECK_THROWS_AS(run_sampler(run), std::invalid_argument);
}

TEST_CASE("concurrent runs reproduce the individually computed trajectories") {
  const TimeGrid grid = build_uniform_grid(2.0, 12, 0.05);
  const auto score = stationary_score(2, 2.0);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 40; s < 72; ++s) seeds.push_back(s);
  const Eigen::MatrixXd batch =
      run_final_states(grid, SamplerKind::SRK, *score, seeds);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    SamplerRun run{&grid, SamplerKind::SRK, score.get(), seeds[i], false};
    CHECK((batch.row(static_cast<long>(i)).transpose() -
           run_sampler(run).final_state)
              .norm() == 0.0);
  }
}

TEST_CASE("monte carlo moments agree with the exact propagation oracle") {
  for (int d : {1, 8}) {
    const double horizon = 2.0;
    const TimeGrid grid = build_uniform_grid(horizon, 20, 0.05);
    const auto score = stationary_score(d, horizon);
    GaussianTarget target;
    target.mean = Eigen::VectorXd::Zero(d);
    target.cov_diag = Eigen::VectorXd::Ones(d);
    const GaussianLaw law = exact_output_law(grid, SamplerKind::SRK, target);

    const long n = 20000;
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
      seeds[static_cast<std::size_t>(i)] = 1000 + static_cast<std::uint64_t>(i);
    const Eigen::MatrixXd states =
        run_final_states(grid, SamplerKind::SRK, *score, seeds);
    const Eigen::VectorXd mean = states.colwise().mean();
    for (int j = 0; j < d; ++j) {
      const double v = law.cov_diag()[j];
      CHECK(std::abs(mean[j] - law.mean()[j]) <= 4.0 * std::sqrt(v / n));
      const double sample_var =
          (states.col(j).array() - mean[j]).square().sum() / (n - 1);
      CHECK(std::abs(sample_var - v) <= 4.0 * v * std::sqrt(2.0 / (n - 1)));
    }
  }
}

TEST_CASE("trajectory JSONL export shape and determinism") {
  const TimeGrid grid = build_uniform_grid(1.0, 5, 0.05);
  const auto score = stationary_score(2, 1.0);
  SamplerRun run{&grid, SamplerKind::SRK, score.get(), 99, true};
  std::ostringstream a, b;
  write_trajectory_jsonl(a, run_sampler(run), 2);
  write_trajectory_jsonl(b, run_sampler(run), 2);
  CHECK(a.str() == b.str());
  int lines = 0;
  for (char ch : a.str())
    if (ch == '\n') ++lines;
  CHECK(lines == 7);  // header + 6 states
  CHECK(a.str().find("\"kind\":\"srk\"") != std::string::npos);
}
