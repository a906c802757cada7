#include "srkdiff/validation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "srkdiff/kernels.hpp"
#include "srkdiff/rng.hpp"
#include "srkdiff/score.hpp"
#include "srkdiff/targets.hpp"

namespace srkdiff {
namespace {

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        std::exp(llo + (lhi - llo) * i / (n - 1));
  out.back() = hi;
  return out;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::abs(want);
}

CheckLine coefficient_identities(double zeta2_scale) {
  CheckLine line{"coefficient-identities", false, 0.0, 1e-12};
  for (double delta : log_spaced(1e-8, kMaxStepWidth, 1000)) {
    auto c = coefficients(delta);
    c.zeta2 *= zeta2_scale;
    const double spread = 2.0 * std::sinh(delta);
    const double e1 = rel_err(c.zeta1 * c.zeta1, 8.0 * c.f1 / (spread * spread));
    const double e2 = rel_err(c.zeta1 * c.zeta2, 4.0 * c.f3 / spread);
    const double e3 = rel_err(c.zeta2 * c.zeta2 + c.zeta3 * c.zeta3,
                              std::expm1(2.0 * delta));
    line.measured = std::max({line.measured, e1, e2, e3});
  }
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine limit_recovery() {
  CheckLine line{"limit-recovery", false, 0.0, 1e-4};
  const double delta = 1e-6;
  const auto c = coefficients(delta);
  const double scale = 1.0 / std::sqrt(delta);
  line.measured = std::max({std::abs(c.zeta1 * scale - std::sqrt(2.0 / 3.0)),
                            std::abs(c.zeta2 * scale - std::sqrt(1.5)),
                            std::abs(c.zeta3 * scale - std::sqrt(0.5))});
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine small_delta_monotone() {
  // The zeta_i Delta^{-1/2} limits converge at rate O(Delta); the rate
  // constant at 1e-6 must not exceed 100x the constant at 1e-4 (a blown
  // series branch would explode it).
  CheckLine line{"small-delta-monotone", false, 0.0, 100.0};
  auto rates = [](double delta) {
    const auto c = coefficients(delta);
    const double scale = 1.0 / std::sqrt(delta);
    return std::array<double, 3>{
        std::abs(c.zeta1 * scale - std::sqrt(2.0 / 3.0)) / delta,
        std::abs(c.zeta2 * scale - std::sqrt(1.5)) / delta,
        std::abs(c.zeta3 * scale - std::sqrt(0.5)) / delta};
  };
  const auto fine = rates(1e-6), coarse = rates(1e-4);
  for (int i = 0; i < 3; ++i)
    line.measured = std::max(line.measured, fine[i] / coarse[i]);
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine exponential_integrator_algebra() {
  CheckLine line{"exp-integrator-algebra", false, 0.0, 1e-14};
  for (double delta : log_spaced(1e-8, kMaxStepWidth, 1000)) {
    const auto c = coefficients(delta);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(c.alpha);
    const double e1 = rel_err(inv_sqrt_alpha, c.exp_delta);
    const double e2 = rel_err(c.one_minus_alpha * inv_sqrt_alpha,
                              2.0 * std::sinh(delta));
    line.measured = std::max({line.measured, e1, e2});
  }
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine crossover_continuity() {
  CheckLine line{"crossover-continuity", false, 0.0, 1e-13};
  const double above = kSeriesCrossover;
  const double below = std::nextafter(kSeriesCrossover, 0.0);
  const auto fa = covariance_functions(above);
  const auto fb = covariance_functions(below);
  line.measured = std::max({rel_err(fb.f1, fa.f1), rel_err(fb.f2, fa.f2),
                            rel_err(fb.f3, fa.f3)});
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine joint_covariance_psd() {
  CheckLine line{"joint-covariance-psd", false, 0.0, 0.0};
  double min_det = std::numeric_limits<double>::infinity();
  for (double delta : log_spaced(1e-8, kMaxStepWidth, 1000)) {
    const Eigen::Matrix2d cov = joint_noise_covariance(delta);
    min_det = std::min(min_det, cov.determinant() /
                                    (cov(0, 0) * cov(1, 1)));
  }
  line.measured = -min_det;  // pass iff no (relative) negative determinant
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine form_equivalence() {
  // SRK drift written through alpha must match the e^Delta form
  // e^D y + (e^D - e^{-D}) s on random inputs.
  CheckLine line{"srk-form-equivalence", false, 0.0, 1e-12};
  const NoiseStream draw(7, 0);
  std::uint64_t lane = 0;
  for (double delta : {1e-6, 1e-3, 0.05, 0.25}) {
    const auto c = coefficients(delta);
    for (int rep = 0; rep < 64; ++rep) {
      const double y = draw.normal(lane++);
      const double s = draw.normal(lane++);
      const double via_alpha =
          c.exp_delta * y + c.exp_delta * c.one_minus_alpha * s;
      const double via_exp =
          std::exp(delta) * y + 2.0 * std::sinh(delta) * s;
      line.measured =
          std::max(line.measured, std::abs(via_alpha - via_exp) /
                                      std::max(1.0, std::abs(via_exp)));
    }
  }
  line.pass = line.measured <= line.threshold;
  return line;
}

CheckLine projection_contraction() {
  CheckLine line{"projection-contraction", false, 0.0, 1e-12};
  const double horizon = 2.0;
  FinitePointSet atoms;
  atoms.atoms = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-1.0, 0.0)};
  atoms.weights = {0.5, 0.5};
  TargetSpec target(std::move(atoms));
  auto base = make_analytic_score(target, horizon);
  PerturbationSpec spec{PerturbationSpec::Kind::additive_random_smooth, 1.0,
                        21};
  auto noisy = perturbed_score(base, spec);
  auto projected = project_score(noisy);
  const double bound = 2.0 * std::sqrt(2.0);

  const NoiseStream t_draw(23, 0), x_draw(23, 1);
  double worst_ratio = 0.0, worst_bound = 0.0;
  for (std::uint64_t rep = 0; rep < 1000; ++rep) {
    const double t = 1.9 * t_draw.uniform(rep);
    Eigen::Vector2d x(2.0 * x_draw.normal(2 * rep),
                      2.0 * x_draw.normal(2 * rep + 1));
    const Eigen::VectorXd s = true_score(target, horizon, t, x);
    const double err_raw = ((*noisy)(t, x) - s).norm();
    const double err_proj = ((*projected)(t, x) - s).norm();
    worst_ratio = std::max(worst_ratio, err_proj / err_raw - 1.0);
    const auto ks = kernel_scalars(horizon - t);
    worst_bound = std::max(
        worst_bound, ks.sigma * ks.sigma / ks.lambda * err_proj / bound - 1.0);
  }
  line.measured = std::max(worst_ratio, worst_bound);
  line.pass = line.measured <= line.threshold;
  return line;
}

}  // namespace

std::vector<CheckLine> run_validation_suite(const ValidationOptions& options) {
  return {coefficient_identities(options.zeta2_scale),
          limit_recovery(),
          small_delta_monotone(),
          exponential_integrator_algebra(),
          crossover_continuity(),
          joint_covariance_psd(),
          form_equivalence(),
          projection_contraction()};
}

nlohmann::json to_json(const std::vector<CheckLine>& lines) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& line : lines)
    out.push_back({{"name", line.name},
                   {"pass", line.pass},
                   {"measured", line.measured},
                   {"threshold", line.threshold}});
  return out;
}

}  // namespace srkdiff
