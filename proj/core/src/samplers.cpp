#include "srkdiff/samplers.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "srkdiff/rng.hpp"

namespace srkdiff {
namespace {

void require_finite(const Eigen::VectorXd& state, const char* where) {
  if (!state.allFinite())
    throw std::invalid_argument(std::string(where) +
                                ": non-finite state (upstream blow-up?)");
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::SRK: return "srk";
    case SamplerKind::DdpmEI: return "ddpm_ei";
    case SamplerKind::LimitVariant: return "limit_variant";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "srk") return SamplerKind::SRK;
  if (name == "ddpm_ei" || name == "ddpm") return SamplerKind::DdpmEI;
  if (name == "limit_variant" || name == "limit")
    return SamplerKind::LimitVariant;
  throw std::invalid_argument("unknown sampler kind '" + name + "'");
}

Eigen::VectorXd srk_step(const Eigen::VectorXd& state,
                         const CoefficientSet& coeffs, const ScoreField& score,
                         double t_k, const Eigen::VectorXd& g1,
                         const Eigen::VectorXd& g3) {
  require_finite(state, "srk_step");
  const Eigen::VectorXd shifted = state + coeffs.zeta1 * g1;
  const Eigen::VectorXd s = score(t_k, shifted);
  return coeffs.exp_delta * (state + coeffs.one_minus_alpha * s) +
         coeffs.zeta2 * g1 + coeffs.zeta3 * g3;
}

Eigen::VectorXd ddpm_ei_step(const Eigen::VectorXd& state, double delta,
                             const ScoreField& score, double t_k,
                             const Eigen::VectorXd& g) {
  require_finite(state, "ddpm_ei_step");
  const Eigen::VectorXd s = score(t_k, state);
  return std::exp(delta) * state + 2.0 * std::expm1(delta) * s +
         std::sqrt(std::expm1(2.0 * delta)) * g;
}

Eigen::VectorXd limit_variant_step(const Eigen::VectorXd& state, double delta,
                                   const ScoreField& score, double t_k,
                                   const Eigen::VectorXd& g1,
                                   const Eigen::VectorXd& g3) {
  require_finite(state, "limit_variant_step");
  const double zeta = std::sqrt(delta);
  const double exp_delta = std::exp(delta);
  const Eigen::VectorXd s = score(t_k, state + zeta * g1);
  return exp_delta * (state + (-std::expm1(-2.0 * delta)) * s) +
         zeta * (g1 + g3);
}

Trajectory run_sampler(const SamplerRun& run) {
  if (!run.grid || !run.score)
    throw std::invalid_argument("run_sampler: grid and score are required");
  const TimeGrid& grid = *run.grid;
  const ScoreField& score = *run.score;
  const int d = score.dim();
  if (std::abs(score.horizon() - grid.horizon()) > 1e-12)
    throw std::invalid_argument(
        "run_sampler: score horizon does not match the grid");

  const std::size_t K = grid.step_count();
  CoefficientTable coeffs(run.kind == SamplerKind::SRK
                              ? std::span<const double>(grid.widths())
                              : std::span<const double>{});

  Trajectory out;
  out.kind = run.kind;
  out.seed = run.seed;
  out.nfe = K;

  Eigen::VectorXd state =
      NoiseStream(run.seed, NoiseStream::stream_id(0, 0)).normal_vector(d);
  if (run.record_trajectory) out.states.push_back(state);

  Eigen::VectorXd g1(d), g3(d);
  for (std::size_t k = 0; k < K; ++k) {
    const double t_k = grid.times()[k];
    const double width = grid.widths()[k];
    NoiseStream(run.seed, NoiseStream::stream_id(k, 1)).fill_normal(g1);
    try {
      switch (run.kind) {
        case SamplerKind::SRK:
          NoiseStream(run.seed, NoiseStream::stream_id(k, 2)).fill_normal(g3);
          state = srk_step(state, coeffs.at(k), score, t_k, g1, g3);
          break;
        case SamplerKind::DdpmEI:
          state = ddpm_ei_step(state, width, score, t_k, g1);
          break;
        case SamplerKind::LimitVariant:
          NoiseStream(run.seed, NoiseStream::stream_id(k, 2)).fill_normal(g3);
          state = limit_variant_step(state, width, score, t_k, g1, g3);
          break;
      }
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("run_sampler: aborted at step " +
                               std::to_string(k) + ": " + e.what());
    }
    if (!state.allFinite())
      throw std::runtime_error("run_sampler: non-finite state after step " +
                               std::to_string(k));
    if (run.record_trajectory) out.states.push_back(state);
  }
  out.final_state = std::move(state);
  return out;
}

void write_trajectory_jsonl(std::ostream& out, const Trajectory& trajectory,
                            int d) {
  nlohmann::json header{{"kind", to_string(trajectory.kind)},
                        {"seed", trajectory.seed},
                        {"K", trajectory.nfe},
                        {"d", d}};
  out << header.dump() << '\n';
  auto dump_state = [&](const Eigen::VectorXd& v) {
    out << nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()))
               .dump()
        << '\n';
  };
  if (trajectory.states.empty())
    dump_state(trajectory.final_state);
  else
    for (const auto& s : trajectory.states) dump_state(s);
}

}  // namespace srkdiff
