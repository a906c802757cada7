#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srkdiff/kernels.hpp"
#include "srkdiff/schedule.hpp"
#include "srkdiff/score.hpp"

namespace srkdiff {

/// The three discrete-time reverse samplers. Every kind consumes exactly one
/// score evaluation per step.
enum class SamplerKind { SRK, DdpmEI, LimitVariant };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

/// Stochastic Runge-Kutta update:
///   y' = (1/sqrt(alpha)) (y + (1 - alpha) s(t_k, y + zeta1 g1))
///        + zeta2 g1 + zeta3 g3.
Eigen::VectorXd srk_step(const Eigen::VectorXd& state,
                         const CoefficientSet& coeffs, const ScoreField& score,
                         double t_k, const Eigen::VectorXd& g1,
                         const Eigen::VectorXd& g3);

/// First-order DDPM exponential-integrator update:
///   y' = e^D y + 2 (e^D - 1) s(t_k, y) + sqrt(e^{2D} - 1) g.
Eigen::VectorXd ddpm_ei_step(const Eigen::VectorXd& state, double delta,
                             const ScoreField& score, double t_k,
                             const Eigen::VectorXd& g);

/// Comparison variant with the same update shape as srk_step but the
/// flat small-width limit coefficients zeta1 = zeta2 = zeta3 = sqrt(D).
Eigen::VectorXd limit_variant_step(const Eigen::VectorXd& state, double delta,
                                   const ScoreField& score, double t_k,
                                   const Eigen::VectorXd& g1,
                                   const Eigen::VectorXd& g3);

struct SamplerRun {
  const TimeGrid* grid = nullptr;
  SamplerKind kind = SamplerKind::SRK;
  const ScoreField* score = nullptr;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // K+1 entries when recorded
  Eigen::VectorXd final_state;
  std::size_t nfe = 0;  // score evaluations consumed (= K)
  SamplerKind kind = SamplerKind::SRK;
  std::uint64_t seed = 0;
};

/// Runs one seeded trajectory: Y_0 ~ N(0, I_d) from the stream, then the
/// kind's update over all K steps. The output is a pure function of
/// (grid, kind, score, seed). Aborts with the step index on the first
/// non-finite state.
Trajectory run_sampler(const SamplerRun& run);

/// JSON-lines export: one metadata header record, then one state per line.
void write_trajectory_jsonl(std::ostream& out, const Trajectory& trajectory,
                            int d);

}  // namespace srkdiff
