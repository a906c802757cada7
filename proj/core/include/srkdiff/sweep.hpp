#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srkdiff/gaussian.hpp"
#include "srkdiff/metrics.hpp"
#include "srkdiff/samplers.hpp"
#include "srkdiff/schedule.hpp"
#include "srkdiff/score.hpp"
#include "srkdiff/targets.hpp"

namespace srkdiff {

/// Schedule selection for a run: the Corollary-1 grid (parameters decide K)
/// or a uniform grid (controlled-width sweeps).
struct ScheduleSpec {
  enum class Mode { corollary, uniform };
  Mode mode = Mode::uniform;
  ScheduleParams corollary;  // mode == corollary
  double horizon = 4.0;      // mode == uniform
  double delta_stop = 0.01;

  nlohmann::json to_json() const;
  static ScheduleSpec from_json(const nlohmann::json& j);
};

/// Declarative run configuration (single JSON file; flags override).
struct RunConfig {
  nlohmann::json target_json;  // materialized per dimension for sweep-dim
  ScheduleSpec schedule;
  std::vector<SamplerKind> samplers;
  PerturbationSpec perturbation;
  bool projection = false;
  std::uint64_t seed_base = 1;
  long seed_count = 1;
  enum class Metric { gaussian_kl, energy, moments } metric = Metric::gaussian_kl;
  std::string output;
  std::vector<long> k_list;
  std::vector<int> d_list;
  long steps = 100;  // K for sample / sweep-dim

  static RunConfig from_json(const nlohmann::json& j);
};

/// Expands the target JSON at dimension d. Explicit vector fields must match
/// d; the isotropic shorthand {"variant":"gaussian","var":v} scales with it.
TargetSpec materialize_target(const nlohmann::json& j, int d);

/// Exact mean/covariance of q_delta for any tractable target.
Moments q_delta_moments(const TargetSpec& target, double delta);

/// Direct draws from q_delta (one row per sample).
Eigen::MatrixXd sample_q_delta(const TargetSpec& target, double delta,
                               long count, std::uint64_t seed);

/// Final states of `seeds.size()` independent sampler runs (one row each),
/// executed on a worker pool; row i depends only on seeds[i].
Eigen::MatrixXd run_final_states(const TimeGrid& grid, SamplerKind kind,
                                 const ScoreField& score,
                                 std::span<const std::uint64_t> seeds);

/// Score field for a config: analytic target score, optionally perturbed and
/// projected.
std::shared_ptr<const ScoreField> build_score_field(const RunConfig& config,
                                                    const TargetSpec& target,
                                                    double horizon);

/// Thrown when a sweep cell fails; carries the rows of the cells that did
/// complete so callers can flush them before aborting.
class SweepAborted : public std::runtime_error {
 public:
  SweepAborted(const std::string& what, std::vector<SweepRow> partial)
      : std::runtime_error(what), partial_rows(std::move(partial)) {}
  std::vector<SweepRow> partial_rows;
};

/// One (kind, K) cell per configured sampler and step count; appends
/// per-kind log-log slope summary rows (K = 0).
std::vector<SweepRow> sweep_steps(const RunConfig& config);

/// One (kind, d) cell per configured sampler and dimension at fixed K;
/// appends per-kind slope-vs-d summary rows (d = 0).
std::vector<SweepRow> sweep_dim(const RunConfig& config);

/// Runs every configured seed and writes JSON-lines output (per-seed header
/// record plus one state line per recorded state).
void sample_to_jsonl(const RunConfig& config, bool record_trajectory,
                     std::ostream& out);

}  // namespace srkdiff
