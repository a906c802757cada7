#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace srkdiff {

/// Inputs for the near-delta geometric grid construction:
/// horizon T = 1/2 log(d / eps^2) and stepsize proxy
/// kappa = min{ eps / (d^{3/2} T^{1/2}), 1/d^2 }, unless overridden.
struct ScheduleParams {
  int d = 1;                  // ambient dimension
  double eps = 0.5;           // target accuracy (KL target eps^2)
  double delta_stop = 0.1;    // early-stopping gap, in (0, 1/2)
  std::optional<double> kappa_override;  // in (0, 1/4)
  std::optional<double> T_override;      // > delta_stop
  std::size_t max_steps = 10'000'000;    // hard cap on K

  double horizon() const;
  double kappa() const;
};

/// Discretization grid 0 = t_0 < t_1 < ... < t_K = T - delta.
/// Widths are the primary representation (the construction recursions
/// produce them exactly); times are anchored cumulative sums. Deriving
/// widths from time differences instead would lose ~eps*T/Delta_min
/// relative accuracy on the smallest steps.
class TimeGrid {
 public:
  TimeGrid(std::vector<double> times, double horizon, double delta_stop,
           double kappa);
  TimeGrid(std::vector<double> times, std::vector<double> widths,
           double horizon, double delta_stop, double kappa);

  std::size_t step_count() const { return widths_.size(); }  // K
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& widths() const { return widths_; }
  double horizon() const { return horizon_; }
  double delta_stop() const { return delta_stop_; }
  double kappa() const { return kappa_; }
  double min_width() const;
  double max_width() const;

  nlohmann::json to_json() const;
  static TimeGrid from_json(const nlohmann::json& j);

 private:
  void check() const;

  std::vector<double> times_;   // K+1 entries
  std::vector<double> widths_;  // K entries, widths_[k] = times_[k+1]-times_[k]
  double horizon_;
  double delta_stop_;
  double kappa_;
};

/// One backward step of the width recursion:
/// min{ kappa, w (1 + sqrt(kappa w))^2 }.
double next_backward_width(double kappa, double width);

/// Builds the grid of Corollary 1: widths generated backward from
/// Delta_{K-1} = kappa delta^2 until the horizon is covered, then the
/// earliest (largest) step is shrunk to land exactly on t_0 = 0.
TimeGrid build_corollary_grid(const ScheduleParams& params);

/// Uniform grid with K equal widths on [0, T - delta]; kappa records the
/// common width. Widths above 1/4 are rejected.
TimeGrid build_uniform_grid(double horizon, std::size_t steps,
                            double delta_stop);

struct CheckResult {
  bool pass = true;
  std::ptrdiff_t first_violation = -1;  // step index, -1 if none
  double worst_margin = 0.0;            // max over steps of lhs/bound - 1
};

/// Per-step scan of the discretization assumptions:
///  (a) Delta_k <= kappa min{1, (T - t_{k+1})^2}
///  (b) 1.3 Delta_k + (53 Delta_k + 10 Delta_k^2)
///        (sigma^{-2} + lambda^2 sigma^{-4}) d <= 1/2   at T - t_k
///  (c) kappa d^2 <= 1
/// Check (b) carries the analysis constants and is informational: it fails
/// on most desk-scale grids even though (a) and (c) hold by construction.
struct ValidationReport {
  CheckResult step_bound;       // (a)
  CheckResult step_size_small;  // (b)
  CheckResult kappa_dim;        // (c)

  bool construction_ok() const { return step_bound.pass && kappa_dim.pass; }
  bool all_pass() const {
    return step_bound.pass && step_size_small.pass && kappa_dim.pass;
  }
};

ValidationReport validate_assumptions(const TimeGrid& grid, int d);

}  // namespace srkdiff
