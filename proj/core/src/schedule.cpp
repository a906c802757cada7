#include "srkdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srkdiff/kernels.hpp"

namespace srkdiff {
namespace {

// Relative slack for the per-step bound scans. The recursion makes the
// bound of check (a) tight at the last step, so exact comparisons would trip
// on ulp-level rounding of the cumulative times.
constexpr double kScanSlack = 1e-12;

void check_params(const ScheduleParams& p) {
  if (p.d < 1) throw std::invalid_argument("schedule: d must be >= 1");
  if (!(p.eps > 0)) throw std::invalid_argument("schedule: eps must be > 0");
  if (!(p.delta_stop > 0) || p.delta_stop >= 0.5)
    throw std::invalid_argument("schedule: delta_stop must be in (0, 0.5)");
  if (p.kappa_override &&
      (!(*p.kappa_override > 0) || *p.kappa_override >= 0.25))
    throw std::invalid_argument("schedule: kappa override must be in (0, 1/4)");
  if (p.T_override && !(*p.T_override > p.delta_stop))
    throw std::invalid_argument("schedule: T override must exceed delta_stop");
}

// Compensated accumulator for the reverse cumulative width sums; keeps the
// times consistent with the widths to a couple of ulps over ~1e6 steps.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double ScheduleParams::horizon() const {
  if (T_override) return *T_override;
  return 0.5 * std::log(static_cast<double>(d) / (eps * eps));
}

double ScheduleParams::kappa() const {
  if (kappa_override) return *kappa_override;
  const double dd = static_cast<double>(d);
  const double T = horizon();
  return std::min(eps / (std::pow(dd, 1.5) * std::sqrt(T)), 1.0 / (dd * dd));
}

TimeGrid::TimeGrid(std::vector<double> times, double horizon,
                   double delta_stop, double kappa)
    : times_(std::move(times)),
      horizon_(horizon),
      delta_stop_(delta_stop),
      kappa_(kappa) {
  if (times_.size() >= 2) {
    widths_.resize(times_.size() - 1);
    for (std::size_t k = 0; k + 1 < times_.size(); ++k)
      widths_[k] = times_[k + 1] - times_[k];
  }
  check();
}

TimeGrid::TimeGrid(std::vector<double> times, std::vector<double> widths,
                   double horizon, double delta_stop, double kappa)
    : times_(std::move(times)),
      widths_(std::move(widths)),
      horizon_(horizon),
      delta_stop_(delta_stop),
      kappa_(kappa) {
  check();
}

void TimeGrid::check() const {
  if (times_.size() < 2 || widths_.size() + 1 != times_.size())
    throw std::invalid_argument("TimeGrid: need at least one step");
  if (times_.front() != 0.0)
    throw std::invalid_argument("TimeGrid: t_0 must be exactly 0");
  const double slack = 1e-13 * std::max(1.0, horizon_);
  for (std::size_t k = 0; k < widths_.size(); ++k) {
    if (!(widths_[k] > 0))
      throw std::invalid_argument(
          "TimeGrid: times must be strictly increasing");
    if (std::abs(widths_[k] - (times_[k + 1] - times_[k])) > slack)
      throw std::invalid_argument("TimeGrid: widths inconsistent with times");
  }
}

double TimeGrid::min_width() const {
  return *std::min_element(widths_.begin(), widths_.end());
}

double TimeGrid::max_width() const {
  return *std::max_element(widths_.begin(), widths_.end());
}

nlohmann::json TimeGrid::to_json() const {
  return nlohmann::json{{"T", horizon_},
                        {"delta", delta_stop_},
                        {"kappa", kappa_},
                        {"times", times_}};
}

TimeGrid TimeGrid::from_json(const nlohmann::json& j) {
  return TimeGrid(j.at("times").get<std::vector<double>>(),
                  j.at("T").get<double>(), j.at("delta").get<double>(),
                  j.at("kappa").get<double>());
}

double next_backward_width(double kappa, double width) {
  const double grown = width * std::pow(1.0 + std::sqrt(kappa * width), 2);
  return std::min(kappa, grown);
}

TimeGrid build_corollary_grid(const ScheduleParams& params) {
  check_params(params);
  const double T = params.horizon();
  const double delta = params.delta_stop;
  const double kappa = params.kappa();
  const double span = T - delta;
  if (!(span > 0))
    throw std::invalid_argument("build_corollary_grid: T must exceed delta");

  // Widths in backward order: rev_widths[0] = Delta_{K-1} = kappa delta^2.
  // The recursion makes the step bound an exact equality along the shrinking
  // tail, so rounding of the recurrence would otherwise compound into
  // ulp-scale bound violations over long chains; each generated width is
  // shaved by 1e-13 relative to keep the computed chain strictly inside.
  constexpr double kShave = 1.0 - 1e-13;
  std::vector<double> rev_widths;
  rev_widths.push_back(kappa * delta * delta);
  KahanSum covered;
  covered.add(rev_widths.back());
  while (covered.sum < span) {
    if (rev_widths.size() >= params.max_steps)
      throw std::runtime_error(
          "build_corollary_grid: step count exceeds the hard cap; parameters "
          "are outside desk scale");
    rev_widths.push_back(next_backward_width(kappa, rev_widths.back()) *
                         kShave);
    covered.add(rev_widths.back());
  }

  // Times anchored at t_K = T - delta; the earliest step is clamped by
  // forcing t_0 = 0 and recording its width as t_1 - 0.
  const std::size_t K = rev_widths.size();
  std::vector<double> times(K + 1);
  times[K] = span;
  KahanSum acc;
  for (std::size_t j = 0; j + 1 < K; ++j) {
    acc.add(rev_widths[j]);
    times[K - 1 - j] = span - acc.sum;
  }
  times[0] = 0.0;
  std::vector<double> widths(K);
  for (std::size_t k = 1; k < K; ++k) widths[k] = rev_widths[K - 1 - k];
  widths[0] = times[1];
  return TimeGrid(std::move(times), std::move(widths), T, delta, kappa);
}

TimeGrid build_uniform_grid(double horizon, std::size_t steps,
                            double delta_stop) {
  if (steps < 1)
    throw std::invalid_argument("build_uniform_grid: need K >= 1");
  if (!(delta_stop > 0) || !(horizon > delta_stop))
    throw std::invalid_argument("build_uniform_grid: need T > delta > 0");
  const double span = horizon - delta_stop;
  const double width = span / static_cast<double>(steps);
  if (width > kMaxStepWidth)
    throw std::invalid_argument("build_uniform_grid: width " +
                                std::to_string(width) + " exceeds 1/4");
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    times[k] = span * static_cast<double>(k) / static_cast<double>(steps);
  times[0] = 0.0;
  times[steps] = span;
  return TimeGrid(std::move(times), std::vector<double>(steps, width), horizon,
                  delta_stop, width);
}

ValidationReport validate_assumptions(const TimeGrid& grid, int d) {
  ValidationReport report;
  const double T = grid.horizon();
  const double kappa = grid.kappa();
  const auto& times = grid.times();
  const auto& widths = grid.widths();
  const double dd = static_cast<double>(d);

  auto scan = [&](CheckResult& result, auto&& ratio) {
    result.worst_margin = -1.0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const double margin = ratio(k) - 1.0;
      if (margin > result.worst_margin) result.worst_margin = margin;
      if (margin > kScanSlack && result.pass) {
        result.pass = false;
        result.first_violation = static_cast<std::ptrdiff_t>(k);
      }
    }
  };

  scan(report.step_bound, [&](std::size_t k) {
    const double tail = T - times[k + 1];
    const double bound = kappa * std::min(1.0, tail * tail);
    return widths[k] / bound;
  });

  scan(report.step_size_small, [&](std::size_t k) {
    const auto [lambda, sigma] = kernel_scalars(T - times[k]);
    const double inv_s2 = 1.0 / (sigma * sigma);
    const double w = widths[k];
    const double lhs =
        1.3 * w + (53.0 * w + 10.0 * w * w) *
                      (inv_s2 + lambda * lambda * inv_s2 * inv_s2) * dd;
    return lhs / 0.5;
  });

  report.kappa_dim.worst_margin = kappa * dd * dd - 1.0;
  if (report.kappa_dim.worst_margin > kScanSlack) {
    report.kappa_dim.pass = false;
    report.kappa_dim.first_violation = 0;
  }
  return report;
}

}  // namespace srkdiff
