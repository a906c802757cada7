#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace srkdiff {

/// A set of d-dimensional sample points (one row per point).
struct SampleSet {
  Eigen::MatrixXd points;
  std::string label;

  int dim() const { return static_cast<int>(points.cols()); }
  long size() const { return points.rows(); }
};

struct EnergyOptions {
  // Full U-statistic below this pair count, deterministic subsampling above.
  std::uint64_t exact_pair_limit = std::uint64_t{1} << 24;
  std::uint64_t subsample_pairs = std::uint64_t{1} << 20;
  std::uint64_t seed = 0x5eedULL;
};

/// Energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'| between two sample
/// sets: the classical two-sample energy statistic (all-pairs means), or
/// seeded pair subsampling above the size threshold.
double energy_distance(const SampleSet& a, const SampleSet& b,
                       const EnergyOptions& options = {});

/// Bootstrap standard error of energy_distance under resampling of both
/// point sets; deterministic given the options seed.
double bootstrap_energy_se(const SampleSet& a, const SampleSet& b,
                           int replicates, const EnergyOptions& options = {});

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (n-1 normalization)
};

Moments empirical_moments(const SampleSet& a);

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

/// Ordinary least squares on (ln x, ln y); needs >= 3 strictly positive
/// points.
SlopeFit loglog_slope(std::span<const std::pair<double, double>> points);

/// One row of a convergence-study table.
struct SweepRow {
  std::string kind;
  long K = 0;
  int d = 0;
  std::string metric;
  double value = 0;
  long nfe = 0;
  std::uint64_t seed = 0;
  double wall_time_s = 0;
};

/// CSV with header kind,K,d,metric,value,nfe,seed,wall_time_s; numeric
/// values rendered with 17 significant digits.
void write_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace srkdiff
