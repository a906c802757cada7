#include "srkdiff/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "srkdiff/rng.hpp"

namespace srkdiff {
namespace {

void check_pair(const SampleSet& a, const SampleSet& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("energy_distance: dimension mismatch");
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("energy_distance: need at least 2 points");
}

// Mean pairwise distance over all n*m index pairs (the classical energy
// statistic keeps the zero diagonal of same-set terms, so two identical
// sample sets give exactly zero and the subsampled estimator below targets
// the same quantity).
double mean_distance_full(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  double acc = 0.0;
  for (long i = 0; i < x.rows(); ++i)
    for (long j = 0; j < y.rows(); ++j) acc += (x.row(i) - y.row(j)).norm();
  return acc / (static_cast<double>(x.rows()) * y.rows());
}

double mean_distance_subsampled(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y, std::uint64_t pairs,
                                const NoiseStream& stream) {
  const auto nx = static_cast<std::uint64_t>(x.rows());
  const auto ny = static_cast<std::uint64_t>(y.rows());
  double acc = 0.0;
  for (std::uint64_t t = 0; t < pairs; ++t) {
    const auto i = static_cast<long>(stream.bits(2 * t) % nx);
    const auto j = static_cast<long>(stream.bits(2 * t + 1) % ny);
    acc += (x.row(i) - y.row(j)).norm();
  }
  return acc / static_cast<double>(pairs);
}

double energy_distance_resampled(const Eigen::MatrixXd& xa,
                                 const Eigen::MatrixXd& xb,
                                 const EnergyOptions& options,
                                 std::uint64_t seed) {
  const auto pa = static_cast<std::uint64_t>(xa.rows()) * xa.rows();
  const auto pb = static_cast<std::uint64_t>(xb.rows()) * xb.rows();
  const auto pab = static_cast<std::uint64_t>(xa.rows()) * xb.rows();
  if (std::max({pa, pb, pab}) <= options.exact_pair_limit) {
    return 2.0 * mean_distance_full(xa, xb) - mean_distance_full(xa, xa) -
           mean_distance_full(xb, xb);
  }
  const std::uint64_t n = options.subsample_pairs;
  return 2.0 * mean_distance_subsampled(xa, xb, n, NoiseStream(seed, 1)) -
         mean_distance_subsampled(xa, xa, n, NoiseStream(seed, 2)) -
         mean_distance_subsampled(xb, xb, n, NoiseStream(seed, 3));
}

}  // namespace

double energy_distance(const SampleSet& a, const SampleSet& b,
                       const EnergyOptions& options) {
  check_pair(a, b);
  return energy_distance_resampled(a.points, b.points, options, options.seed);
}

double bootstrap_energy_se(const SampleSet& a, const SampleSet& b,
                           int replicates, const EnergyOptions& options) {
  check_pair(a, b);
  if (replicates < 2)
    throw std::invalid_argument("bootstrap_energy_se: need >= 2 replicates");
  const auto na = static_cast<std::uint64_t>(a.size());
  const auto nb = static_cast<std::uint64_t>(b.size());
  std::vector<double> values(static_cast<std::size_t>(replicates));
  Eigen::MatrixXd ra(a.points.rows(), a.points.cols());
  Eigen::MatrixXd rb(b.points.rows(), b.points.cols());
  for (int r = 0; r < replicates; ++r) {
    const std::uint64_t seed = derive_seed(options.seed, 1000 + r);
    const NoiseStream pick_a(seed, 10), pick_b(seed, 11);
    for (long i = 0; i < ra.rows(); ++i)
      ra.row(i) = a.points.row(static_cast<long>(pick_a.bits(i) % na));
    for (long i = 0; i < rb.rows(); ++i)
      rb.row(i) = b.points.row(static_cast<long>(pick_b.bits(i) % nb));
    values[static_cast<std::size_t>(r)] =
        energy_distance_resampled(ra, rb, options, derive_seed(seed, 12));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / (values.size() - 1));
}

Moments empirical_moments(const SampleSet& a) {
  if (a.size() < 2)
    throw std::invalid_argument("empirical_moments: need >= 2 points");
  Moments m;
  m.mean = a.points.colwise().mean();
  const Eigen::MatrixXd centered = a.points.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / static_cast<double>(a.size() - 1);
  return m;
}

SlopeFit loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3)
    throw std::invalid_argument("loglog_slope: need >= 3 points");
  const auto n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0) || !(y > 0))
      throw std::invalid_argument("loglog_slope: inputs must be positive");
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  SlopeFit fit;
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r_squared = vyy > 0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return fit;
}

void write_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "kind,K,d,metric,value,nfe,seed,wall_time_s\n";
  char value[64], wall[64];
  for (const auto& row : rows) {
    std::snprintf(value, sizeof(value), "%.17g", row.value);
    std::snprintf(wall, sizeof(wall), "%.17g", row.wall_time_s);
    out << row.kind << ',' << row.K << ',' << row.d << ',' << row.metric << ','
        << value << ',' << row.nfe << ',' << row.seed << ',' << wall << '\n';
  }
}

}  // namespace srkdiff
