#include "srkdiff/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace srkdiff {
namespace {

// Taylor coefficients of the f-functions about 0. All terms are positive, so
// the series evaluate without cancellation:
//   f1 = sum_{n>=3} (2^{n-1} - 2) D^n / n!
//   f2 = sum_{n>=1} (2^{n-1})     D^n / n!
//   f3 = sum_{n>=2} (2^{n-1} - 1) D^n / n!
// Truncating at n = 17 leaves a relative tail below 1e-18 for D <= 0.25.
constexpr int kSeriesOrder = 17;

struct SeriesTables {
  double f1[kSeriesOrder + 1] = {};
  double f2[kSeriesOrder + 1] = {};
  double f3[kSeriesOrder + 1] = {};
};

constexpr SeriesTables make_series_tables() {
  SeriesTables t;
  double factorial = 1.0;
  double pow2 = 0.5;  // 2^{n-1}
  for (int n = 1; n <= kSeriesOrder; ++n) {
    factorial *= n;
    pow2 *= 2.0;
    t.f1[n] = (pow2 - 2.0) / factorial;
    t.f2[n] = pow2 / factorial;
    t.f3[n] = (pow2 - 1.0) / factorial;
  }
  return t;
}

constexpr SeriesTables kSeries = make_series_tables();

double horner(const double* c, int lo, int hi, double x) {
  double acc = 0.0;
  for (int n = hi; n >= lo; --n) acc = acc * x + c[n];
  return acc;
}

CovarianceTriple covariance_series(double d) {
  const double d2 = d * d;
  return {
      horner(kSeries.f1, 3, kSeriesOrder, d) * d2 * d,
      horner(kSeries.f2, 1, kSeriesOrder, d) * d,
      horner(kSeries.f3, 2, kSeriesOrder, d) * d2,
  };
}

CovarianceTriple covariance_closed(double d) {
  // Reduced through u = expm1(D) so that only f1 retains a (mild) leading
  // cancellation: f1 = u^2/2 - u + D, f2 = expm1(2D)/2, f3 = u^2/2.
  const double u = std::expm1(d);
  const double half_u2 = 0.5 * u * u;
  return {half_u2 - u + d, 0.5 * std::expm1(2.0 * d), half_u2};
}

}  // namespace

KernelScalars kernel_scalars(double t) {
  if (!(t >= 0)) throw std::invalid_argument("kernel_scalars: t must be >= 0");
  return {std::exp(-t), std::sqrt(-std::expm1(-2.0 * t))};
}

CovarianceTriple covariance_functions(double delta) {
  if (!(delta > 0))
    throw std::invalid_argument("covariance_functions: delta must be > 0");
  return delta < kSeriesCrossover ? covariance_series(delta)
                                  : covariance_closed(delta);
}

CoefficientSet coefficients(double delta) {
  if (!(delta > 0) || delta > kMaxStepWidth)
    throw std::invalid_argument("coefficients: delta must be in (0, " +
                                std::to_string(kMaxStepWidth) + "], got " +
                                std::to_string(delta));
  const auto [f1, f2, f3] = covariance_functions(delta);

  CoefficientSet c;
  c.delta = delta;
  c.alpha = std::exp(-2.0 * delta);
  c.one_minus_alpha = -std::expm1(-2.0 * delta);
  c.exp_delta = std::exp(delta);
  c.f1 = f1;
  c.f2 = f2;
  c.f3 = f3;

  const double spread = 2.0 * std::sinh(delta);  // e^D - e^{-D}
  const double sqrt_f1 = std::sqrt(f1);
  c.zeta1 = 2.0 * std::sqrt(2.0) * sqrt_f1 / spread;
  c.zeta2 = std::sqrt(2.0) * f3 / sqrt_f1;

  double radicand = 2.0 * f2 - 2.0 * f3 * f3 / f1;
  if (radicand < 0) {
    // f1 f2 >= f3^2 holds analytically; anything below the roundoff guard
    // means the f-evaluation itself is broken.
    if (radicand < -1e-14)
      throw std::logic_error("coefficients: zeta3 radicand " +
                             std::to_string(radicand) + " at delta " +
                             std::to_string(delta));
    radicand = 0.0;
  }
  c.zeta3 = std::sqrt(radicand);
  return c;
}

Eigen::Matrix2d joint_noise_covariance(double delta) {
  if (!(delta > 0))
    throw std::invalid_argument("joint_noise_covariance: delta must be > 0");
  const auto [f1, f2, f3] = covariance_functions(delta);
  const double spread = 2.0 * std::sinh(delta);
  Eigen::Matrix2d cov;
  cov(0, 0) = 8.0 * f1 / (spread * spread);
  cov(0, 1) = cov(1, 0) = 4.0 * f3 / spread;
  cov(1, 1) = 2.0 * f2;
  return cov;
}

CoefficientTable::CoefficientTable(std::span<const double> widths) {
  sets_.reserve(widths.size());
  for (double w : widths) sets_.push_back(coefficients(w));
}

}  // namespace srkdiff
