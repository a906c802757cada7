#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace srkdiff {

/// Forward OU kernel scalars at time t: signal coefficient lambda_t = e^{-t}
/// and noise scale sigma_t = sqrt(1 - e^{-2t}). They satisfy
/// lambda^2 + sigma^2 = 1.
struct KernelScalars {
  double lambda;
  double sigma;
};

KernelScalars kernel_scalars(double t);

/// Covariance scalars of the Brownian-integral pair over one step of width
/// delta:
///   f1 = Var[ \int_0^D e^{D-r} (W_r) dr ]        (per coordinate)
///   f2 = Var[ \int_0^D e^{D-r} dW_r ]
///   f3 = Cov of the two integrals above
/// Closed forms:
///   f1 = e^{2D}/2 - 2 e^D + D + 3/2
///   f2 = e^{2D}/2 - 1/2
///   f3 = e^{2D}/2 - e^D + 1/2
struct CovarianceTriple {
  double f1;
  double f2;
  double f3;
};

CovarianceTriple covariance_functions(double delta);

// Below this width the f-functions switch from the exponential closed forms
// to truncated Taylor series. The closed form of f1 cancels three leading
// orders and keeps only ~12 digits near the crossover; the series branch is
// exact to roundoff for all widths up to kMaxStepWidth.
inline constexpr double kSeriesCrossover = 0.125;

// Assumption cap on step widths (kappa < 1/4); coefficients() rejects wider
// steps rather than extrapolating.
inline constexpr double kMaxStepWidth = 0.25;

/// Per-step sampler coefficients derived from the f-functions:
///   zeta1 = 2 sqrt(2) sqrt(f1) / (e^D - e^{-D})
///   zeta2 = sqrt(2) f3 / sqrt(f1)
///   zeta3 = sqrt(2 f2 - 2 f3^2 / f1)
/// together with alpha = e^{-2D} and helpers used by the update rules.
struct CoefficientSet {
  double delta = 0;
  double alpha = 0;            // e^{-2 delta}
  double one_minus_alpha = 0;  // -expm1(-2 delta), no cancellation
  double exp_delta = 0;        // e^{delta} = 1/sqrt(alpha)
  double zeta1 = 0;
  double zeta2 = 0;
  double zeta3 = 0;
  double f1 = 0;
  double f2 = 0;
  double f3 = 0;
};

CoefficientSet coefficients(double delta);

/// Per-coordinate covariance of the pair (g_{t_k,t_{k+1}}, sqrt(2) \int
/// e^{D-r} dW): [[zeta1^2, zeta1*zeta2], [zeta1*zeta2, zeta2^2 + zeta3^2]].
/// Always positive semidefinite.
Eigen::Matrix2d joint_noise_covariance(double delta);

/// Immutable per-step coefficient cache for a fixed sequence of widths.
/// Coefficients are precomputed once at construction so runs are
/// bit-reproducible regardless of evaluation order.
class CoefficientTable {
 public:
  explicit CoefficientTable(std::span<const double> widths);

  const CoefficientSet& at(std::size_t step) const { return sets_.at(step); }
  std::size_t size() const { return sets_.size(); }

 private:
  std::vector<CoefficientSet> sets_;
};

}  // namespace srkdiff
