#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "srkdiff/kernels.hpp"
#include "srkdiff/samplers.hpp"
#include "srkdiff/schedule.hpp"
#include "srkdiff/targets.hpp"

namespace srkdiff {

/// Mean and covariance of a Gaussian law, with a diagonal fast path used by
/// the convergence sweeps (the dense path is O(d^3) per step).
class GaussianLaw {
 public:
  static GaussianLaw diagonal(Eigen::VectorXd mean, Eigen::VectorXd cov_diag);
  static GaussianLaw dense(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  bool is_diagonal() const { return diagonal_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& cov_diag() const;  // diagonal laws only
  Eigen::MatrixXd cov_dense() const;        // materializes for diagonal laws

  nlohmann::json to_json() const;
  static GaussianLaw from_json(const nlohmann::json& j);

 private:
  GaussianLaw() = default;
  Eigen::VectorXd mean_;
  bool diagonal_ = true;
  Eigen::VectorXd cov_diag_;
  Eigen::MatrixXd cov_;
};

/// Exact early-stopped target law q_delta = N(lambda mu, lambda^2 S + sigma^2 I).
GaussianLaw q_delta_law(const GaussianTarget& target, double delta);

/// Affine score s(t, x) = G x + h; diagonal G when the target covariance is
/// diagonal.
struct LinearScore {
  bool diagonal = true;
  Eigen::VectorXd g_diag;
  Eigen::MatrixXd g_dense;
  Eigen::VectorXd h;
};

/// The true (linear) score of a Gaussian target at reverse time t:
/// G = -(lambda^2 S + sigma^2 I)^{-1}, h = lambda (lambda^2 S + sigma^2 I)^{-1} mu.
LinearScore gaussian_linear_score(const GaussianTarget& target, double horizon,
                                  double t);

/// One sampler step rewritten as an exact affine-Gaussian map
/// x -> A x + b + noise, valid when the score is affine at t_k.
struct AffineStep {
  bool diagonal = true;
  Eigen::VectorXd a_diag;
  Eigen::MatrixXd a_dense;
  Eigen::VectorXd b;
  Eigen::VectorXd noise_diag;
  Eigen::MatrixXd noise_dense;
};

AffineStep affine_of_step(SamplerKind kind, const CoefficientSet& coeffs,
                          const LinearScore& score, double t_k);

/// mean' = A mean + b; cov' = A cov A^T + noise (dense covariances are
/// re-symmetrized every step).
GaussianLaw propagate(const GaussianLaw& law, const AffineStep& step);

/// Folds propagate over the whole grid starting from N(0, I_d), using the
/// true linear score of the Gaussian target at each t_k. Deterministic ground
/// truth for the convergence sweeps.
GaussianLaw exact_output_law(const TimeGrid& grid, SamplerKind kind,
                             const GaussianTarget& target);

/// KL(p || q) in closed form; q must be nonsingular (min eigenvalue > 1e-12).
/// Roundoff-negative results are clamped to 0.
double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q);

}  // namespace srkdiff
