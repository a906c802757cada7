#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace srkdiff {

/// Gaussian target N(mean, diag(cov_diag)).
struct GaussianTarget {
  Eigen::VectorXd mean;
  Eigen::VectorXd cov_diag;  // per-coordinate variances, >= 0
};

/// Finite point set sum_i w_i delta_{theta_i}.
struct FinitePointSet {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;
};

/// Mixture sum_i w_i N(mu_i, c^2 I) with a shared isotropic component
/// variance.
struct GaussianMixture {
  std::vector<Eigen::VectorXd> means;
  std::vector<double> weights;
  double component_var = 1.0;
};

/// Tagged union of the tractable targets. Construction validates shapes and
/// weight normalization (weights must sum to 1 within 1e-12).
class TargetSpec {
 public:
  explicit TargetSpec(GaussianTarget g);
  explicit TargetSpec(FinitePointSet f);
  explicit TargetSpec(GaussianMixture m);

  int dim() const { return dim_; }

  bool is_gaussian() const;
  const GaussianTarget* as_gaussian() const;
  const FinitePointSet* as_finite() const;
  const GaussianMixture* as_mixture() const;

  /// True when every atom of a finite target lies in the ball of radius
  /// sqrt(d) (the bounded-support normalization R = sqrt(d)).
  bool bounded_support() const;

  nlohmann::json to_json() const;
  static TargetSpec from_json(const nlohmann::json& j);

  template <class Visitor>
  decltype(auto) visit(Visitor&& v) const {
    return std::visit(std::forward<Visitor>(v), value_);
  }

 private:
  std::variant<GaussianTarget, FinitePointSet, GaussianMixture> value_;
  int dim_ = 0;
};

}  // namespace srkdiff
