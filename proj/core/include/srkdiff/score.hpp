#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "srkdiff/targets.hpp"

namespace srkdiff {

/// Evaluatable score map (reverse time t in [0, T), state x) -> s(t, x).
/// Fields are immutable after construction and safe for concurrent
/// evaluation.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const;

  virtual double horizon() const = 0;
  virtual int dim() const = 0;
  virtual bool bounded_support() const = 0;

 protected:
  virtual Eigen::VectorXd eval(double t, const Eigen::VectorXd& x) const = 0;
};

/// Posterior mean m(t, x) = E[theta | lambda_{T-t} theta + sigma_{T-t} g = x]
/// of the target given the noisy observation x at reverse time t.
Eigen::VectorXd posterior_mean(const TargetSpec& target, double horizon,
                               double t, const Eigen::VectorXd& x);

/// Ground-truth score through the parametric form
/// s(t, x) = (lambda_{T-t} m(t, x) - x) / sigma_{T-t}^2.
Eigen::VectorXd true_score(const TargetSpec& target, double horizon, double t,
                           const Eigen::VectorXd& x);

std::shared_ptr<const ScoreField> make_analytic_score(TargetSpec target,
                                                      double horizon);

/// Score-error injection, playing the role of eps_score. The error is a
/// deterministic function of (t, x, seed); its L2 norm equals `magnitude`
/// everywhere.
struct PerturbationSpec {
  enum class Kind { none, additive_fixed_direction, additive_random_smooth };
  Kind kind = Kind::none;
  double magnitude = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static PerturbationSpec from_json(const nlohmann::json& j);
};

std::shared_ptr<const ScoreField> perturbed_score(
    std::shared_ptr<const ScoreField> base, const PerturbationSpec& spec);

/// Projection wrapper: recovers m_hat = (sigma^2 s_hat + y) / lambda,
/// projects it onto the ball of radius sqrt(d), and re-encodes the score.
/// Never increases the score error and is idempotent. Requires a
/// bounded-support target.
std::shared_ptr<const ScoreField> project_score(
    std::shared_ptr<const ScoreField> base);

/// Forwarding wrapper that counts evaluations (NFE accounting in tests and
/// diagnostics).
class CountingScore : public ScoreField {
 public:
  explicit CountingScore(std::shared_ptr<const ScoreField> base)
      : base_(std::move(base)) {}

  double horizon() const override { return base_->horizon(); }
  int dim() const override { return base_->dim(); }
  bool bounded_support() const override { return base_->bounded_support(); }
  std::uint64_t count() const { return count_.load(); }

 protected:
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& x) const override {
    count_.fetch_add(1, std::memory_order_relaxed);
    return (*base_)(t, x);
  }

 private:
  std::shared_ptr<const ScoreField> base_;
  mutable std::atomic<std::uint64_t> count_{0};
};

}  // namespace srkdiff
