#include "srkdiff/score.hpp"

#include <cmath>
#include <stdexcept>

#include "srkdiff/kernels.hpp"
#include "srkdiff/rng.hpp"

namespace srkdiff {
namespace {

struct ForwardScalars {
  double lambda;
  double sigma2;
};

ForwardScalars forward_at(double horizon, double t) {
  if (!(t >= 0) || !(t < horizon))
    throw std::invalid_argument(
        "score: reverse time must lie in [0, T); sigma vanishes at t = T");
  const auto ks = kernel_scalars(horizon - t);
  return {ks.lambda, ks.sigma * ks.sigma};
}

Eigen::VectorXd finite_posterior_mean(const FinitePointSet& target,
                                      double lambda, double sigma2,
                                      const Eigen::VectorXd& x) {
  const auto n = target.atoms.size();
  Eigen::VectorXd logits(static_cast<long>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& theta = target.atoms[i];
    logits[static_cast<long>(i)] =
        std::log(target.weights[i]) +
        lambda * x.dot(theta) / sigma2 -
        lambda * lambda * theta.squaredNorm() / (2.0 * sigma2);
  }
  const double top = logits.maxCoeff();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(logits[static_cast<long>(i)] - top);
    norm += w;
    mean += w * target.atoms[i];
  }
  return mean / norm;
}

Eigen::VectorXd mixture_posterior_mean(const GaussianMixture& target,
                                       double lambda, double sigma2,
                                       const Eigen::VectorXd& x) {
  // Each component contributes N(lambda mu_i, (lambda^2 c^2 + sigma^2) I) to
  // q_{T-t}; responsibilities weight the component posterior means.
  const double v = lambda * lambda * target.component_var + sigma2;
  const auto n = target.means.size();
  Eigen::VectorXd logits(static_cast<long>(n));
  for (std::size_t i = 0; i < n; ++i)
    logits[static_cast<long>(i)] =
        std::log(target.weights[i]) -
        (x - lambda * target.means[i]).squaredNorm() / (2.0 * v);
  const double top = logits.maxCoeff();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::exp(logits[static_cast<long>(i)] - top);
    norm += r;
    mean += r * ((lambda * target.component_var * x +
                  sigma2 * target.means[i]) /
                 v);
  }
  return mean / norm;
}

class AnalyticScore : public ScoreField {
 public:
  AnalyticScore(TargetSpec target, double horizon)
      : target_(std::move(target)), horizon_(horizon) {
    if (!(horizon > 0))
      throw std::invalid_argument("score: horizon must be > 0");
  }

  double horizon() const override { return horizon_; }
  int dim() const override { return target_.dim(); }
  bool bounded_support() const override { return target_.bounded_support(); }

 protected:
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& x) const override {
    return true_score(target_, horizon_, t, x);
  }

 private:
  TargetSpec target_;
  double horizon_;
};

class PerturbedScore : public ScoreField {
 public:
  PerturbedScore(std::shared_ptr<const ScoreField> base, PerturbationSpec spec)
      : base_(std::move(base)), spec_(spec) {
    if (spec_.magnitude < 0)
      throw std::invalid_argument("perturbation: magnitude must be >= 0");
    const int d = base_->dim();
    fixed_direction_ = NoiseStream(spec_.seed, 0).normal_vector(d);
    fixed_direction_.normalize();
    // Random Fourier feature field for the smooth kind: a fixed seeded draw
    // of directions, frequencies and phases.
    freqs_.resize(kFeatures);
    amps_.resize(kFeatures);
    for (int j = 0; j < kFeatures; ++j) {
      freqs_[j] = NoiseStream(spec_.seed, 2 * j + 1).normal_vector(d);
      amps_[j] = NoiseStream(spec_.seed, 2 * j + 2).normal_vector(d);
      const NoiseStream aux(spec_.seed, 1000 + j);
      phases_.push_back(2.0 * M_PI * aux.uniform(0));
      rates_.push_back(aux.normal(2));
    }
  }

  double horizon() const override { return base_->horizon(); }
  int dim() const override { return base_->dim(); }
  bool bounded_support() const override { return base_->bounded_support(); }

 protected:
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& x) const override {
    Eigen::VectorXd s = (*base_)(t, x);
    if (spec_.kind == PerturbationSpec::Kind::none || spec_.magnitude == 0.0)
      return s;
    if (spec_.kind == PerturbationSpec::Kind::additive_fixed_direction)
      return s + spec_.magnitude * fixed_direction_;

    Eigen::VectorXd dir = Eigen::VectorXd::Zero(x.size());
    for (int j = 0; j < kFeatures; ++j)
      dir += amps_[j] * std::sin(freqs_[j].dot(x) + rates_[j] * t + phases_[j]);
    const double norm = dir.norm();
    if (norm < 1e-12) dir = fixed_direction_; else dir /= norm;
    return s + spec_.magnitude * dir;
  }

 private:
  static constexpr int kFeatures = 8;
  std::shared_ptr<const ScoreField> base_;
  PerturbationSpec spec_;
  Eigen::VectorXd fixed_direction_;
  std::vector<Eigen::VectorXd> freqs_;
  std::vector<Eigen::VectorXd> amps_;
  std::vector<double> phases_;
  std::vector<double> rates_;
};

class ProjectedScore : public ScoreField {
 public:
  explicit ProjectedScore(std::shared_ptr<const ScoreField> base)
      : base_(std::move(base)), radius_(std::sqrt(base_->dim())) {
    if (!base_->bounded_support())
      throw std::invalid_argument(
          "project_score: target does not assert bounded support");
  }

  double horizon() const override { return base_->horizon(); }
  int dim() const override { return base_->dim(); }
  bool bounded_support() const override { return true; }

 protected:
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& y) const override {
    const auto [lambda, sigma2] = forward_at(horizon(), t);
    Eigen::VectorXd m = (sigma2 * (*base_)(t, y) + y) / lambda;
    const double norm = m.norm();
    if (norm > radius_) m *= radius_ / norm;
    return (lambda * m - y) / sigma2;
  }

 private:
  std::shared_ptr<const ScoreField> base_;
  double radius_;
};

}  // namespace

Eigen::VectorXd ScoreField::operator()(double t,
                                       const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("score: state dimension mismatch");
  return eval(t, x);
}

Eigen::VectorXd posterior_mean(const TargetSpec& target, double horizon,
                               double t, const Eigen::VectorXd& x) {
  const auto [lambda, sigma2] = forward_at(horizon, t);
  if (const auto* g = target.as_gaussian()) {
    // Conjugate closed form, diagonal covariance.
    const Eigen::ArrayXd denom =
        lambda * lambda * g->cov_diag.array() + sigma2;
    return ((lambda * g->cov_diag.array() * x.array() +
             sigma2 * g->mean.array()) /
            denom)
        .matrix();
  }
  if (const auto* f = target.as_finite())
    return finite_posterior_mean(*f, lambda, sigma2, x);
  return mixture_posterior_mean(*target.as_mixture(), lambda, sigma2, x);
}

Eigen::VectorXd true_score(const TargetSpec& target, double horizon, double t,
                           const Eigen::VectorXd& x) {
  const auto [lambda, sigma2] = forward_at(horizon, t);
  return (lambda * posterior_mean(target, horizon, t, x) - x) / sigma2;
}

std::shared_ptr<const ScoreField> make_analytic_score(TargetSpec target,
                                                      double horizon) {
  return std::make_shared<AnalyticScore>(std::move(target), horizon);
}

std::shared_ptr<const ScoreField> perturbed_score(
    std::shared_ptr<const ScoreField> base, const PerturbationSpec& spec) {
  return std::make_shared<PerturbedScore>(std::move(base), spec);
}

std::shared_ptr<const ScoreField> project_score(
    std::shared_ptr<const ScoreField> base) {
  return std::make_shared<ProjectedScore>(std::move(base));
}

nlohmann::json PerturbationSpec::to_json() const {
  const char* name = kind == Kind::none ? "none"
                     : kind == Kind::additive_fixed_direction ? "fixed"
                                                              : "smooth";
  return {{"kind", name}, {"magnitude", magnitude}, {"seed", seed}};
}

PerturbationSpec PerturbationSpec::from_json(const nlohmann::json& j) {
  PerturbationSpec spec;
  const auto name = j.value("kind", std::string("none"));
  if (name == "none")
    spec.kind = Kind::none;
  else if (name == "fixed")
    spec.kind = Kind::additive_fixed_direction;
  else if (name == "smooth")
    spec.kind = Kind::additive_random_smooth;
  else
    throw std::invalid_argument("perturbation: unknown kind '" + name + "'");
  spec.magnitude = j.value("magnitude", 0.0);
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

}  // namespace srkdiff
