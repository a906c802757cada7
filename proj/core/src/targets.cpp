#include "srkdiff/targets.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srkdiff {
namespace {

void check_weights(const std::vector<double>& w) {
  if (w.empty()) throw std::invalid_argument("target: empty weight list");
  double sum = 0.0;
  for (double x : w) {
    if (!(x > 0)) throw std::invalid_argument("target: weights must be > 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("target: weights must sum to 1 (got " +
                                std::to_string(sum) + ")");
}

int common_dim(const std::vector<Eigen::VectorXd>& vs) {
  if (vs.empty()) throw std::invalid_argument("target: empty vector list");
  const auto d = vs.front().size();
  for (const auto& v : vs)
    if (v.size() != d)
      throw std::invalid_argument("target: inconsistent dimensions");
  return static_cast<int>(d);
}

std::vector<Eigen::VectorXd> vectors_from_json(const nlohmann::json& j) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& row : j) {
    auto v = row.get<std::vector<double>>();
    out.push_back(Eigen::Map<Eigen::VectorXd>(v.data(),
                                              static_cast<long>(v.size())));
  }
  return out;
}

nlohmann::json vectors_to_json(const std::vector<Eigen::VectorXd>& vs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : vs)
    out.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return out;
}

}  // namespace

TargetSpec::TargetSpec(GaussianTarget g) : value_(std::move(g)) {
  const auto& t = std::get<GaussianTarget>(value_);
  if (t.mean.size() == 0 || t.mean.size() != t.cov_diag.size())
    throw std::invalid_argument("gaussian target: mean/cov size mismatch");
  if ((t.cov_diag.array() < 0).any())
    throw std::invalid_argument("gaussian target: negative variance");
  dim_ = static_cast<int>(t.mean.size());
}

TargetSpec::TargetSpec(FinitePointSet f) : value_(std::move(f)) {
  const auto& t = std::get<FinitePointSet>(value_);
  dim_ = common_dim(t.atoms);
  if (t.atoms.size() != t.weights.size())
    throw std::invalid_argument("finite target: atom/weight count mismatch");
  check_weights(t.weights);
}

TargetSpec::TargetSpec(GaussianMixture m) : value_(std::move(m)) {
  const auto& t = std::get<GaussianMixture>(value_);
  dim_ = common_dim(t.means);
  if (t.means.size() != t.weights.size())
    throw std::invalid_argument("mixture target: mean/weight count mismatch");
  check_weights(t.weights);
  if (!(t.component_var > 0))
    throw std::invalid_argument("mixture target: component_var must be > 0");
}

bool TargetSpec::is_gaussian() const {
  return std::holds_alternative<GaussianTarget>(value_);
}

const GaussianTarget* TargetSpec::as_gaussian() const {
  return std::get_if<GaussianTarget>(&value_);
}

const FinitePointSet* TargetSpec::as_finite() const {
  return std::get_if<FinitePointSet>(&value_);
}

const GaussianMixture* TargetSpec::as_mixture() const {
  return std::get_if<GaussianMixture>(&value_);
}

bool TargetSpec::bounded_support() const {
  const auto* f = as_finite();
  if (!f) return false;
  const double radius = std::sqrt(static_cast<double>(dim_));
  for (const auto& atom : f->atoms)
    if (atom.norm() > radius) return false;
  return true;
}

nlohmann::json TargetSpec::to_json() const {
  return visit([](const auto& t) -> nlohmann::json {
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, GaussianTarget>) {
      return {{"variant", "gaussian"},
              {"mean", std::vector<double>(t.mean.data(),
                                           t.mean.data() + t.mean.size())},
              {"cov_diag",
               std::vector<double>(t.cov_diag.data(),
                                   t.cov_diag.data() + t.cov_diag.size())}};
    } else if constexpr (std::is_same_v<T, FinitePointSet>) {
      return {{"variant", "finite"},
              {"atoms", vectors_to_json(t.atoms)},
              {"weights", t.weights}};
    } else {
      return {{"variant", "mixture"},
              {"means", vectors_to_json(t.means)},
              {"weights", t.weights},
              {"component_var", t.component_var}};
    }
  });
}

TargetSpec TargetSpec::from_json(const nlohmann::json& j) {
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "gaussian") {
    auto mean = j.at("mean").get<std::vector<double>>();
    auto cov = j.at("cov_diag").get<std::vector<double>>();
    GaussianTarget g;
    g.mean = Eigen::Map<Eigen::VectorXd>(mean.data(),
                                         static_cast<long>(mean.size()));
    g.cov_diag =
        Eigen::Map<Eigen::VectorXd>(cov.data(), static_cast<long>(cov.size()));
    return TargetSpec(std::move(g));
  }
  if (variant == "finite") {
    FinitePointSet f;
    f.atoms = vectors_from_json(j.at("atoms"));
    f.weights = j.at("weights").get<std::vector<double>>();
    return TargetSpec(std::move(f));
  }
  if (variant == "mixture") {
    GaussianMixture m;
    m.means = vectors_from_json(j.at("means"));
    m.weights = j.at("weights").get<std::vector<double>>();
    m.component_var = j.at("component_var").get<double>();
    return TargetSpec(std::move(m));
  }
  throw std::invalid_argument("target: unknown variant '" + variant + "'");
}

}  // namespace srkdiff
