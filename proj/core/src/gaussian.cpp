#include "srkdiff/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace srkdiff {
namespace {

constexpr double kMinEigenvalue = 1e-12;

void check_symmetric_psd(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols())
    throw std::invalid_argument("gaussian law: covariance must be square");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("gaussian law: covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov,
                                                    Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw std::invalid_argument("gaussian law: covariance must be PSD");
}

}  // namespace

GaussianLaw GaussianLaw::diagonal(Eigen::VectorXd mean,
                                  Eigen::VectorXd cov_diag) {
  if (mean.size() != cov_diag.size())
    throw std::invalid_argument("gaussian law: mean/cov size mismatch");
  if ((cov_diag.array() < -1e-10).any())
    throw std::invalid_argument("gaussian law: negative variance");
  GaussianLaw law;
  law.mean_ = std::move(mean);
  law.cov_diag_ = std::move(cov_diag);
  law.diagonal_ = true;
  return law;
}

GaussianLaw GaussianLaw::dense(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  if (mean.size() != cov.rows())
    throw std::invalid_argument("gaussian law: mean/cov size mismatch");
  check_symmetric_psd(cov);
  GaussianLaw law;
  law.mean_ = std::move(mean);
  law.cov_ = std::move(cov);
  law.diagonal_ = false;
  return law;
}

const Eigen::VectorXd& GaussianLaw::cov_diag() const {
  if (!diagonal_)
    throw std::logic_error("gaussian law: dense law has no diagonal view");
  return cov_diag_;
}

Eigen::MatrixXd GaussianLaw::cov_dense() const {
  if (diagonal_) return cov_diag_.asDiagonal();
  return cov_;
}

nlohmann::json GaussianLaw::to_json() const {
  nlohmann::json j{{"mean", std::vector<double>(
                                mean_.data(), mean_.data() + mean_.size())}};
  if (diagonal_) {
    j["diag"] = std::vector<double>(cov_diag_.data(),
                                    cov_diag_.data() + cov_diag_.size());
  } else {
    std::vector<double> flat(cov_.size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>(flat.data(), cov_.rows(),
                                               cov_.cols()) = cov_;
    j["cov"] = flat;
  }
  return j;
}

GaussianLaw GaussianLaw::from_json(const nlohmann::json& j) {
  auto mean_v = j.at("mean").get<std::vector<double>>();
  Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd>(
      mean_v.data(), static_cast<long>(mean_v.size()));
  if (j.contains("diag")) {
    auto diag_v = j.at("diag").get<std::vector<double>>();
    return diagonal(std::move(mean),
                    Eigen::Map<Eigen::VectorXd>(
                        diag_v.data(), static_cast<long>(diag_v.size())));
  }
  auto flat = j.at("cov").get<std::vector<double>>();
  const long d = mean.size();
  if (static_cast<long>(flat.size()) != d * d)
    throw std::invalid_argument("gaussian law: cov size mismatch");
  Eigen::MatrixXd cov =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>(flat.data(), d, d);
  return dense(std::move(mean), std::move(cov));
}

GaussianLaw q_delta_law(const GaussianTarget& target, double delta) {
  if (!(delta > 0))
    throw std::invalid_argument("q_delta_law: delta must be > 0");
  const auto ks = kernel_scalars(delta);
  const double lam2 = ks.lambda * ks.lambda;
  const double sig2 = ks.sigma * ks.sigma;
  return GaussianLaw::diagonal(
      ks.lambda * target.mean,
      (lam2 * target.cov_diag.array() + sig2).matrix());
}

LinearScore gaussian_linear_score(const GaussianTarget& target, double horizon,
                                  double t) {
  if (!(t >= 0) || !(t < horizon))
    throw std::invalid_argument("gaussian_linear_score: t must be in [0, T)");
  const auto ks = kernel_scalars(horizon - t);
  const double lam2 = ks.lambda * ks.lambda;
  const double sig2 = ks.sigma * ks.sigma;
  LinearScore score;
  const Eigen::ArrayXd denom = lam2 * target.cov_diag.array() + sig2;
  score.g_diag = (-1.0 / denom).matrix();
  score.h = (ks.lambda * target.mean.array() / denom).matrix();
  return score;
}

AffineStep affine_of_step(SamplerKind kind, const CoefficientSet& coeffs,
                          const LinearScore& score, double /*t_k*/) {
  const long d = score.h.size();
  AffineStep step;
  step.diagonal = score.diagonal;

  const double delta = coeffs.delta;
  const double inv_sqrt_alpha = coeffs.exp_delta;
  const double oma = coeffs.one_minus_alpha;
  double z1 = coeffs.zeta1, z2 = coeffs.zeta2, z3 = coeffs.zeta3;
  if (kind == SamplerKind::LimitVariant) z1 = z2 = z3 = std::sqrt(delta);

  if (kind == SamplerKind::DdpmEI) {
    const double two_em1 = 2.0 * std::expm1(delta);
    const double noise = std::expm1(2.0 * delta);
    step.b = two_em1 * score.h;
    if (score.diagonal) {
      step.a_diag = (std::exp(delta) + two_em1 * score.g_diag.array()).matrix();
      step.noise_diag = Eigen::VectorXd::Constant(d, noise);
    } else {
      step.a_dense = std::exp(delta) * Eigen::MatrixXd::Identity(d, d) +
                     two_em1 * score.g_dense;
      step.noise_dense = noise * Eigen::MatrixXd::Identity(d, d);
    }
    return step;
  }

  // SRK / LimitVariant: A = (I + (1-a) G) / sqrt(a), b = (1-a) h / sqrt(a),
  // noise = M M^T + zeta3^2 I with M = ((1-a) zeta1 / sqrt(a)) G + zeta2 I.
  step.b = inv_sqrt_alpha * oma * score.h;
  if (score.diagonal) {
    step.a_diag =
        (inv_sqrt_alpha * (1.0 + oma * score.g_diag.array())).matrix();
    const Eigen::ArrayXd m =
        inv_sqrt_alpha * oma * z1 * score.g_diag.array() + z2;
    step.noise_diag = (m * m + z3 * z3).matrix();
  } else {
    step.a_dense = inv_sqrt_alpha *
                   (Eigen::MatrixXd::Identity(d, d) + oma * score.g_dense);
    const Eigen::MatrixXd m = inv_sqrt_alpha * oma * z1 * score.g_dense +
                              z2 * Eigen::MatrixXd::Identity(d, d);
    step.noise_dense =
        m * m.transpose() + z3 * z3 * Eigen::MatrixXd::Identity(d, d);
  }
  return step;
}

GaussianLaw propagate(const GaussianLaw& law, const AffineStep& step) {
  if (step.b.size() != law.dim())
    throw std::invalid_argument("propagate: dimension mismatch");
  if (law.is_diagonal() && step.diagonal) {
    const Eigen::ArrayXd a = step.a_diag.array();
    return GaussianLaw::diagonal(
        (a * law.mean().array() + step.b.array()).matrix(),
        (a * a * law.cov_diag().array() + step.noise_diag.array()).matrix());
  }
  const Eigen::MatrixXd a = step.diagonal
                                ? Eigen::MatrixXd(step.a_diag.asDiagonal())
                                : step.a_dense;
  const Eigen::MatrixXd noise =
      step.diagonal ? Eigen::MatrixXd(step.noise_diag.asDiagonal())
                    : step.noise_dense;
  Eigen::MatrixXd cov = a * law.cov_dense() * a.transpose() + noise;
  cov = ((cov + cov.transpose()) / 2.0).eval();
  return GaussianLaw::dense(a * law.mean() + step.b, std::move(cov));
}

GaussianLaw exact_output_law(const TimeGrid& grid, SamplerKind kind,
                             const GaussianTarget& target) {
  const long d = target.mean.size();
  GaussianLaw law = GaussianLaw::diagonal(Eigen::VectorXd::Zero(d),
                                          Eigen::VectorXd::Ones(d));
  for (std::size_t k = 0; k < grid.step_count(); ++k) {
    const auto coeffs = coefficients(grid.widths()[k]);
    const auto score =
        gaussian_linear_score(target, grid.horizon(), grid.times()[k]);
    law = propagate(law, affine_of_step(kind, coeffs, score, grid.times()[k]));
  }
  return law;
}

double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  const long d = p.dim();
  double kl;
  if (p.is_diagonal() && q.is_diagonal()) {
    if (q.cov_diag().minCoeff() <= kMinEigenvalue)
      throw std::invalid_argument("gaussian_kl: q is singular");
    const Eigen::ArrayXd vp = p.cov_diag().array();
    const Eigen::ArrayXd vq = q.cov_diag().array();
    const Eigen::ArrayXd dm = (q.mean() - p.mean()).array();
    kl = 0.5 * ((vp / vq).sum() + (dm * dm / vq).sum() -
                static_cast<double>(d) + (vq / vp).log().sum());
  } else {
    const Eigen::MatrixXd sp = p.cov_dense();
    const Eigen::MatrixXd sq = q.cov_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esq(sq);
    if (esq.eigenvalues().minCoeff() <= kMinEigenvalue)
      throw std::invalid_argument("gaussian_kl: q is singular");
    const Eigen::MatrixXd sq_inv = esq.operatorInverseSqrt();  // Sq^{-1/2}
    const Eigen::VectorXd dm = sq_inv * (q.mean() - p.mean());
    const double trace = (sq_inv * sp * sq_inv).trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esp(sp,
                                                       Eigen::EigenvaluesOnly);
    const double logdet_q = esq.eigenvalues().array().log().sum();
    const double logdet_p = esp.eigenvalues().array().log().sum();
    kl = 0.5 * (trace + dm.squaredNorm() - static_cast<double>(d) + logdet_q -
                logdet_p);
  }
  return std::max(kl, 0.0);
}

}  // namespace srkdiff
