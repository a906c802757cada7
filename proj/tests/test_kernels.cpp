#include "srkdiff/kernels.hpp"

#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <doctest.h>

#include "srkdiff/rng.hpp"

using namespace srkdiff;

namespace {

// 50-digit evaluation of the closed forms. At this precision the naive
// expressions lose nothing to cancellation, so they serve as an independent
// oracle for both branches of the double implementation.
using mp = boost::multiprecision::cpp_bin_float_50;

struct MpTriple {
  mp f1, f2, f3;
};

MpTriple mp_covariance(const mp& d) {
  const mp e1 = exp(d), e2 = exp(2 * d);
  return {e2 / 2 - 2 * e1 + d + mp(3) / 2, e2 / 2 - mp(1) / 2,
          e2 / 2 - e1 + mp(1) / 2};
}

double rel_err_mp(double got, const mp& want) {
  return static_cast<double>(abs(mp(got) - want) / abs(want));
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i)
    out.push_back(std::exp(std::log(lo) +
                           (std::log(hi) - std::log(lo)) * i / (n - 1)));
  out.back() = hi;
  return out;
}

}  // namespace

TEST_CASE("kernel scalars at the boundary and asymptote") {
  const auto at0 = kernel_scalars(0.0);
  CHECK(at0.lambda == 1.0);
  CHECK(at0.sigma == 0.0);

  const auto far = kernel_scalars(50.0);
  CHECK(far.lambda < 1e-21);
  CHECK(std::abs(far.sigma - 1.0) < 1e-12);

  const auto half = kernel_scalars(std::log(2.0));
  CHECK(half.lambda == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half.sigma == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));

  CHECK_THROWS_AS(kernel_scalars(-1e-9), std::invalid_argument);
}

TEST_CASE("kernel scalars: unit circle and monotonicity") {
  double prev_lambda = 2.0, prev_sigma = -1.0;
  for (double t : log_spaced(1e-12, 40.0, 400)) {
    const auto ks = kernel_scalars(t);
    CHECK(std::abs(ks.lambda * ks.lambda + ks.sigma * ks.sigma - 1.0) <=
          4e-16);
    CHECK(ks.lambda < prev_lambda);
    // sigma saturates to 1.0 in doubles once e^{-2t} < eps/2 (t ~ 18.4).
    if (t < 18.0)
      CHECK(ks.sigma > prev_sigma);
    else
      CHECK(ks.sigma >= prev_sigma);
    prev_lambda = ks.lambda;
    prev_sigma = ks.sigma;
  }
}

TEST_CASE("covariance functions: domain and pinned values") {
  CHECK_THROWS_AS(covariance_functions(0.0), std::invalid_argument);
  CHECK_THROWS_AS(covariance_functions(-0.1), std::invalid_argument);

  // Tiny width: f1 ~ D^3/3.
  const auto tiny = covariance_functions(1e-8);
  CHECK(tiny.f1 >= 3.3e-25);
  CHECK(tiny.f1 <= 3.4e-25);

  // D = ln 2 makes the exponentials rational.
  const auto ln2 = covariance_functions(std::log(2.0));
  CHECK(ln2.f1 == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-14));
  CHECK(ln2.f2 == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(ln2.f3 == doctest::Approx(0.5).epsilon(1e-14));

  // f3 - f1 = e^D - D - 1 for any D.
  const auto q = covariance_functions(0.25);
  CHECK(std::abs((q.f3 - q.f1) - (std::exp(0.25) - 0.25 - 1.0)) <= 1e-14);
}

TEST_CASE("covariance functions match the 50-digit oracle on both branches") {
  for (double d : log_spaced(1e-8, 5.0, 300)) {
    const auto got = covariance_functions(d);
    const auto want = mp_covariance(mp(d));
    CHECK(rel_err_mp(got.f1, want.f1) <= 1e-13);
    CHECK(rel_err_mp(got.f2, want.f2) <= 1e-13);
    CHECK(rel_err_mp(got.f3, want.f3) <= 1e-13);
  }
}

TEST_CASE("covariance via numerical quadrature of the double integral") {
  // Var[int e^{D-r} W_r dr] = int int e^{2D-r-s} min(r,s) dr ds. The min
  // kinks along r = s, so integrate the smooth triangle r < s and double it:
  // 2 int_0^D ds e^{2D-s} int_0^s dr e^{-r} r, nested Simpson.
  const double d = std::log(2.0);
  const int n = 256;  // even
  auto simpson = [](auto&& f, double lo, double hi, int m) {
    const double h = (hi - lo) / m;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < m; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + i * h);
    return acc * h / 3.0;
  };
  const double acc =
      2.0 * simpson(
                [&](double s) {
                  return std::exp(2 * d - s) *
                         simpson([](double r) { return std::exp(-r) * r; },
                                 0.0, s, n);
                },
                0.0, d, n);
  CHECK(covariance_functions(d).f1 == doctest::Approx(acc).epsilon(1e-8));
}

TEST_CASE("series/closed-form crossover continuity") {
  const double above = kSeriesCrossover;
  const double below = std::nextafter(kSeriesCrossover, 0.0);
  const auto fa = covariance_functions(above);
  const auto fb = covariance_functions(below);
  CHECK(std::abs(fa.f1 - fb.f1) / fa.f1 <= 1e-13);
  CHECK(std::abs(fa.f2 - fb.f2) / fa.f2 <= 1e-13);
  CHECK(std::abs(fa.f3 - fb.f3) / fa.f3 <= 1e-13);
}

TEST_CASE("coefficients: domain checks") {
  CHECK_THROWS_AS(coefficients(0.0), std::invalid_argument);
  CHECK_THROWS_AS(coefficients(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(coefficients(0.2500001), std::invalid_argument);
  CHECK_NOTHROW(coefficients(0.25));
  CHECK_NOTHROW(coefficients(1e-12));
}

TEST_CASE("coefficients recover the flat-limit constants at small width") {
  const auto c = coefficients(1e-6);
  const double scale = 1.0 / std::sqrt(1e-6);
  CHECK(std::abs(c.zeta1 * scale - std::sqrt(2.0 / 3.0)) <= 1e-4);
  CHECK(std::abs(c.zeta2 * scale - std::sqrt(1.5)) <= 1e-4);
  CHECK(std::abs(c.zeta3 * scale - std::sqrt(0.5)) <= 1e-4);
}

TEST_CASE("coefficient identities over the full width range") {
  for (double d : log_spaced(1e-8, 0.25, 1000)) {
    const auto c = coefficients(d);
    const double spread = 2.0 * std::sinh(d);
    CHECK(std::abs(c.zeta1 * c.zeta1 - 8.0 * c.f1 / (spread * spread)) /
              (c.zeta1 * c.zeta1) <=
          1e-12);
    CHECK(std::abs(c.zeta1 * c.zeta2 - 4.0 * c.f3 / spread) /
              (c.zeta1 * c.zeta2) <=
          1e-12);
    const double sum = c.zeta2 * c.zeta2 + c.zeta3 * c.zeta3;
    CHECK(std::abs(sum - std::expm1(2.0 * d)) / sum <= 1e-12);
  }
}

TEST_CASE("coefficients at the width cap stay finite and ordered") {
  const auto c = coefficients(0.25);
  CHECK(c.zeta1 > 0);
  CHECK(c.zeta2 > 0);
  CHECK(c.zeta3 > 0);
  CHECK(std::isfinite(c.zeta1 + c.zeta2 + c.zeta3));
  const double ratio = c.zeta1 / c.zeta3;
  CHECK(ratio >= 1.0);
  CHECK(ratio <= 1.35);
}

TEST_CASE("zeta limits converge linearly (rate constant stays bounded)") {
  auto rate = [](double delta, int i) {
    const auto c = coefficients(delta);
    const double limits[3] = {std::sqrt(2.0 / 3.0), std::sqrt(1.5),
                              std::sqrt(0.5)};
    const double z[3] = {c.zeta1, c.zeta2, c.zeta3};
    return std::abs(z[i] / std::sqrt(delta) - limits[i]) / delta;
  };
  for (int i = 0; i < 3; ++i)
    CHECK(rate(1e-6, i) <= 100.0 * rate(1e-4, i));
}

TEST_CASE("exponential-integrator algebra bridges the two update forms") {
  for (double d : log_spaced(1e-8, 0.25, 500)) {
    const auto c = coefficients(d);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(c.alpha);
    CHECK(std::abs(inv_sqrt_alpha - c.exp_delta) / c.exp_delta <= 1e-14);
    const double spread = 2.0 * std::sinh(d);
    CHECK(std::abs(c.one_minus_alpha * inv_sqrt_alpha - spread) / spread <=
          1e-14);
  }
}

TEST_CASE("joint noise covariance entries and positivity") {
  for (double d : {1e-4, 1e-2, 0.1, 0.25}) {
    const Eigen::Matrix2d cov = joint_noise_covariance(d);
    const auto f = covariance_functions(d);
    const double spread = 2.0 * std::sinh(d);
    CHECK(std::abs(cov(0, 0) - 8.0 * f.f1 / (spread * spread)) / cov(0, 0) <=
          1e-12);
    CHECK(std::abs(cov(0, 1) - 4.0 * f.f3 / spread) / cov(0, 1) <= 1e-12);
    CHECK(std::abs(cov(1, 1) - 2.0 * f.f2) / cov(1, 1) <= 1e-12);
    CHECK(cov(0, 1) == cov(1, 0));
  }
  for (double d : log_spaced(1e-8, 0.25, 1000))
    CHECK(joint_noise_covariance(d).determinant() >= 0.0);
}

TEST_CASE("joint noise correlation at D = 0.1") {
  const Eigen::Matrix2d cov = joint_noise_covariance(0.1);
  const double corr = cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
  CHECK(corr > 0.85);
  CHECK(corr < 1.0);
}

TEST_CASE("joint noise covariance against simulated Brownian paths") {
  // Euler discretization of (int e^{D-r} W_r dr, int e^{D-r} dW): the sample
  // covariance must agree with the closed forms within Monte Carlo error.
  const double d = 0.1;
  const int substeps = 400;
  const int paths = 40000;
  const double h = d / substeps;
  const NoiseStream draw(99, 0);
  double s11 = 0, s12 = 0, s22 = 0;
  std::uint64_t lane = 0;
  for (int p = 0; p < paths; ++p) {
    double w = 0.0, time_integral = 0.0, ito_integral = 0.0;
    for (int i = 0; i < substeps; ++i) {
      const double r = i * h;
      const double dw = std::sqrt(h) * draw.normal(lane++);
      time_integral += std::exp(d - r) * w * h;
      ito_integral += std::exp(d - r) * dw;
      w += dw;
    }
    s11 += time_integral * time_integral;
    s12 += time_integral * ito_integral;
    s22 += ito_integral * ito_integral;
  }
  const auto f = covariance_functions(d);
  // ~5 sigma Monte Carlo bands (relative sd of second moments ~ sqrt(2/N)).
  const double band = 5.0 * std::sqrt(2.0 / paths);
  CHECK(std::abs(s11 / paths - f.f1) / f.f1 <= band + 3.0 / substeps);
  CHECK(std::abs(s12 / paths - f.f3) / f.f3 <= band + 3.0 / substeps);
  CHECK(std::abs(s22 / paths - f.f2) / f.f2 <= band + 3.0 / substeps);
}

TEST_CASE("zeta coefficients against the 50-digit oracle") {
  for (double d : log_spaced(1e-8, 0.25, 200)) {
    const auto c = coefficients(d);
    const mp dd(d);
    const auto f = mp_covariance(dd);
    const mp spread = exp(dd) - exp(-dd);
    const mp z1 = 2 * sqrt(mp(2)) * sqrt(f.f1) / spread;
    const mp z2 = sqrt(mp(2)) * f.f3 / sqrt(f.f1);
    const mp z3 = sqrt(2 * f.f2 - 2 * f.f3 * f.f3 / f.f1);
    CHECK(rel_err_mp(c.zeta1, z1) <= 1e-13);
    CHECK(rel_err_mp(c.zeta2, z2) <= 1e-13);
    CHECK(rel_err_mp(c.zeta3, z3) <= 1e-13);
  }
}

TEST_CASE("coefficient table caches per step width") {
  const std::vector<double> widths{0.1, 0.01, 0.001, 0.1};
  const CoefficientTable table(widths);
  REQUIRE(table.size() == widths.size());
  for (std::size_t k = 0; k < widths.size(); ++k) {
    const auto direct = coefficients(widths[k]);
    CHECK(table.at(k).zeta1 == direct.zeta1);
    CHECK(table.at(k).zeta2 == direct.zeta2);
    CHECK(table.at(k).zeta3 == direct.zeta3);
    CHECK(table.at(k).alpha == direct.alpha);
  }
}
