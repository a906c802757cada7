#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace srkdiff {

namespace detail {

// SplitMix64 finalizer. Used as a counter-based generator: every output is a
// pure function of (key, lane), so draws are reproducible independent of
// evaluation order and parallelism.
inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

/// A deterministic stream of i.i.d. draws addressed by lane index.
/// Streams are cheap value types; distinct (seed, stream) pairs give
/// independent streams.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(detail::mix64(seed + detail::kGamma) ^ stream)) {}

  /// Stream id for Gaussian draw `slot` of sampler step `step`.
  /// Slot 0 is the trajectory initialization, slots 1 and 2 the per-step
  /// noises g1 and g3.
  static std::uint64_t stream_id(std::uint64_t step, std::uint32_t slot) {
    return step * 4 + slot;
  }

  std::uint64_t bits(std::uint64_t lane) const {
    return detail::mix64(key_ + (lane + 1) * detail::kGamma);
  }

  /// Uniform draw in (0, 1].
  double uniform(std::uint64_t lane) const {
    return static_cast<double>((bits(lane) >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal draw via Box-Muller; lanes 2k and 2k+1 share the
  /// underlying uniform pair.
  double normal(std::uint64_t lane) const {
    const std::uint64_t pair = lane / 2;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return (lane % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
  }

  void fill_normal(Eigen::VectorXd& out) const {
    const Eigen::Index d = out.size();
    Eigen::Index i = 0;
    for (; i + 1 < d; i += 2) {
      const auto lane = static_cast<std::uint64_t>(i);
      const double r = std::sqrt(-2.0 * std::log(uniform(lane)));
      const double theta = 2.0 * std::numbers::pi * uniform(lane + 1);
      out[i] = r * std::cos(theta);
      out[i + 1] = r * std::sin(theta);
    }
    if (i < d) out[i] = normal(static_cast<std::uint64_t>(i));
  }

  Eigen::VectorXd normal_vector(Eigen::Index d) const {
    Eigen::VectorXd v(d);
    fill_normal(v);
    return v;
  }

 private:
  std::uint64_t key_;
};

/// Derives a child seed for independent sub-streams (per-run seeds inside a
/// sweep cell, bootstrap replicates, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return detail::mix64(detail::mix64(seed) + index * detail::kGamma);
}

}  // namespace srkdiff
