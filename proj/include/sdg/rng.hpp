#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

namespace sdg {

/// Identifies one independent random stream. Every rollout of every control
/// decision of every trial owns exactly one stream, so the sampled paths do
/// not depend on how work is scheduled across threads.
struct RngStreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
  std::uint64_t decision_index = 0;
  std::uint64_t rollout_index = 0;

  friend bool operator==(const RngStreamKey&, const RngStreamKey&) = default;
};

/// Rollout index reserved for the noise that drives the true system in a
/// closed-loop trial.
inline constexpr std::uint64_t kSystemStream = std::numeric_limits<std::uint64_t>::max();

/// One Philox4x32-10 block: the bijection of `counter` under `key`.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
  }
  return c;
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11) exposed as a
/// 64-bit UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  explicit PhiloxEngine(const RngStreamKey& key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

 private:
  void refill() {
    const auto c = philox4x32_10(counter_, key_);
    buffer_[0] = (static_cast<std::uint64_t>(c[0]) << 32) | c[1];
    buffer_[1] = (static_cast<std::uint64_t>(c[2]) << 32) | c[3];
    buffered_ = 2;
    if (++counter_[0] == 0) ++counter_[1];
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// One Brownian increment over a step of length `step`.
struct NoiseIncrement {
  Eigen::VectorXd dw;
  double step = 0.0;
};

/// Sequential source of Wiener increments for one stream key.
class WienerStream {
 public:
  WienerStream(const RngStreamKey& key, int dim);

  int dim() const { return dim_; }

  /// Writes an increment with per-component variance `h` into `dw`.
  void next(double h, Eigen::Ref<Eigen::VectorXd> dw) {
    if (h != last_h_) {
      last_h_ = h;
      scale_ = std::sqrt(h);
    }
    const double scale = scale_;
    for (int i = 0; i < dim_; ++i) dw[i] = scale * normal_(engine_);
  }

  /// Uniform draw in [0, 1) from the same stream.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  PhiloxEngine engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  double last_h_ = 0.0;
  double scale_ = 0.0;
  int dim_;
};

/// `count` independent increments with component variance `h`.
std::vector<NoiseIncrement> wiener_increments(const RngStreamKey& key, int k, double h, int count);

/// 64-bit finalizer from SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sdg
