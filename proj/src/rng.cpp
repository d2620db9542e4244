#include "sdg/rng.hpp"

#include <cmath>

#include "sdg/error.hpp"

namespace sdg {
PhiloxEngine::PhiloxEngine(const RngStreamKey& key) {
  const std::uint64_t k =
      mix64(mix64(mix64(key.master_seed) ^ key.trial_index) ^ mix64(key.decision_index + 0x632be59bd9b4e019ULL));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  counter_ = {0u, 0u, static_cast<std::uint32_t>(key.rollout_index),
              static_cast<std::uint32_t>(key.rollout_index >> 32)};
}

WienerStream::WienerStream(const RngStreamKey& key, int dim) : engine_(key), dim_(dim) {}

std::vector<NoiseIncrement> wiener_increments(const RngStreamKey& key, int k, double h, int count) {
  if (!(h > 0.0) || count < 1 || k < 1) {
    throw Error(ErrorKind::kInvalidArgument, "wiener_increments requires h > 0, count >= 1, k >= 1");
  }
  WienerStream stream(key, k);
  std::vector<NoiseIncrement> out(static_cast<std::size_t>(count));
  for (auto& inc : out) {
    inc.dw.resize(k);
    inc.step = h;
    stream.next(h, inc.dw);
  }
  return out;
}

}  // namespace sdg
