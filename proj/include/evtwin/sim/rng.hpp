#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace evtwin {

/// Draw-site tags used to key independent substreams. Every stochastic site
/// in the toolkit owns one tag, so a draw is fully determined by
/// (seed, tag, step, pixel) and never by evaluation order.
enum class RngTag : std::uint64_t {
  threshold_pos = 1,
  threshold_neg = 2,
  hot_mask = 3,
  shot = 4,
  dark = 5,
  leak = 6,
  score = 7,
  trial = 8,
  test = 9,
};

/// Counter-based generator: the state is a hash of (seed, key1, key2, key3)
/// advanced with the splitmix64 step. Cheap enough to construct one stream
/// per pixel per step, which is what makes simulations bit-reproducible
/// independent of pixel iteration order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t key1 = 0, std::uint64_t key2 = 0,
            std::uint64_t key3 = 0) {
    state_ = mix(seed + 0x9e3779b97f4a7c15ULL);
    state_ = mix(state_ ^ mix(key1 + 0xbf58476d1ce4e5b9ULL));
    state_ = mix(state_ ^ mix(key2 + 0x94d049bb133111ebULL));
    state_ = mix(state_ ^ mix(key3 + 0xd6e8feb86659fd93ULL));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double normal() {
    std::normal_distribution<double> dist;
    return dist(*this);
  }

  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(*this);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
};

/// One-shot keyed stream for a single pixel draw site.
inline RngStream pixel_stream(std::uint64_t seed, RngTag tag,
                              std::uint64_t step, std::uint64_t pixel) {
  return RngStream(seed, static_cast<std::uint64_t>(tag), step, pixel);
}

/// Derives an independent seed for a nested Monte-Carlo trial.
inline std::uint64_t derive_seed(std::uint64_t seed, RngTag tag,
                                 std::uint64_t index) {
  return RngStream(seed, static_cast<std::uint64_t>(tag), index).next();
}

}  // namespace evtwin
