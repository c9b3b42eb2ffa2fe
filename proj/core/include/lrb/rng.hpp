#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string_view>

namespace lrb {

// Counter-based deterministic generator with explicit stream splitting.
// A stream is (key, counter); draws hash the pair, so a stream's output is a
// pure function of its key and how many values were consumed. Child streams
// derive a fresh key from a label, which keeps e.g. policy draws from
// perturbing environment draws.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kKeySalt)) {}

  RngStream split(std::uint64_t label) const {
    return RngStream(key_ ^ mix(label ^ kSplitSalt), 0);
  }

  RngStream split(std::string_view label) const { return split(fnv1a(label)); }

  std::uint64_t next_u64() {
    return mix(key_ + kGolden * ++counter_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two draws per call.
  double next_gaussian() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform on {0, ..., n-1}, rejection sampling keeps it unbiased.
  int next_below(int n) {
    if (n <= 0) throw std::invalid_argument("next_below: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return static_cast<int>(r % un);
  }

  bool bernoulli(double p) { return next_unit() < p; }

  int categorical(std::span<const double> probs) {
    const double u = next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;  // guards against rounding in the tail
  }

private:
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kKeySalt = 0x7f4a7c15850d61afULL;
  static constexpr std::uint64_t kSplitSalt = 0x50d61af385bfULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lrb
