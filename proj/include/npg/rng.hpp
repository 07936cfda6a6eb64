#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

namespace npg {

// Counter-based pseudo-random stream (SplitMix64 output function over an
// incrementing counter). Streams derived from (seed, label, index) never
// share state, so actor batches, critic transitions, and environment
// construction draw from independent sources given one master seed.
//
// All distribution transforms (uniform, Gaussian, categorical) are written
// out explicitly so that a given seed reproduces the same bits on every
// standard-conforming platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Child stream keyed by (seed, label, index).
  static RngStream derive(std::uint64_t seed, std::string_view label,
                          std::uint64_t index = 0) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a over the label bytes
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    std::uint64_t key = mix(seed ^ h);
    key = mix(key ^ (index * 0xD1342543DE82EF95ULL));
    return RngStream(key);
  }

  std::uint64_t next_u64() { return mix(key_ + counter_++ * 0x9E3779B97F4A7C15ULL); }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; pairs are cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  // Inverse-CDF draw from a finite distribution. Probabilities are assumed
  // nonnegative; rounding residue falls on the last positive entry.
  int next_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = next_double();
    double cum = 0.0;
    int last_positive = -1;
    for (int i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      cum += probs[i];
      if (u < cum) return i;
    }
    if (last_positive < 0) throw std::invalid_argument("categorical draw from all-zero weights");
    return last_positive;
  }

  int next_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace npg
