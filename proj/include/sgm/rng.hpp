#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sgm {

// Reproducible random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; every distribution used here is
// derived from raw 64-bit draws so results do not depend on the standard
// library's distribution implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  // Number of 64-bit words drawn so far.
  std::uint64_t position() const { return position_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be positive. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Independent child stream keyed by `tag`; does not advance this stream.
  RngStream derive(std::uint64_t tag) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sgm
