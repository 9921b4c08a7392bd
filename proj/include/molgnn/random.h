//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_RANDOM_H_
#define MOLGNN_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace molgnn {

// Seeded random stream. Distributions are implemented here rather than with
// the <random> distribution templates, whose output is library-specific, so
// that artifacts are byte-identical across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0): engine_(seed) { }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in the open interval (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Independent child stream.
  Rng split() { return Rng(next_u64()); }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace molgnn

#endif // MOLGNN_RANDOM_H_
