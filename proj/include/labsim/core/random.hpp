#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace labsim {

// Seeded generator with distribution helpers that do not depend on the
// standard library's implementation-defined distributions, so sampled scenes
// are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& values) {
    return values[index(values.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace labsim
