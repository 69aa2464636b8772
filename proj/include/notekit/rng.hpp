#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace notekit {

// Seeded generator with explicit draw algorithms (canonical uniforms,
// Box-Muller normals, Knuth Poisson) so streams depend only on the seed and
// call order, not on library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(uniform() * n) % n;
  }

  double normal() {
    // Box-Muller; the unused second variate is discarded to keep the stream
    // a pure function of call order.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    // Knuth's product method; adequate for the per-quarter rates used here.
    double limit = std::exp(-mean);
    double product = uniform();
    int count = 0;
    while (product > limit) {
      ++count;
      product *= uniform();
    }
    return count;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace notekit
