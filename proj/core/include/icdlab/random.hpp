#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace icdlab {

uint64_t splitmix64(uint64_t x);

// Mixes a base seed with grid coordinates into an independent stream seed.
uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> coords);
uint64_t derive_seed(uint64_t base, std::string_view label);

// Seeded generator whose draws are identical on every platform. The standard
// distributions are implementation-defined, so only the raw engine is used.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform();                  // [0, 1)
  double uniform(double lo, double hi);
  double normal();                   // standard normal, Box-Muller
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  size_t below(size_t n);            // uniform integer in [0, n)

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

  // m distinct indices from [0, n), in draw order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t m);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace icdlab
