#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace dtsurv {

// Portable seeded generator. std::mt19937_64 has a fully specified output
// sequence; the standard distributions do not, so bounded integers and unit
// doubles are derived here by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n), n > 0, by rejection on the top of the 64-bit range.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Sub-stream seed: splitmix64 over (master, FNV-1a(tag), index). Every random
// consumer in the pipeline draws from its own named stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0);

}  // namespace dtsurv
