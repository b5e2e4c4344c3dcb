#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace pips {

// The std distributions are implementation-defined, so anything that must
// reproduce across platforms draws through these helpers instead.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), rejection-sampled.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// FNV-1a, for deriving per-key seeds.
std::uint64_t stable_hash(std::string_view text);

}  // namespace pips
