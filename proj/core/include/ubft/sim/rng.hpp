#pragma once

#include <cstdint>
#include <random>

namespace ubft::sim {

// mt19937_64 with a bounded draw that does not depend on the standard
// library's distribution implementations, so traces match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_{seed} {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [lo, hi]; lo <= hi.
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  Rng fork(std::uint64_t salt) { return Rng{next() ^ (salt * 0x9e3779b97f4a7c15ULL)}; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ubft::sim
