#pragma once
#include <cstdint>
#include <initializer_list>
#include <random>

// Seed plumbing for reproducible Monte Carlo. Every consumer of
// randomness derives its own substream from a master seed and a fixed
// integer path (replicate index, projection index, block index, ...),
// so results do not depend on scheduling or worker count.

namespace profit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Fold a path of integers into a master seed; order-sensitive.
inline std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
  for (std::uint64_t p : path) {
    s ^= splitmix64(p) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    (void)splitmix64(s);
  }
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return unif_(eng_); }
  double normal() { return norm_(eng_); }
  double chisq1() {
    const double z = normal();
    return z * z;
  }
  double chisq(int df) {
    double s = 0.0;
    for (int i = 0; i < df; ++i) s += chisq1();
    return s;
  }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace profit
