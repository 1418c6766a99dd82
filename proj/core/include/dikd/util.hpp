#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dikd {

// Shape/size violations between tensors or against an operation's contract.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mask generator failed to land in the requested area bucket.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Self-contained splitmix64-based RNG. Every random draw in the project goes
// through this type so runs are reproducible bit-for-bit across platforms
// (std::uniform_real_distribution et al. are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0,n).
  int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  uint64_t state_;
};

// FNV-1a, used to derive per-parameter init seeds from names so that adding
// or removing one sub-network does not shift the init of the others.
inline uint64_t hash_name(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace dikd
