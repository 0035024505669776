#pragma once

#include <cmath>
#include <cstdint>

namespace lgan {

// Counter-free splitmix64 generator. Small serializable state (one u64) and
// identical output on every platform, which the determinism contracts of
// dataset generation and training rely on.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform() * static_cast<double>(hi - lo + 1));
  }

  // Standard normal via Box-Muller. Two draws per sample, no cached spare,
  // so the state stays a single u64.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

  // Derives an independent stream, e.g. one per dataset entry, so parallel
  // and serial generation orders agree.
  static uint64_t derive(uint64_t master, uint64_t stream) {
    Rng h(master ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return h.next_u64();
  }

 private:
  uint64_t state_;
};

}  // namespace lgan
