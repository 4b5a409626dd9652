#ifndef HIL_COMMON_HPP
#define HIL_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hil {

// Error taxonomy. Config/usage problems map to CLI exit code 1,
// everything else to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyStatisticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised when an observed action has probability zero under every latent
// path; carries the offending 1-based step index.
struct DegenerateDataError : std::runtime_error {
  long step;
  DegenerateDataError(const std::string& what, long step_index)
      : std::runtime_error(what), step(step_index) {}
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// xoshiro-free deterministic generator: a thin mt19937_64 replacement with
// hand-rolled draws so outputs are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x853c49e6748fea9bull)) {}

  uint64_t next_u64() {
    // splitmix64 stream; passes the statistical bar for simulation use here.
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  uint64_t uniform_below(uint64_t n) {
    if (n == 0) throw NumericError("uniform_below: n must be positive");
    const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (two draws consumed per call).
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Index sample from an unnormalized non-negative weight vector.
  int categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) throw NumericError("categorical: weights sum to zero");
    double u = next_double() * total;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

  // Child stream with an independent deterministic seed.
  Rng fork(uint64_t salt) { return Rng(splitmix64(state_ ^ splitmix64(salt))); }

 private:
  uint64_t state_;
};

inline double logsumexp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (std::isinf(m) && m < 0) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace hil

#endif  // HIL_COMMON_HPP
