#ifndef SMURF_RNG_HPP
#define SMURF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace smurf {

// Finalizer from the splitmix64 generator.  Used both to seed mt19937_64
// and to derive independent substream seeds from (seed, path) tuples.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream with pinned variate transforms.  The standard
// <random> distributions are allowed to differ between library versions, so
// uniform/normal/exponential are implemented here from raw engine output to
// keep fits byte-reproducible for a given seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0,1); never returns an endpoint, so the
  // result is always safe inside log().
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
  }

  // Box-Muller without the cached second variate.  Wastes half the pair but
  // keeps the stream position a pure function of the number of calls.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(uniform()); }

  // Independent substream seed for (seed, path...).  Chained splitmix calls;
  // collisions between distinct paths are as unlikely as raw 64-bit clashes.
  static std::uint64_t derive(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t p : path) h = splitmix64(h ^ p);
    return h;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace smurf

#endif
