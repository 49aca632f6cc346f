#ifndef STORYSIM_RNG_HPP
#define STORYSIM_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

namespace storysim {

using Rng = std::mt19937_64;

// splitmix64 finalizer. Used to turn (master seed, stream tags) into
// well-separated engine seeds, so that sub-streams (per agent, per chain,
// per grid cell) do not shift when unrelated counts change.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t t : tags) h = mix64(h ^ t);
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags = {}) {
  return Rng(derive_seed(master, tags));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Beta(a, b) via two gamma draws.
inline double sample_beta01(double shape_a, double shape_b, Rng& rng) {
  if (!(shape_a > 0.0) || !(shape_b > 0.0))
    throw std::invalid_argument("Beta shape parameters must be positive");
  std::gamma_distribution<double> ga(shape_a, 1.0);
  std::gamma_distribution<double> gb(shape_b, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    double x = ga(rng);
    double y = gb(rng);
    if (x + y > 0.0) return x / (x + y);
  }
  return 0.5;  // both gammas underflowed; only reachable for tiny shapes
}

// Draws an index from an unnormalized weight vector.
template <typename Container>
std::size_t sample_categorical(const Container& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("categorical weights must have positive sum");
  double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t idx = 0;
  for (double w : weights) {
    acc += w;
    if (u < acc) return idx;
    ++idx;
  }
  return weights.size() - 1;  // u landed on the top edge
}

}  // namespace storysim

#endif
