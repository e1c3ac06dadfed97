#pragma once

// Deterministic randomness: fixed-width bit mixing plus samplers whose output
// depends only on (seed, stream index), never on evaluation order.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "game.hpp"

namespace brflow {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent engine for task `index` of a run seeded with `seed`.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(mix64(seed + 0x9e3779b97f4a7c15ULL * (index + 1)));
}

/// Uniform double in [0, 1) built from the engine's top 53 bits, so results
/// do not depend on the standard library's distribution internals.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Uniform sample from the k-simplex (full weights, summing to one).
inline Eigen::VectorXd sample_simplex(std::mt19937_64& eng, int k) {
  Eigen::VectorXd e(k);
  double sum = 0.0;
  for (int a = 0; a < k; ++a) {
    double u;
    do {
      u = uniform01(eng);
    } while (u <= 0.0);
    e[a] = -std::log(u);
    sum += e[a];
  }
  return e / sum;
}

/// Uniform point of the product of simplices, in reduced coordinates.
inline Eigen::VectorXd sample_point(const GameShape& shape, std::mt19937_64& eng) {
  Eigen::VectorXd x(shape.dim);
  for (int i = 0; i < shape.num_players(); ++i) {
    const Eigen::VectorXd w = sample_simplex(eng, shape.counts[i]);
    for (int a = 1; a < shape.counts[i]; ++a) x[shape.offsets[i] + a - 1] = w[a];
  }
  return x;
}

}  // namespace brflow
