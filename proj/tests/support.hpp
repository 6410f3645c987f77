#pragma once

#include <cmath>
#include <random>

#include "sobolmat/surrogate.hpp"

namespace testsupport {

using sobolmat::Matrix;
using sobolmat::RbfKernelParams;
using sobolmat::Surrogate;
using sobolmat::Vector;

// A conditioned GP with random hyperparameters on smooth random targets.
// Noise stays above 1e-3 so the moments are well conditioned.
inline Surrogate random_gp(std::size_t M, std::size_t L, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Matrix x(N, M), y(N, L);
  for (auto& v : x.reshaped()) v = U(gen);
  for (std::size_t l = 0; l < L; ++l) {
    Vector freq(M);
    for (auto& f : freq) f = 1.0 + 3.0 * U(gen);
    const double phase = 6.0 * U(gen);
    for (std::size_t n = 0; n < N; ++n)
      y(n, l) = std::sin(x.row(n).dot(freq) + phase) + 0.1 * (U(gen) - 0.5);
  }
  std::vector<RbfKernelParams> ps(L);
  for (auto& p : ps) {
    p.lengthscales = Vector(M);
    for (auto& v : p.lengthscales) v = 0.25 + 0.5 * U(gen);
    p.signal_variance = 0.5 + U(gen);
    p.noise_variance = std::pow(10.0, -3.0 + U(gen));
  }
  return Surrogate::condition(x, y, ps);
}

}  // namespace testsupport
