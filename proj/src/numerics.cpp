#include "sobolmat/numerics.hpp"

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <boost/random/sobol.hpp>
#include <map>
#include <mutex>

#include "sobolmat/errors.hpp"
#include "sobolmat/rng.hpp"

namespace sobolmat {

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw DomainError("quadrature order must be positive");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;

  // boost returns the non-negative roots in ascending order
  const auto roots = boost::math::legendre_p_zeros<double>(order);
  std::vector<std::pair<double, double>> pairs;
  for (double x : roots) {
    const double dp = boost::math::legendre_p_prime(order, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    pairs.emplace_back(x, w);
    if (x != 0.0) pairs.emplace_back(-x, w);
  }
  std::sort(pairs.begin(), pairs.end());
  QuadratureRule rule;
  for (auto [x, w] : pairs) {
    rule.nodes.push_back(0.5 * (x + 1.0));
    rule.weights.push_back(0.5 * w);
  }
  cache.emplace(order, rule);
  return rule;
}

QuadratureRule composite_gauss_legendre(int order, int panels) {
  if (panels < 1) throw DomainError("panel count must be positive");
  const auto base = gauss_legendre(order);
  if (panels == 1) return base;
  QuadratureRule rule;
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p)
    for (std::size_t i = 0; i < base.size(); ++i) {
      rule.nodes.push_back((p + base.nodes[i]) * h);
      rule.weights.push_back(base.weights[i] * h);
    }
  return rule;
}

Matrix scrambled_sobol(std::size_t count, std::size_t dims, std::uint64_t seed) {
  if (dims < 1) throw DomainError("scrambled_sobol needs dims >= 1");
  boost::random::sobol gen(dims);
  std::vector<std::uint64_t> shift(dims);
  for (std::size_t d = 0; d < dims; ++d) shift[d] = mix64(derive_seed(seed, d));
  Matrix pts(count, dims);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t d = 0; d < dims; ++d) {
      const std::uint64_t v = static_cast<std::uint64_t>(gen()) ^ shift[d];
      pts(i, d) = (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
    }
  return pts;
}

}  // namespace sobolmat
