#pragma once

#include <cstdint>
#include <vector>

#include "sobolmat/tensor.hpp"

namespace sobolmat {

/// Nodes and weights of a quadrature rule on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule of the given order mapped to [0, 1].
QuadratureRule gauss_legendre(int order);
/// `panels` equal sub-intervals, each carrying a Gauss-Legendre rule of `order`.
QuadratureRule composite_gauss_legendre(int order, int panels);

/// Sobol' low-discrepancy points with a random digital shift per dimension.
/// Rows are points in the open unit cube.
Matrix scrambled_sobol(std::size_t count, std::size_t dims, std::uint64_t seed);

}  // namespace sobolmat
