#include "sobolmat/rng.hpp"

#include <cmath>
#include <numbers>

namespace sobolmat {

double CounterRng::normal(std::uint64_t stream, std::uint64_t index) const {
  const double u1 = uniform(stream, 2 * index);
  const double u2 = uniform(stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace sobolmat
