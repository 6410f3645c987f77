#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "sobolmat/tensor.hpp"

namespace sobolmat::testfuncs {

inline constexpr std::size_t kOutputs = 9;
inline constexpr std::size_t kActiveAxes = 5;

struct IshigamiParams {
  double a = 7.0;
  double b = 0.1;
};

struct SobolGParams {
  std::array<double, 5> a{};
  std::array<double, 5> b{};
};

struct OakleyParams {
  std::array<double, 5> a{};
  std::array<std::array<double, 5>, 5> b{};
};

struct NoiseSpec {
  double magnitude = 0.0;  ///< E, the noise-to-signal ratio
  std::uint64_t seed = 0;
};

// Parameter sets of the 9-output benchmark model.
std::array<double, 5> a_small_g();   ///< [3, 6, 9, 18, 27]
std::array<double, 5> a_large_g();   ///< [1/2, 1, 2, 4, 8]
std::array<double, 5> a_oakley();    ///< [5, 35/8, 15/4, 25/8, 5/2]
std::array<std::array<double, 5>, 5> b_plus();
std::array<std::array<double, 5>, 5> b_minus();  ///< b_plus with both indices reversed

/// Ishigami on the unit cube; maps u -> 2*pi*u - pi internally. Reads u[0..2].
double ishigami(std::span<const double> u, const IshigamiParams& p);
/// Modified Sobol' G function on [0,1]^5.
double sobol_g(std::span<const double> u, const SobolGParams& p);
/// Linear plus quadratic form on the unit cube; maps u -> 2u - 1 internally.
double oakley(std::span<const double> u, const OakleyParams& p);

/// The 9-output benchmark model. Needs u.size() >= 5; axes beyond 4 are ignored.
std::array<double, kOutputs> mnu9(std::span<const double> u);
/// Row-wise mnu9 over an N x M design; returns N x 9.
Matrix mnu9(const Matrix& inputs);

struct Standardized {
  Matrix values;  ///< N x L, each column mean 0, sample sd 1
  Vector mean;
  Vector sd;
};

/// Column standardization with the N-1 sample deviation.
Standardized standardize(const Matrix& samples);

/// (1+E^2)^(-1/2) (f + E e) with e drawn per (seed, output, row).
Matrix add_noise(const Matrix& standardized, const NoiseSpec& spec);

}  // namespace sobolmat::testfuncs
