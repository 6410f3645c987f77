#include "sobolmat/ground_truth.hpp"

#include <algorithm>
#include <array>

#include "sobolmat/test_functions.hpp"

namespace sobolmat::testfuncs {

namespace {

using Table = std::array<std::array<double, 9>, 9>;

// clang-format off
constexpr Table kS5 = {{
  { 1.000,  0.896,  0.560, -0.073, -0.078, -0.131,  0.254,  0.125, -0.159},
  { 0.896,  1.000,  0.593, -0.032, -0.034, -0.057,  0.268,  0.146, -0.161},
  { 0.560,  0.593,  1.000,  0.000,  0.000,  0.000,  0.453,  0.264, -0.264},
  {-0.073, -0.032,  0.000,  1.000,  0.944,  0.825,  0.000,  0.251,  0.136},
  {-0.078, -0.034,  0.000,  0.944,  1.000,  0.926,  0.000,  0.232,  0.137},
  {-0.131, -0.057,  0.000,  0.825,  0.926,  1.000,  0.000,  0.197,  0.116},
  { 0.254,  0.268,  0.453,  0.000,  0.000,  0.000,  1.000,  0.582, -0.582},
  { 0.125,  0.146,  0.264,  0.251,  0.232,  0.197,  0.582,  1.000,  0.206},
  {-0.159, -0.161, -0.264,  0.136,  0.137,  0.116, -0.582,  0.206,  1.000},
}};

constexpr Table kS4 = {{
  { 1.000,  0.896,  0.560, -0.073, -0.078, -0.131,  0.254,  0.125, -0.159},
  { 0.896,  1.000,  0.593, -0.032, -0.034, -0.057,  0.268,  0.146, -0.161},
  { 0.560,  0.593,  1.000,  0.000,  0.000,  0.000,  0.453,  0.264, -0.264},
  {-0.073, -0.032,  0.000,  0.986,  0.929,  0.811,  0.000,  0.247,  0.116},
  {-0.078, -0.034,  0.000,  0.929,  0.979,  0.904,  0.000,  0.229,  0.118},
  {-0.131, -0.057,  0.000,  0.811,  0.904,  0.970,  0.000,  0.194,  0.100},
  { 0.254,  0.268,  0.453,  0.000,  0.000,  0.000,  0.916,  0.533, -0.533},
  { 0.125,  0.146,  0.264,  0.247,  0.229,  0.194,  0.533,  0.839,  0.031},
  {-0.159, -0.161, -0.264,  0.116,  0.118,  0.100, -0.533,  0.031,  0.591},
}};

constexpr Table kS3 = {{
  { 1.000,  0.896,  0.560, -0.073, -0.078, -0.131,  0.254,  0.125, -0.159},
  { 0.896,  1.000,  0.593, -0.032, -0.034, -0.057,  0.268,  0.146, -0.161},
  { 0.560,  0.593,  1.000,  0.000,  0.000,  0.000,  0.453,  0.264, -0.264},
  {-0.073, -0.032,  0.000,  0.956,  0.889,  0.774,  0.000,  0.235,  0.093},
  {-0.078, -0.034,  0.000,  0.889,  0.912,  0.833,  0.000,  0.215,  0.091},
  {-0.131, -0.057,  0.000,  0.774,  0.833,  0.877,  0.000,  0.183,  0.077},
  { 0.254,  0.268,  0.453,  0.000,  0.000,  0.000,  0.784,  0.457, -0.457},
  { 0.125,  0.146,  0.264,  0.235,  0.215,  0.183,  0.457,  0.622, -0.096},
  {-0.159, -0.161, -0.264,  0.093,  0.091,  0.077, -0.457, -0.096,  0.359},
}};

constexpr Table kS2 = {{
  { 0.756,  0.525,  0.560, -0.073, -0.078, -0.131,  0.254,  0.125, -0.159},
  { 0.525,  0.435,  0.593, -0.032, -0.034, -0.057,  0.268,  0.146, -0.161},
  { 0.560,  0.593,  1.000,  0.000,  0.000,  0.000,  0.453,  0.264, -0.264},
  {-0.073, -0.032,  0.000,  0.848,  0.765,  0.661,  0.000,  0.202,  0.059},
  {-0.078, -0.034,  0.000,  0.765,  0.741,  0.660,  0.000,  0.181,  0.057},
  {-0.131, -0.057,  0.000,  0.661,  0.660,  0.664,  0.000,  0.154,  0.048},
  { 0.254,  0.268,  0.453,  0.000,  0.000,  0.000,  0.595,  0.346, -0.346},
  { 0.125,  0.146,  0.264,  0.202,  0.181,  0.154,  0.346,  0.375, -0.145},
  {-0.159, -0.161, -0.264,  0.059,  0.057,  0.048, -0.346, -0.145,  0.221},
}};

constexpr Table kS1 = {{
  { 0.314,  0.332,  0.560,  0.000,  0.000,  0.000,  0.254,  0.148, -0.148},
  { 0.332,  0.351,  0.593,  0.000,  0.000,  0.000,  0.268,  0.156, -0.156},
  { 0.560,  0.593,  1.000,  0.000,  0.000,  0.000,  0.453,  0.264, -0.264},
  { 0.000,  0.000,  0.000,  0.632,  0.515,  0.438,  0.000,  0.139,  0.028},
  { 0.000,  0.000,  0.000,  0.515,  0.420,  0.357,  0.000,  0.113,  0.023},
  { 0.000,  0.000,  0.000,  0.438,  0.357,  0.331,  0.000,  0.096,  0.019},
  { 0.254,  0.268,  0.453,  0.000,  0.000,  0.000,  0.337,  0.196, -0.196},
  { 0.148,  0.156,  0.264,  0.139,  0.113,  0.096,  0.196,  0.145, -0.108},
  {-0.148, -0.156, -0.264,  0.028,  0.023,  0.019, -0.196, -0.108,  0.115},
}};
// clang-format on

Matrix to_matrix(const Table& t) {
  Matrix m(9, 9);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) m(i, j) = t[i][j];
  return m;
}

}  // namespace

Matrix closed_table(std::size_t count) {
  switch (std::min<std::size_t>(count, 5)) {
    case 0: return Matrix::Zero(9, 9);
    case 1: return to_matrix(kS1);
    case 2: return to_matrix(kS2);
    case 3: return to_matrix(kS3);
    case 4: return to_matrix(kS4);
    default: return to_matrix(kS5);
  }
}

std::optional<Matrix> tabulated_truth(const AxisSet& m) {
  std::size_t count = 0;
  while (count < kActiveAxes && count < m.ambient() && m.contains(count)) ++count;
  for (std::size_t a = count; a < std::min(kActiveAxes, m.ambient()); ++a)
    if (m.contains(a)) return std::nullopt;
  return closed_table(count);
}

}  // namespace sobolmat::testfuncs
