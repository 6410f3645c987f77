#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>

#include "sobolmat/tensor.hpp"

namespace sobolmat {

/// Inputs on the unit cube paired with model outputs, one row per sample.
struct DesignMatrix {
  Matrix inputs;   ///< N x M, entries in [0, 1]
  Matrix outputs;  ///< N x L
  std::uint64_t seed = 0;
  int fold = -1;
  double noise = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t input_dims() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t output_dims() const { return static_cast<std::size_t>(outputs.cols()); }

  /// Throws DomainError unless inputs are in [0,1] and row counts agree.
  void validate() const;
  DesignMatrix select_rows(const std::vector<std::size_t>& rows) const;
};

/// Jittered Latin hypercube: one point per stratum [i/N, (i+1)/N) per axis.
Matrix latin_hypercube(std::size_t n, std::size_t dims, std::uint64_t seed);

/// Random partition of an even-sized design into two halves. The first half
/// trains fold 0 and validates fold 1; swapping the pair gives the other fold.
std::pair<DesignMatrix, DesignMatrix> split_two_fold(const DesignMatrix& design,
                                                     std::uint64_t seed);

/// Push unit-cube values through a quantile function (inverse CDF).
Matrix quantile_transform(const Matrix& u, const std::function<double(double)>& cdf_inverse);

/// Inverse of the standard normal CDF.
double normal_quantile(double p);

/// CSV with header u0..u{M-1},y0..y{L-1}.
void write_design_csv(std::ostream& out, const DesignMatrix& d);
DesignMatrix read_design_csv(std::istream& in);
DesignMatrix read_design_csv(const std::string& path);

}  // namespace sobolmat
