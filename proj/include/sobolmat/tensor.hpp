#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace sobolmat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Elementwise a / b. Throws DivisionByZero naming the first zero of b.
Matrix hadamard_div(const Matrix& a, const Matrix& b);

/// Dense L x L x L x L tensor, row-major (last index fastest).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(std::size_t extent)
      : extent_(extent), data_(extent * extent * extent * extent, 0.0) {}

  std::size_t extent() const { return extent_; }
  double& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[index(a, b, c, d)];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[index(a, b, c, d)];
  }
  const std::vector<double>& data() const { return data_; }
  double max_abs() const;

 private:
  std::size_t index(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return ((a * extent_ + b) * extent_ + c) * extent_ + d;
  }
  std::size_t extent_ = 0;
  std::vector<double> data_;
};

/// 17 significant digits, enough to read back bit-identically.
std::string format_double(double value);

/// One row per first index, comma-separated.
void write_csv(std::ostream& out, const Matrix& m);
void write_csv(const std::string& path, const Matrix& m);
/// Rows "a,b,c,d,value".
void write_csv(std::ostream& out, const Tensor4& t);

/// Reads a headerless numeric CSV into a matrix; all rows must have equal width.
Matrix read_csv_matrix(std::istream& in);
Matrix read_csv_matrix(const std::string& path);

}  // namespace sobolmat
