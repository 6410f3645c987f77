#include "sobolmat/tensor.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sobolmat/errors.hpp"

namespace sobolmat {

Matrix hadamard_div(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DomainError("hadamard_div: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (b(i, j) == 0.0)
        throw DivisionByZero(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      out(i, j) = a(i, j) / b(i, j);
    }
  return out;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value,
                                 std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_csv(out, m);
}

void write_csv(std::ostream& out, const Tensor4& t) {
  const auto n = t.extent();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
          out << a << ',' << b << ',' << c << ',' << d << ','
              << format_double(t(a, b, c, d)) << '\n';
}

Matrix read_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DomainError("non-numeric CSV cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DomainError("ragged CSV");
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_csv_matrix(in);
}

}  // namespace sobolmat
