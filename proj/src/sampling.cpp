#include "sobolmat/sampling.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sobolmat/errors.hpp"
#include "sobolmat/rng.hpp"

namespace sobolmat {

void DesignMatrix::validate() const {
  if (inputs.rows() < 1) throw DomainError("design has no rows");
  if (inputs.rows() != outputs.rows()) throw DomainError("design row counts differ");
  if ((inputs.array() < 0.0).any() || (inputs.array() > 1.0).any())
    throw DomainError("design inputs outside the unit cube");
}

DesignMatrix DesignMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  DesignMatrix out;
  out.inputs.resize(rows.size(), inputs.cols());
  out.outputs.resize(rows.size(), outputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(i) = inputs.row(rows[i]);
    out.outputs.row(i) = outputs.row(rows[i]);
  }
  out.seed = seed;
  out.fold = fold;
  out.noise = noise;
  return out;
}

Matrix latin_hypercube(std::size_t n, std::size_t dims, std::uint64_t seed) {
  if (n < 1 || dims < 1) throw DomainError("latin_hypercube needs n >= 1 and dims >= 1");
  Matrix u(n, dims);
  std::vector<std::size_t> strata(n);
  for (std::size_t m = 0; m < dims; ++m) {
    std::mt19937_64 gen(derive_seed(seed, m));
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), gen);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      double v = (static_cast<double>(strata[i]) + jitter(gen)) / static_cast<double>(n);
      // keep the point strictly inside its stratum despite rounding
      const double upper = std::nextafter((strata[i] + 1.0) / static_cast<double>(n), 0.0);
      u(i, m) = std::min(v, upper);
    }
  }
  return u;
}

std::pair<DesignMatrix, DesignMatrix> split_two_fold(const DesignMatrix& design,
                                                     std::uint64_t seed) {
  const auto rows = design.rows();
  if (rows % 2 != 0) throw OddRowCount(rows);
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 gen(derive_seed(seed, 0x5f1177));
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<std::size_t> first(order.begin(), order.begin() + rows / 2);
  std::vector<std::size_t> second(order.begin() + rows / 2, order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  auto a = design.select_rows(first);
  auto b = design.select_rows(second);
  a.fold = 0;
  b.fold = 1;
  return {std::move(a), std::move(b)};
}

Matrix quantile_transform(const Matrix& u, const std::function<double(double)>& cdf_inverse) {
  return u.unaryExpr([&](double v) { return cdf_inverse(v); });
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

void write_design_csv(std::ostream& out, const DesignMatrix& d) {
  for (std::size_t m = 0; m < d.input_dims(); ++m) out << (m ? "," : "") << 'u' << m;
  for (std::size_t l = 0; l < d.output_dims(); ++l)
    out << (d.input_dims() + l ? "," : "") << 'y' << l;
  out << '\n';
  for (std::size_t n = 0; n < d.rows(); ++n) {
    bool first = true;
    auto put = [&](double v) {
      if (!first) out << ',';
      first = false;
      out << format_double(v);
    };
    for (std::size_t m = 0; m < d.input_dims(); ++m) put(d.inputs(n, m));
    for (std::size_t l = 0; l < d.output_dims(); ++l) put(d.outputs(n, l));
    out << '\n';
  }
}

DesignMatrix read_design_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw DomainError("empty design CSV");
  std::size_t n_in = 0, n_out = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (!col.empty() && col.back() == '\r') col.pop_back();
      if (col.empty()) throw DomainError("empty design CSV column name");
      if (col[0] == 'u') {
        if (n_out) throw DomainError("input columns must precede output columns");
        ++n_in;
      } else if (col[0] == 'y') {
        ++n_out;
      } else {
        throw DomainError("unexpected design CSV column '" + col + "'");
      }
    }
  }
  const Matrix body = read_csv_matrix(in);
  if (body.cols() != static_cast<Eigen::Index>(n_in + n_out))
    throw DomainError("design CSV width does not match header");
  DesignMatrix d;
  d.inputs = body.leftCols(n_in);
  d.outputs = body.rightCols(n_out);
  d.validate();
  return d;
}

DesignMatrix read_design_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_design_csv(in);
}

}  // namespace sobolmat
