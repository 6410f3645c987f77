#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sobolmat/axis_set.hpp"
#include "sobolmat/errors.hpp"
#include "sobolmat/numerics.hpp"
#include "sobolmat/tensor.hpp"

using namespace sobolmat;

TEST_CASE("complement examples") {
  CHECK(AxisSet({0, 1}, 5).complement() == AxisSet({2, 3, 4}, 5));
  CHECK(AxisSet::empty(5).complement() == AxisSet::full(5));
  CHECK(AxisSet::full(5).complement() == AxisSet::empty(5));
}

TEST_CASE("complement is an involution and partitions the axes") {
  for (unsigned mask = 0; mask < 32; ++mask) {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < 5; ++i)
      if (mask >> i & 1u) axes.push_back(i);
    const AxisSet m(axes, 5);
    CHECK(m.complement().complement() == m);
    CHECK(m.size() + m.complement().size() == 5);
    CHECK(m.intersect(m.complement()).empty());
  }
}

TEST_CASE("axis sets are canonical") {
  CHECK(AxisSet({3, 0, 1}, 4) == AxisSet({0, 1, 3}, 4));
  CHECK_THROWS_AS(AxisSet({2, 2, 1}, 4), DomainError);
  CHECK_THROWS_AS(AxisSet({4}, 4), DomainError);
  CHECK(AxisSet::parse("0,2", 3) == AxisSet({0, 2}, 3));
  CHECK(AxisSet::parse("", 3).empty());
  CHECK(AxisSet::parse("-", 3).empty());
  CHECK_THROWS_AS(AxisSet::parse("0,x", 3), DomainError);
  CHECK(AxisSet({0, 2}, 3).label() == "0-2");
  CHECK(AxisSet::empty(3).label() == "none");
  CHECK(AxisSet::prefix(2, 4) == AxisSet({0, 1}, 4));
  CHECK(AxisSet({1}, 3).with(0).without(1) == AxisSet({0}, 3));
}

TEST_CASE("hadamard_div examples") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(hadamard_div(a, a).isApprox(Matrix::Ones(2, 2)));
  CHECK(hadamard_div(Matrix::Zero(2, 2), Matrix::Ones(2, 2)).isZero(0.0));
  try {
    hadamard_div(Matrix::Ones(1, 1), Matrix::Zero(1, 1));
    FAIL("expected DivisionByZero");
  } catch (const DivisionByZero& e) {
    CHECK(e.row() == 0);
    CHECK(e.col() == 0);
  }
  CHECK_THROWS_AS(hadamard_div(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), DomainError);
}

TEST_CASE("hadamard_div inverts the Hadamard product within 4 ulp") {
  Matrix a = Matrix::Random(6, 6), b = Matrix::Random(6, 6).array() + 2.0;
  const Matrix back = hadamard_div(a.cwiseProduct(b), b);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double ulp = std::nextafter(std::abs(a(i)), 1e300) - std::abs(a(i));
    CHECK(std::abs(back(i) - a(i)) <= 4 * ulp);
  }
}

TEST_CASE("csv round trip is bit exact") {
  Matrix m(2, 3);
  m << 0.1, 1.0 / 3.0, -2e-300, 1e300, std::nextafter(1.0, 2.0), 0.0;
  std::stringstream ss;
  write_csv(ss, m);
  const Matrix back = read_csv_matrix(ss);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) CHECK(back(i) == m(i));
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("tensor4 indexing and csv") {
  Tensor4 t(2);
  t(1, 0, 1, 1) = 3.5;
  t(0, 1, 0, 0) = -4.0;
  CHECK(t(1, 0, 1, 1) == 3.5);
  CHECK(t.max_abs() == 4.0);
  std::stringstream ss;
  write_csv(ss, t);
  CHECK(ss.str().find("1,0,1,1,3.5") != std::string::npos);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const auto r = gauss_legendre(8);
  for (int k = 0; k < 16; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
  }
  const auto c = composite_gauss_legendre(4, 3);
  CHECK(c.size() == 12);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c.weights[i] * std::exp(c.nodes[i]);
  CHECK(s == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("scrambled sobol points are deterministic and inside the cube") {
  const Matrix a = scrambled_sobol(1024, 3, 7), b = scrambled_sobol(1024, 3, 7);
  CHECK(a == b);
  CHECK(a.minCoeff() > 0.0);
  CHECK(a.maxCoeff() < 1.0);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(a.col(j).mean() == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(scrambled_sobol(16, 2, 8) != scrambled_sobol(16, 2, 7));
}
