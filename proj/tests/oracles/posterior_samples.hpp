#pragma once

// Spread of the closed Sobol' matrix over GP posterior draws. Each draw is a
// joint Gaussian sample of every output on a tensor Gauss-Legendre grid; the
// marginal means and variances are then quadratures of that sample.

#include <random>

#include "oracles/nested_quadrature.hpp"

namespace oracle {

struct SampledSobol {
  Matrix mean;  // average S_m over draws
  Matrix sd;    // sample standard deviation of S_m over draws
};

inline SampledSobol sample_sobol(const Surrogate& s, const AxisSet& m, int order, int draws,
                                 std::uint64_t seed) {
  const std::size_t M = s.input_dims(), L = s.output_dims();
  const auto g = tensor_grid(M, order);
  const auto P = g.points.rows();
  const Matrix mean = s.predict_mean(g.points);
  const auto cov = s.posterior_kernel(g.points, g.points);
  std::vector<Matrix> chol;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix c = cov[l];
    c.diagonal().array() += 1e-10 * c.diagonal().maxCoeff() + 1e-14;
    Eigen::LLT<Matrix> llt(c);
    chol.push_back(llt.matrixL());
  }
  // grid index decomposes as sum_i digit_i order^i with axis 0 fastest
  std::vector<Eigen::Index> group(P);
  Eigen::Index groups = 1;
  for (std::size_t i = 0; i < m.size(); ++i) groups *= order;
  for (Eigen::Index k = 0; k < P; ++k) {
    Eigen::Index t = k, key = 0, stride = 1;
    for (std::size_t i = 0; i < M; ++i) {
      const Eigen::Index digit = t % order;
      t /= order;
      if (m.contains(i)) {
        key += digit * stride;
        stride *= order;
      }
    }
    group[k] = key;
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  Matrix sum = Matrix::Zero(L, L), sum2 = Matrix::Zero(L, L);
  Matrix y(P, L);
  Vector eps(P);
  for (int d = 0; d < draws; ++d) {
    for (std::size_t l = 0; l < L; ++l) {
      for (auto& e : eps) e = z(gen);
      y.col(l) = mean.col(l) + chol[l] * eps;
    }
    const Eigen::RowVectorXd centre = g.weights.transpose() * y;
    Matrix yc = y.rowwise() - centre;
    const Vector d2 = (yc.array().square().matrix().transpose() * g.weights);
    // marginal mean per group: weighted average over the complementary axes
    Matrix ym = Matrix::Zero(groups, L);
    Vector gw = Vector::Zero(groups);
    for (Eigen::Index k = 0; k < P; ++k) {
      ym.row(group[k]) += g.weights[k] * yc.row(k);
      gw[group[k]] += g.weights[k];
    }
    Matrix v = Matrix::Zero(L, L);
    for (Eigen::Index k = 0; k < groups; ++k) {
      const Eigen::RowVectorXd r = ym.row(k) / gw[k];
      v += gw[k] * r.transpose() * r;
    }
    const Vector dev = d2.cwiseSqrt();
    const Matrix sm = v.cwiseQuotient(dev * dev.transpose());
    sum += sm;
    sum2 += sm.cwiseAbs2();
  }
  SampledSobol out;
  out.mean = sum / draws;
  out.sd = ((sum2 / draws - out.mean.cwiseAbs2()) * (draws / (draws - 1.0))).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace oracle
