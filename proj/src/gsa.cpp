#include "sobolmat/gsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sobolmat/errors.hpp"
#include "sobolmat/numerics.hpp"

namespace sobolmat {

Matrix closed_sobol_matrix(const Matrix& V, const Vector& D) {
  if (V.rows() != V.cols() || V.rows() != D.size()) throw DomainError("V and D shapes differ");
  return hadamard_div(V, D * D.transpose());
}

Matrix total_sobol_matrix(const Matrix& S_full, const Matrix& S_m) {
  if (S_full.rows() != S_m.rows() || S_full.cols() != S_m.cols())
    throw DomainError("Sobol' matrix shapes differ");
  return S_full - S_m;
}

Matrix sobol_error(const Tensor4& W_mm, const Tensor4& W_mM, const Tensor4& W_MM, const Matrix& V,
                   const Vector& D, int* clamped, bool mark_negative) {
  const auto L = static_cast<std::size_t>(D.size());
  if (W_mm.extent() != L || W_mM.extent() != L || W_MM.extent() != L)
    throw DomainError("covariance tensor extent differs from output count");
  const Vector d2 = D.cwiseAbs2();
  Matrix q(L, L), scale(L, L);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t lp = 0; lp < L; ++lp) {
      const std::size_t pair[] = {l, lp};
      const double v = V(l, lp);
      double cross = 0.0, full = 0.0, cross_abs = 0.0, full_abs = 0.0;
      for (std::size_t k : pair) {
        const double c = W_mM(l, lp, k, k) / d2[k];
        const double f1 = W_MM(k, k, l, l) / (d2[k] * d2[l]);
        const double f2 = W_MM(k, k, lp, lp) / (d2[k] * d2[lp]);
        cross += c;
        full += f1 + f2;
        cross_abs += std::abs(c);
        full_abs += std::abs(f1) + std::abs(f2);
      }
      q(l, lp) = W_mm(l, lp, l, lp) - v * cross + 0.25 * v * v * full;
      scale(l, lp) = std::abs(W_mm(l, lp, l, lp)) + std::abs(v) * cross_abs + 0.25 * v * v * full_abs;
    }
  // Q is a difference of terms that each carry integration and rounding
  // error; only a deficit beyond that is treated as a genuine failure.
  int count = 0;
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t lp = 0; lp < L; ++lp) {
      double& x = q(l, lp);
      if (!std::isfinite(x) || x < -kNegativeQTolerance * scale(l, lp)) {
        if (!mark_negative) throw NegativeQ(l, lp, x);
        x = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (x < 0.0) {
        x = 0.0;
        ++count;
      }
    }
  if (clamped) *clamped = count;
  return hadamard_div(q.cwiseSqrt(), D * D.transpose());
}

ErrorTensors error_tensors(const SubsetMoments& m, const Vector& full_self_term) {
  const auto L = static_cast<std::size_t>(m.V.rows());
  ErrorTensors w{Tensor4(L), Tensor4(L), Tensor4(L)};
  for (std::size_t l = 0; l < L; ++l) {
    w.W_MM(l, l, l, l) = 4.0 * full_self_term[l];
    for (std::size_t lp = 0; lp < L; ++lp) {
      w.W_mm(l, lp, l, lp) = l == lp ? 4.0 * m.Tmm(l, l) : m.Tmm(l, lp) + m.Tmm(lp, l);
      for (std::size_t k : {l, lp})
        w.W_mM(l, lp, k, k) = 2.0 * ((lp == k ? m.TmM(l, k) : 0.0) + (l == k ? m.TmM(lp, k) : 0.0));
    }
  }
  return w;
}

std::vector<SobolReport> sobol_reports(const MomentEngine& engine,
                                       const std::vector<AxisSet>& subsets) {
  const auto batch = engine.analyze(subsets);
  const Vector d2 = batch.full.V.diagonal();
  for (Eigen::Index l = 0; l < d2.size(); ++l)
    if (!(d2[l] > 0.0)) throw DivisionByZero(static_cast<std::size_t>(l), static_cast<std::size_t>(l));
  const Vector D = d2.cwiseSqrt();
  const Vector self = batch.full_self_term();
  const Matrix S_full = closed_sobol_matrix(batch.full.V, D);
  const auto full_w = error_tensors(batch.full, self);
  int clamped_full = 0;
  const Matrix T_full = sobol_error(full_w.W_mm, full_w.W_mM, full_w.W_MM, batch.full.V, D,
                                    &clamped_full, true);

  std::vector<SobolReport> reports;
  for (const auto& m : batch.subsets) {
    SobolReport r;
    r.subset = m.subset;
    r.V = m.V;
    r.D = D;
    r.S = closed_sobol_matrix(m.V, D);
    r.S_total = total_sobol_matrix(S_full, r.S);
    const auto w = error_tensors(m, self);
    int clamped = 0;
    r.T = sobol_error(w.W_mm, w.W_mM, w.W_MM, m.V, D, &clamped, true);
    r.T_total = T_full + r.T;
    r.diagnostics.integration_error = batch.integration_error;
    r.diagnostics.clamped_q = clamped;
    r.diagnostics.negative_q = static_cast<int>(r.T.array().isNaN().count());
    for (Eigen::Index l = 0; l < m.V.rows(); ++l)
      for (Eigen::Index lp = 0; lp < m.V.cols(); ++lp) {
        const double v = std::abs(m.V(l, lp));
        const double spread = std::sqrt(std::max(0.0, w.W_mm(l, lp, l, lp)));
        if (v > 0.0) r.diagnostics.relative_spread = std::max(r.diagnostics.relative_spread, spread / v);
      }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<SobolReport> sobol_reports(const Surrogate& s, const std::vector<AxisSet>& subsets,
                                       const MomentOptions& options) {
  const MomentEngine engine(s, options);
  return sobol_reports(engine, subsets);
}

Matrix first_order_matrix(const Surrogate& s, std::size_t axis, const MomentOptions& options) {
  if (axis >= s.input_dims()) throw DomainError("axis out of range");
  const MomentEngine engine(s, options);
  const Matrix v_full = engine.marginal_variance(AxisSet::full(s.input_dims()));
  const Vector D = v_full.diagonal().cwiseMax(0.0).cwiseSqrt();
  return closed_sobol_matrix(engine.marginal_variance(AxisSet({axis}, s.input_dims())), D);
}

double scalar_sobol_index(const Surrogate& s, const AxisSet& m, std::size_t output,
                          const MomentOptions& options) {
  const Surrogate single = s.single_output(output);
  const MomentEngine engine(single, options);
  const double d2 = engine.marginal_variance(AxisSet::full(s.input_dims()))(0, 0);
  if (!(d2 > 0.0)) throw ZeroVariance(output);
  return engine.marginal_variance(m)(0, 0) / d2;
}

Matrix oracle_sobol_matrix(const MultiOutputFunction& f, std::size_t dims, const AxisSet& m,
                           std::size_t n_points, std::uint64_t seed) {
  if (n_points < 2) throw DomainError("oracle needs at least two points");
  if (m.ambient() != dims) throw DomainError("subset ambient dimension mismatch");
  const Matrix pts = scrambled_sobol(n_points, 2 * dims, seed);
  const Matrix u = pts.leftCols(dims), u2 = pts.rightCols(dims);
  Matrix mix = u2, mix2 = u;  // mix = (u_m, u'_{-m}), mix2 = (u'_m, u_{-m})
  for (std::size_t i : m.axes()) {
    mix.col(i) = u.col(i);
    mix2.col(i) = u2.col(i);
  }
  Matrix y = f(u), y2 = f(u2), ym = f(mix), ym2 = f(mix2);
  const auto L = y.cols();
  if (y2.cols() != L || ym.cols() != L || ym2.cols() != L) throw DomainError("inconsistent output width");
  const double n = static_cast<double>(n_points);
  // centering by the pooled mean leaves the estimator unbiased and tames cancellation
  const Eigen::RowVectorXd centre = 0.5 * (y.colwise().mean() + y2.colwise().mean());
  for (Matrix* a : {&y, &y2, &ym, &ym2}) a->rowwise() -= centre;
  const Matrix v1 = y.transpose() * (ym - y2) / n;
  const Matrix v2 = y2.transpose() * (ym2 - y) / n;
  const Matrix v = 0.25 * (v1 + v1.transpose() + v2 + v2.transpose());
  Vector d2(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const double var1 = (y.col(l).array() - y.col(l).mean()).square().sum() / (n - 1.0);
    const double var2 = (y2.col(l).array() - y2.col(l).mean()).square().sum() / (n - 1.0);
    d2[l] = 0.5 * (var1 + var2);
    if (!(d2[l] > 0.0)) throw ZeroVariance(static_cast<std::size_t>(l));
  }
  return closed_sobol_matrix(v, d2.cwiseSqrt());
}

FilterResult filter_reports(const std::vector<SobolReport>& reports, double lo, double hi) {
  std::size_t L = 0;
  for (const auto& r : reports) L = std::max<std::size_t>(L, r.S.rows());
  FilterResult out;
  out.keep.assign(L, true);
  auto bad = [&](double x) { return !(x >= lo && x <= hi); };
  for (const auto& r : reports)
    for (std::size_t l = 0; l < static_cast<std::size_t>(r.S.rows()); ++l) {
      if (bad(r.S(l, l))) out.keep[l] = false;
      for (std::size_t lp = 0; lp < static_cast<std::size_t>(r.T.cols()); ++lp)
        if (bad(r.T(l, lp))) out.keep[l] = out.keep[lp] = false;
    }
  for (std::size_t l = 0; l < L; ++l)
    if (!out.keep[l]) out.removed.push_back(l);
  return out;
}

SubmatrixSummary submatrix_summary(const Matrix& s, const std::vector<std::size_t>& indices) {
  const auto k = static_cast<Eigen::Index>(indices.size());
  Matrix sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) {
      if (indices[a] >= static_cast<std::size_t>(s.rows()) || indices[b] >= static_cast<std::size_t>(s.cols()))
        throw DomainError("submatrix index out of range");
      sub(a, b) = s(indices[a], indices[b]);
    }
  SubmatrixSummary out;
  if (k == 0) {
    out.determinant = 1.0;
    return out;
  }
  out.determinant = sub.determinant();
  out.max_abs = sub.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace sobolmat
