#pragma once

// Checks shared by the acceptance binary and the unit tests. Each returns a
// verdict plus a one-line account of what was measured.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/nested_quadrature.hpp"
#include "sobolmat/bench.hpp"
#include "sobolmat/errors.hpp"
#include "sobolmat/ground_truth.hpp"
#include "sobolmat/gsa.hpp"
#include "sobolmat/moments.hpp"
#include "sobolmat/numerics.hpp"
#include "sobolmat/rng.hpp"
#include "sobolmat/sampling.hpp"
#include "sobolmat/test_functions.hpp"
#include "support.hpp"

namespace criteria {

using namespace sobolmat;

struct Verdict {
  bool pass = false;
  std::string detail;
};

inline std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

inline std::vector<AxisSet> all_subsets(std::size_t M) {
  std::vector<AxisSet> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << M); ++mask) {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < M; ++i)
      if (mask >> i & 1) axes.push_back(i);
    out.emplace_back(axes, M);
  }
  return out;
}

inline MultiOutputFunction mnu9_function() {
  return [](const Matrix& u) { return testfuncs::mnu9(u); };
}

// ---- tables --------------------------------------------------------------

inline Verdict oracle_tables(std::size_t points = std::size_t{1} << 16) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t k = 5; k >= 1; --k) {
    const Matrix est = oracle_sobol_matrix(mnu9_function(), 5, AxisSet::prefix(k, 5), points,
                                           derive_seed(17, k));
    worst = std::max(worst, (est - testfuncs::closed_table(k)).cwiseAbs().maxCoeff());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 0.015 && secs < 120.0,
          "max |oracle - table| = " + fmt(worst) + " in " + fmt(secs) + " s"};
}

// ---- the benchmark model fitted once per (N, E) --------------------------

struct FittedCase {
  Surrogate surrogate;
  double seconds = 0.0;
};

inline FitOptions acceptance_fit() {
  FitOptions o;
  o.restarts = 3;
  o.seed = 29;
  return o;
}

inline FittedCase fit_benchmark(std::size_t N, double E, std::uint64_t seed,
                                std::optional<std::size_t> only_output = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  DesignMatrix d;
  d.inputs = latin_hypercube(N, 5, derive_seed(seed, 1));
  Matrix y = testfuncs::add_noise(testfuncs::standardize(testfuncs::mnu9(d.inputs)).values,
                                  {E, derive_seed(seed, 2)});
  d.outputs = only_output ? Matrix(y.col(static_cast<Eigen::Index>(*only_output))) : y;
  FittedCase c{Surrogate::fit(d, acceptance_fit())};
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c;
}

// S_m from V_m alone; no error tensors are needed for the point estimate.
inline std::vector<Matrix> point_estimates(const Surrogate& s, const std::vector<AxisSet>& subsets) {
  const MomentEngine e(s);
  const Vector D = e.marginal_variance(AxisSet::full(s.input_dims())).diagonal().cwiseSqrt();
  std::vector<Matrix> out;
  for (const auto& m : subsets) out.push_back(closed_sobol_matrix(e.marginal_variance(m), D));
  return out;
}

inline Verdict ishigami_spot(const Surrogate& big) {
  const Matrix oracle = oracle_sobol_matrix(mnu9_function(), 5, AxisSet({0}, 5), std::size_t{1} << 18, 5);
  const double gp = point_estimates(big, {AxisSet({0}, 5)}).front()(0, 0);
  const bool pass = std::abs(oracle(0, 0) - 0.314) <= 0.005 && std::abs(gp - 0.314) <= 0.005;
  return {pass, "oracle " + fmt(oracle(0, 0)) + ", moment pipeline " + fmt(gp) + " (target 0.314)"};
}

inline double median_prefix_error(const Surrogate& s) {
  std::vector<AxisSet> prefixes;
  for (std::size_t k = 1; k <= 5; ++k) prefixes.push_back(AxisSet::prefix(k, 5));
  const auto est = point_estimates(s, prefixes);
  std::vector<double> a;
  for (std::size_t k = 0; k < 5; ++k) {
    const Matrix diff = (est[k] - testfuncs::closed_table(k + 1)).cwiseAbs();
    a.insert(a.end(), diff.reshaped().begin(), diff.reshaped().end());
  }
  return nearest_rank(a, 0.5);
}

inline Verdict pipeline_accuracy(const Surrogate& big, const Surrogate& small) {
  const double a_big = median_prefix_error(big), a_small = median_prefix_error(small);
  return {a_big <= 0.02 && a_small <= 0.10,
          "median A: N=2048,E=0.0025 -> " + fmt(a_big) + " (<= 0.02); N=90,E=0.1 -> " +
              fmt(a_small) + " (<= 0.10)"};
}

// ---- noise invariance ----------------------------------------------------

inline double max_gap_with_nan(const Matrix& a, const Matrix& b) {
  double gap = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.reshaped()[i], y = b.reshaped()[i];
    if (std::isnan(x) != std::isnan(y)) return INFINITY;
    if (!std::isnan(x)) gap = std::max(gap, std::abs(x - y));
  }
  return gap;
}

inline Verdict noise_invariance(const std::vector<Surrogate>& models) {
  double worst = 0.0;
  for (const auto& s : models) {
    const std::size_t M = s.input_dims();
    std::vector<AxisSet> subsets;
    for (std::size_t k = 1; k <= M; ++k) subsets.push_back(AxisSet::prefix(k, M));
    const auto base = sobol_reports(s, subsets);
    for (double c : {0.1, 1.0}) {
      MomentOptions o;
      o.kernel_offset = c;
      const auto shifted = sobol_reports(s, subsets, o);
      for (std::size_t i = 0; i < base.size(); ++i) {
        worst = std::max(worst, max_gap_with_nan(base[i].S, shifted[i].S));
        worst = std::max(worst, max_gap_with_nan(base[i].T, shifted[i].T));
      }
    }
  }
  return {worst <= 1e-10, "max |change| in S and T over " + std::to_string(models.size()) +
                              " models = " + fmt(worst)};
}

// ---- structural invariants -------------------------------------------------

// Every violated invariant of one surrogate, empty when all hold.
inline std::vector<std::string> structural_violations(const Surrogate& s) {
  std::vector<std::string> bad;
  const std::size_t M = s.input_dims(), L = s.output_dims();
  const auto subsets = all_subsets(M);
  std::vector<AxisSet> nonempty(subsets.begin() + 1, subsets.end());
  const MomentEngine engine(s);
  const auto reports = sobol_reports(engine, nonempty);
  const SobolReport& full = reports.back();
  const double tol = 1e-10;

  if ((full.S.diagonal() - Vector::Ones(L)).cwiseAbs().maxCoeff() > tol) bad.push_back("S_M diagonal");
  if (full.T.diagonal().cwiseAbs().maxCoeff() > 1e-6 * (1.0 + full.T.cwiseAbs().maxCoeff()))
    bad.push_back("diag T_M");
  const Vector D = full.D;
  if (closed_sobol_matrix(engine.marginal_variance(AxisSet::empty(M)), D).cwiseAbs().maxCoeff() != 0.0)
    bad.push_back("S_empty");

  // sample points for the coefficient-of-determination identity
  const Matrix u = scrambled_sobol(4096, M, 77);
  const Matrix mu_full = s.predict_mean(u);

  for (const auto& r : reports) {
    const std::string tag = " for " + r.subset.label();
    if ((r.S - r.S.transpose()).cwiseAbs().maxCoeff() > tol) bad.push_back("symmetry" + tag);
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t lp = 0; lp < L; ++lp)
        if (std::abs(r.S(l, lp)) > std::sqrt(std::max(0.0, r.S(l, l) * r.S(lp, lp))) + tol)
          bad.push_back("Cauchy-Schwarz" + tag);
    if (r.S_total != full.S - r.S) bad.push_back("total S" + tag);
    if (max_gap_with_nan(r.T_total, full.T + r.T) != 0.0) bad.push_back("total T" + tag);
    for (std::size_t l = 0; l < L; ++l)
      if (std::abs(scalar_sobol_index(s, r.subset, l) - r.S(l, l)) > tol)
        bad.push_back("scalar index" + tag);

    Matrix u_m(u.rows(), static_cast<Eigen::Index>(r.subset.size()));
    for (std::size_t c = 0; c < r.subset.size(); ++c) u_m.col(c) = u.col(r.subset.axes()[c]);
    const Matrix mu_m = engine.marginal_mean(r.subset, u_m);
    for (std::size_t l = 0; l < L; ++l) {
      const Vector a = mu_m.col(l).array() - mu_m.col(l).mean();
      const Vector b = mu_full.col(l).array() - mu_full.col(l).mean();
      const double r2 = std::pow(a.dot(b), 2) / (a.squaredNorm() * b.squaredNorm());
      if (std::abs(r2 - r.S(l, l)) > 5e-3) bad.push_back("R2 identity" + tag);
    }
  }
  return bad;
}

inline Verdict structural_suite(int count = 50) {
  int failed = 0;
  std::string first;
  for (int k = 0; k < count; ++k) {
    const std::size_t M = 1 + k % 3, L = 1 + k % 4, N = 8 + (k * 7) % 25;
    const auto s = testsupport::random_gp(M, L, N, 1000 + k);
    const auto bad = structural_violations(s);
    if (!bad.empty()) {
      ++failed;
      if (first.empty()) first = " first: " + bad.front() + " (gp " + std::to_string(k) + ")";
    }
  }
  return {failed == 0, std::to_string(count - failed) + "/" + std::to_string(count) +
                           " random GPs satisfy every invariant" + first};
}

// ---- brute-force equivalence -----------------------------------------------

inline double relative_gap(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

inline Verdict brute_force_equivalence(int count = 6) {
  double worst_v = 0.0, worst_w = 0.0;
  for (int k = 0; k < count; ++k) {
    const std::size_t M = 1 + k % 2, L = 1 + k % 3, N = 6 + (k * 5) % 11;
    const auto s = testsupport::random_gp(M, L, N, 500 + k);
    const MomentEngine e(s);
    const oracle::NestedQuadrature brute(s, 40);
    for (const auto& m : all_subsets(M)) {
      if (m.empty()) continue;
      worst_v = std::max(worst_v, relative_gap(e.marginal_variance(m), brute.marginal_variance(m)));
      for (const auto& m2 : all_subsets(M)) {
        if (m2.empty()) continue;
        const Tensor4 w = e.covariance_of_variances(m, m2);
        double gap = 0.0, scale = 0.0;
        for (std::size_t a = 0; a < L; ++a)
          for (std::size_t b = 0; b < L; ++b)
            for (std::size_t c = 0; c < L; ++c)
              for (std::size_t d = 0; d < L; ++d) {
                const double ref = brute.covariance(m, m2, a, b, c, d);
                gap = std::max(gap, std::abs(w(a, b, c, d) - ref));
                scale = std::max(scale, std::abs(ref));
              }
        worst_w = std::max(worst_w, gap / std::max(1e-300, scale));
      }
    }
  }
  return {worst_v <= 1e-6 && worst_w <= 1e-6,
          "max relative gap V " + fmt(worst_v) + ", W " + fmt(worst_w) + " over " +
              std::to_string(count) + " GPs"};
}

// ---- standardized scores ---------------------------------------------------

inline BenchmarkGrid reduced_grid() {
  BenchmarkGrid g;
  g.M = {5};
  g.N = {210, 512};
  g.E = {0.0025, 0.1, 0.5};
  g.seed = 3;
  g.fit.restarts = 3;
  return g;
}

inline Verdict score_behaviour(const std::vector<ElementRow>& rows) {
  const auto med = aggregate(rows, Metric::score, 0.5);
  const auto q90 = aggregate(rows, Metric::score, 0.9);
  bool pass = med.empty_cells == 0;
  std::ostringstream detail;
  detail << "median/q90 A/T per (N,E):";
  for (Eigen::Index i = 0; i < med.values.rows(); ++i)
    for (Eigen::Index j = 0; j < med.values.cols(); ++j) {
      const double a = med.values(i, j), b = q90.values(i, j);
      detail << " " << fmt(std::pow(10.0, med.col_keys[j])) << "/" << fmt(std::pow(10.0, -med.row_keys[i]))
             << "=" << fmt(a) << "/" << fmt(b);
      if (!(a <= 3.0 && b <= 6.0)) pass = false;
    }
  return {pass, detail.str()};
}

// ---- toy example -------------------------------------------------------------

inline Matrix toy(const Matrix& u) {
  const Vector w0 = std::sqrt(3.0) * (2.0 * u.col(0).array() - 1.0);
  const Vector w1 = std::sqrt(3.0) * (2.0 * u.col(1).array() - 1.0);
  Matrix y(u.rows(), 2);
  y.col(0) = w0 + w1;
  y.col(1) = w0 - w1;
  return y;
}

inline Verdict toy_example(std::size_t points = std::size_t{1} << 20) {
  Matrix e0(2, 2), e1(2, 2);
  e0 << 0.5, 0.5, 0.5, 0.5;
  e1 << 0.5, -0.5, -0.5, 0.5;
  const double g0 = (oracle_sobol_matrix(toy, 2, AxisSet({0}, 2), points, 41) - e0).cwiseAbs().maxCoeff();
  const double g1 = (oracle_sobol_matrix(toy, 2, AxisSet({1}, 2), points, 42) - e1).cwiseAbs().maxCoeff();
  return {g0 <= 1e-6 && g1 <= 1e-6, "max gap S_(0) " + fmt(g0) + ", S_(1) " + fmt(g1)};
}

}  // namespace criteria
