#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sobolmat/axis_set.hpp"
#include "sobolmat/moments.hpp"
#include "sobolmat/surrogate.hpp"
#include "sobolmat/tensor.hpp"

namespace sobolmat {

struct SobolDiagnostics {
  double integration_error = 0.0;
  /// max over (l,l') of sqrt(Var V_m[l,l']) / |V_m[l,l']|; the error estimate
  /// assumes this is small.
  double relative_spread = 0.0;
  int clamped_q = 0;  ///< tiny negative Q entries set to zero
  int negative_q = 0;  ///< entries whose Q was clearly negative (T is NaN there)
};

struct SobolReport {
  AxisSet subset;
  Matrix S;        ///< closed Sobol' matrix S_m
  Matrix S_total;  ///< total Sobol' matrix of the complement, S_M - S_m
  Matrix T;        ///< standard error of S_m
  Matrix T_total;  ///< T_M + T_m
  Matrix V;        ///< V_m
  Vector D;        ///< output standard deviations sqrt(diag V_M)
  SobolDiagnostics diagnostics;
};

/// S_m = V_m / (D (x) D). Throws DivisionByZero on a zero D.
Matrix closed_sobol_matrix(const Matrix& V, const Vector& D);
/// S_M - S_m.
Matrix total_sobol_matrix(const Matrix& S_full, const Matrix& S_m);

/// Relative size, against the magnitude of the terms that cancel in Q, below
/// which a negative Q counts as rounding and is clamped to zero.
inline constexpr double kNegativeQTolerance = 1e-6;

/// Q_{ll'} from the three covariance tensors, read only at the entries the
/// delta method uses: W_mm[l,l',l,l'], W_mM[l,l',k,k] and W_MM[k,k,l,l] for
/// k in {l, l'}. Returns T = sqrt(Q) / (D_l D_l').
/// Negative Q within kNegativeQTolerance of its terms is clamped; beyond that
/// NegativeQ is thrown, or with mark_negative the entry becomes NaN for the
/// filter to drop.
Matrix sobol_error(const Tensor4& W_mm, const Tensor4& W_mM, const Tensor4& W_MM,
                   const Matrix& V, const Vector& D, int* clamped = nullptr,
                   bool mark_negative = false);

/// The sparse W entries that sobol_error reads, assembled from the T
/// contractions of independent-output moments.
struct ErrorTensors {
  Tensor4 W_mm, W_mM, W_MM;
};
ErrorTensors error_tensors(const SubsetMoments& m, const Vector& full_self_term);

/// One report per subset, sharing the moment computations.
std::vector<SobolReport> sobol_reports(const Surrogate& s, const std::vector<AxisSet>& subsets,
                                       const MomentOptions& options = {});
std::vector<SobolReport> sobol_reports(const MomentEngine& engine,
                                       const std::vector<AxisSet>& subsets);

/// Closed Sobol' matrix of a single input axis.
Matrix first_order_matrix(const Surrogate& s, std::size_t axis, const MomentOptions& options = {});

/// Scalar closed index of one output, computed on that output alone.
double scalar_sobol_index(const Surrogate& s, const AxisSet& m, std::size_t output,
                          const MomentOptions& options = {});

/// Vectorized model: P x M inputs in the unit cube to P x L outputs.
using MultiOutputFunction = std::function<Matrix(const Matrix&)>;

/// Pick-freeze Monte-Carlo estimate of S_m on scrambled Sobol' points:
/// V_m[l,l'] = E[f_l(u) (f_l'(u_m, u'_{-m}) - f_l'(u'))], symmetrized in
/// (l,l') and in the roles of u and u', divided by the sample D (x) D.
Matrix oracle_sobol_matrix(const MultiOutputFunction& f, std::size_t dims, const AxisSet& m,
                           std::size_t n_points, std::uint64_t seed);

/// Drop outputs whose results are numerically impossible: S_m[l,l] or
/// T_m[l,l'] outside [lo, hi] removes l and l' (and NaN anywhere in them).
struct FilterResult {
  std::vector<bool> keep;             ///< per output
  std::vector<std::size_t> removed;   ///< ascending
};
FilterResult filter_reports(const std::vector<SobolReport>& reports, double lo = -0.001,
                            double hi = 1.001);

/// Seminorm-style summaries of the square submatrix on `indices`.
struct SubmatrixSummary {
  double determinant = 0.0;
  double max_abs = 0.0;
};
SubmatrixSummary submatrix_summary(const Matrix& s, const std::vector<std::size_t>& indices);

}  // namespace sobolmat
