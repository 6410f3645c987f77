#pragma once

#include <vector>

#include "sobolmat/axis_set.hpp"
#include "sobolmat/numerics.hpp"
#include "sobolmat/surrogate.hpp"
#include "sobolmat/tensor.hpp"

namespace sobolmat {

enum class IntegrationMethod {
  closed_form,  ///< erf expressions where they exist, quadrature only for nested integrals
  quadrature,   ///< Gauss-Legendre for every per-axis integral
};

struct MomentOptions {
  IntegrationMethod method = IntegrationMethod::closed_form;
  int quadrature_order = 32;
  /// Panels per axis; 0 picks enough to resolve the shortest lengthscale.
  int panels = 0;
  /// Constant added to the posterior kernel (homoskedastic noise on the
  /// second moment). Centered moments make every result independent of it.
  double kernel_offset = 0.0;
  int threads = 1;
};

/// The subset-specific quantities that the Sobol' error needs, for one m.
/// With independent outputs only these T contractions enter Q.
struct SubsetMoments {
  AxisSet subset;
  Matrix V;    ///< L x L, E[mu_m (x) mu_m] - mu_0 (x) mu_0
  Matrix Tmm;  ///< (p,q): integral of mu~_m^p k^q mu~_m^p
  Matrix TmM;  ///< (p,q): integral of mu~_m^p k^q mu~_M^q
};

/// Everything the Sobol' layer needs for a batch of subsets.
struct MomentBatch {
  Vector mean;          ///< mu_0 per output
  SubsetMoments full;   ///< the full set M; full.V is V_M
  std::vector<SubsetMoments> subsets;

  /// T_MM(l,l,l) per output.
  Vector full_self_term() const { return full.TmM.diagonal(); }
  double integration_error = 0.0;  ///< worst quadrature-vs-closed-form gap on G
};

/// Marginalizes a fitted Surrogate over the uniform measure on the unit cube.
/// Read-only over the surrogate, which must outlive the engine.
class MomentEngine {
 public:
  explicit MomentEngine(const Surrogate& s, MomentOptions options = {});

  std::size_t input_dims() const { return dims_; }
  std::size_t output_dims() const { return outputs_; }
  const MomentOptions& options() const { return options_; }
  const QuadratureRule& rule(std::size_t axis) const { return rules_.at(axis); }

  /// mu_0 per output: the posterior mean averaged over the whole cube.
  const Vector& full_mean() const { return mu0_; }
  /// Worst relative gap between quadrature and closed-form G over all axes.
  double integration_error() const { return integration_error_; }

  /// mu_m at P points given only the retained coordinates (P x |m|).
  Matrix marginal_mean(const AxisSet& m, const Matrix& u_m) const;
  /// V_m = E_m[mu~_m (x) mu~_m], L x L.
  Matrix marginal_variance(const AxisSet& m) const;
  /// Posterior kernel marginalized over the complements of m and m2, one
  /// P x P2 block per output (cross-output blocks vanish).
  std::vector<Matrix> marginal_second_moment(const AxisSet& m, const AxisSet& m2,
                                             const Matrix& u_m, const Matrix& u_m2) const;
  /// W_{m m2}[a,b,c,d] = Cov(V_m[a,b], V_m2[c,d]) to second order in the
  /// posterior kernel, as a sum over index permutations.
  Tensor4 covariance_of_variances(const AxisSet& m, const AxisSet& m2) const;

  /// T_{m m2}(p,q,r) = E E[mu~_m^p(u) mu_{m m2}^q(u,u') mu~_m2^r(u')].
  double cross_term(const AxisSet& m, const AxisSet& m2, std::size_t p, std::size_t q,
                    std::size_t r) const;

  /// V and the T contractions for many subsets at once, sharing per-axis work.
  MomentBatch analyze(const std::vector<AxisSet>& subsets) const;

  /// Per-axis integrals exposed for cross-checking the two backends.
  Vector axis_mean_kernel(std::size_t p, std::size_t axis) const;  ///< G^p_i(n)
  Matrix axis_pair_kernel(std::size_t p, std::size_t q, std::size_t axis) const;  ///< P^{pq}_i
  Vector axis_single_double(std::size_t p, std::size_t q, std::size_t axis) const;  ///< E^{pq}_i
  Matrix axis_triple(std::size_t p, std::size_t q, std::size_t r, std::size_t axis) const;  ///< R^{pqr}_i
  double axis_double(std::size_t q, std::size_t axis) const;  ///< c^q_i

 private:
  struct OutputCache {
    Vector beta;       ///< signal_variance * dual weights
    Matrix G;          ///< N x M, per-axis mean kernel
    Vector c;          ///< M, per-axis double integral of g
    double s2 = 1.0;
  };

  double lengthscale(std::size_t p, std::size_t axis) const;
  Vector weights_for(std::size_t p, const AxisSet& m) const;   ///< a^p_m
  Vector complement_g(std::size_t q, const AxisSet& m) const;  ///< gamma^q_m
  Matrix node_kernel(std::size_t p, std::size_t axis) const;   ///< Q x N, g^p(t, x_n)
  Vector node_mean_kernel(std::size_t q, std::size_t axis) const;  ///< Q, G^q(t)
  double residual(std::size_t p, const AxisSet& m) const;
  double prior_term(const AxisSet& m, const AxisSet& m2, std::size_t p, std::size_t q,
                    std::size_t r, const Matrix* triple_product) const;
  Vector data_vector(const AxisSet& m, std::size_t p, std::size_t q,
                     const Matrix& pair_product) const;  ///< h^{pq}_m
  Matrix pair_product(std::size_t p, std::size_t q, const AxisSet& m) const;
  Matrix triple_product(std::size_t p, std::size_t q, std::size_t r, const AxisSet& m) const;

  const Surrogate* s_;
  MomentOptions options_;
  std::size_t dims_, outputs_, n_;
  std::vector<QuadratureRule> rules_;
  std::vector<OutputCache> cache_;
  Vector mu0_;
  double integration_error_ = 0.0;
  std::vector<Matrix> single_double_;  ///< E^{pq}, N x M, indexed p * L + q
};

}  // namespace sobolmat
