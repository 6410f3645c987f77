#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sobolmat/sampling.hpp"
#include "sobolmat/tensor.hpp"

namespace sobolmat {

/// ARD squared-exponential kernel s2 * exp(-0.5 * sum_i (x_i - x'_i)^2 / l_i^2),
/// plus homoskedastic noise on the diagonal of the training Gram matrix.
struct RbfKernelParams {
  Vector lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;

  void validate(std::size_t dims) const;
};

struct FitOptions {
  int restarts = 8;
  std::uint64_t seed = 0;
  int max_iterations = 200;
  /// Hyperparameters are tuned on a seeded subset of at most this many rows;
  /// the final model always conditions on every row.
  std::size_t max_optimization_points = 512;
  double min_lengthscale = 1e-3;
  double max_lengthscale = 1e3;
  double min_noise = 1e-8;
  double max_noise = 1e2;
  /// Signal variance bounds, as multiples of each output's sample variance.
  /// A tight upper bound keeps smooth outputs from drifting to huge s2 with
  /// long lengthscales, where standard errors lose all precision.
  double min_signal = 1e-4;
  double max_signal = 10.0;
  /// Worker threads across outputs; results do not depend on it.
  int threads = 1;
};

/// Fit diagnostics of one output's GP.
struct FitDiagnostics {
  double log_likelihood = 0.0;  ///< on the optimization subset
  double condition_estimate = 0.0;
  int restarts_succeeded = 0;
  /// Log-likelihood after each accepted iteration of the winning restart.
  std::vector<double> likelihood_trace;
};

/// One independent GP per output, conditioned on a shared design.
struct OutputGp {
  RbfKernelParams params;
  double jitter = 0.0;   ///< extra diagonal used when factorizing
  Vector targets;        ///< N
  Vector dual_weights;   ///< (K + (noise + jitter) I)^{-1} targets
  Matrix factor;         ///< lower Cholesky factor of the regularized Gram matrix
  FitDiagnostics diagnostics;
};

struct ValidationResult {
  Vector rmse;     ///< per output
  Vector mean_sd;  ///< per output, mean latent predictive sd at the held-out inputs (noise excluded)
};

class Surrogate {
 public:
  /// Tune hyperparameters by maximizing the marginal likelihood, then condition.
  static Surrogate fit(const DesignMatrix& design, const FitOptions& options = {});
  /// Condition on data with fixed hyperparameters (one entry per output).
  static Surrogate condition(const Matrix& inputs, const Matrix& targets,
                             const std::vector<RbfKernelParams>& params);

  std::size_t input_dims() const { return static_cast<std::size_t>(inputs_.cols()); }
  std::size_t output_dims() const { return outputs_.size(); }
  std::size_t training_size() const { return static_cast<std::size_t>(inputs_.rows()); }
  const Matrix& training_inputs() const { return inputs_; }
  const OutputGp& output(std::size_t l) const { return outputs_.at(l); }
  /// The same model restricted to one output.
  Surrogate single_output(std::size_t l) const;

  /// Posterior mean, P x L.
  Matrix predict_mean(const Matrix& u) const;
  /// Posterior variance of the latent function, P x L.
  Matrix predict_variance(const Matrix& u) const;
  /// Posterior covariance between u (P x M) and u2 (P2 x M), one P x P2 block
  /// per output. Cross-output blocks are identically zero.
  std::vector<Matrix> posterior_kernel(const Matrix& u, const Matrix& u2) const;
  /// Prior kernel block of output l.
  Matrix prior_kernel(std::size_t l, const Matrix& u, const Matrix& u2) const;

  ValidationResult validate(const DesignMatrix& held_out) const;

  std::string to_json() const;
  static Surrogate from_json(const std::string& text);

 private:
  static OutputGp condition_output(const Matrix& inputs, const Vector& targets,
                                   const RbfKernelParams& params, double jitter_hint);
  Matrix inputs_;
  std::vector<OutputGp> outputs_;
};

/// Gram matrix of the noiseless kernel between the rows of a and b.
Matrix rbf_gram(const Matrix& a, const Matrix& b, const RbfKernelParams& p);

/// Log marginal likelihood and its gradient w.r.t. (log l_1..log l_M,
/// log s2, log noise). Returns false when factorization fails at max jitter.
bool log_marginal_likelihood(const Matrix& inputs, const Vector& targets,
                             const RbfKernelParams& p, double* value, Vector* gradient);

}  // namespace sobolmat
