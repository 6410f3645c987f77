#include "sobolmat/surrogate.hpp"

#include <algorithm>
#include <limits>
#include <ceres/ceres.h>
#include <cmath>
#include <glog/logging.h>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <random>

#include "sobolmat/errors.hpp"
#include "sobolmat/parallel.hpp"
#include "sobolmat/rng.hpp"

namespace sobolmat {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Factorization {
  Matrix lower;
  double jitter = 0.0;
};

// Cholesky of K + j I with j escalating from 1e-8 to 1e-2 times the mean diagonal.
std::optional<Factorization> factorize(const Matrix& k, std::optional<double> fixed_jitter) {
  const double scale = k.trace() / static_cast<double>(k.rows());
  if (!std::isfinite(scale) || scale <= 0.0) return std::nullopt;
  auto attempt = [&](double j) -> std::optional<Factorization> {
    Matrix a = k;
    a.diagonal().array() += j;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Factorization f{llt.matrixL(), j};
    if (!f.lower.diagonal().allFinite() || (f.lower.diagonal().array() <= 0.0).any())
      return std::nullopt;
    return f;
  };
  if (fixed_jitter) return attempt(*fixed_jitter);
  for (double j = 1e-8 * scale; j <= 1e-2 * scale * (1.0 + 1e-9); j *= 10.0)
    if (auto f = attempt(j)) return f;
  return std::nullopt;
}

Matrix training_gram(const Matrix& x, const RbfKernelParams& p) {
  Matrix k = rbf_gram(x, x, p);
  k.diagonal().array() += p.noise_variance;
  return k;
}

struct Bounds {
  Vector lo, hi;  // in log space
};

Bounds make_bounds(std::size_t dims, const FitOptions& o, double variance) {
  Bounds b;
  b.lo.resize(dims + 2);
  b.hi.resize(dims + 2);
  for (std::size_t i = 0; i < dims; ++i) {
    b.lo[i] = std::log(o.min_lengthscale);
    b.hi[i] = std::log(o.max_lengthscale);
  }
  b.lo[dims] = std::log(o.min_signal * variance);
  b.hi[dims] = std::log(o.max_signal * variance);
  b.lo[dims + 1] = std::log(o.min_noise);
  b.hi[dims + 1] = std::log(o.max_noise);
  return b;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

RbfKernelParams from_unbounded(const double* z, const Bounds& b) {
  const auto dims = static_cast<std::size_t>(b.lo.size()) - 2;
  RbfKernelParams p;
  p.lengthscales.resize(dims);
  auto value = [&](std::size_t k) { return std::exp(b.lo[k] + (b.hi[k] - b.lo[k]) * sigmoid(z[k])); };
  for (std::size_t i = 0; i < dims; ++i) p.lengthscales[i] = value(i);
  p.signal_variance = value(dims);
  p.noise_variance = value(dims + 1);
  return p;
}

Vector to_unbounded(const RbfKernelParams& p, const Bounds& b) {
  const auto dims = static_cast<std::size_t>(b.lo.size()) - 2;
  Vector z(dims + 2);
  auto logit = [&](std::size_t k, double v) {
    double t = (std::log(v) - b.lo[k]) / (b.hi[k] - b.lo[k]);
    t = std::clamp(t, 1e-6, 1.0 - 1e-6);
    return std::log(t / (1.0 - t));
  };
  for (std::size_t i = 0; i < dims; ++i) z[i] = logit(i, p.lengthscales[i]);
  z[dims] = logit(dims, p.signal_variance);
  z[dims + 1] = logit(dims + 1, p.noise_variance);
  return z;
}

class NegativeLml final : public ceres::FirstOrderFunction {
 public:
  NegativeLml(const Matrix& x, const Vector& y, const Bounds& b) : x_(x), y_(y), b_(b) {}
  int NumParameters() const override { return static_cast<int>(b_.lo.size()); }
  bool Evaluate(const double* z, double* cost, double* gradient) const override {
    const auto p = from_unbounded(z, b_);
    double value = 0.0;
    Vector g;
    if (!log_marginal_likelihood(x_, y_, p, &value, gradient ? &g : nullptr)) return false;
    if (!std::isfinite(value)) return false;
    *cost = -value;
    if (gradient) {
      for (int k = 0; k < NumParameters(); ++k) {
        const double s = sigmoid(z[k]);
        gradient[k] = -g[k] * (b_.hi[k] - b_.lo[k]) * s * (1.0 - s);
      }
    }
    return true;
  }

 private:
  const Matrix& x_;
  const Vector& y_;
  const Bounds& b_;
};

struct RestartResult {
  bool ok = false;
  RbfKernelParams params;
  double lml = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

RestartResult run_restart(const Matrix& x, const Vector& y, const Bounds& b,
                          const RbfKernelParams& start, int max_iterations) {
  // line-search warnings from the solver are noise for callers
  static std::once_flag quiet;
  std::call_once(quiet, [] { FLAGS_minloglevel = google::GLOG_ERROR; });
  RestartResult r;
  Vector z = to_unbounded(start, b);
  ceres::GradientProblem problem(new NegativeLml(x, y, b));
  ceres::GradientProblemSolver::Options opts;
  opts.line_search_direction_type = ceres::LBFGS;
  opts.max_num_iterations = max_iterations;
  opts.function_tolerance = 1e-10;
  opts.gradient_tolerance = 1e-8;
  opts.parameter_tolerance = 1e-10;
  opts.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(opts, problem, z.data(), &summary);
  if (summary.iterations.empty() || !std::isfinite(summary.final_cost)) return r;
  // the initial point itself may be infeasible; then nothing was accepted
  if (summary.termination_type == ceres::FAILURE && summary.iterations.size() <= 1) return r;
  r.ok = true;
  r.params = from_unbounded(z.data(), b);
  r.lml = -summary.final_cost;
  for (const auto& it : summary.iterations) r.trace.push_back(-it.cost);
  return r;
}

RbfKernelParams draw_start(std::size_t dims, std::uint64_t seed, int restart, double variance) {
  RbfKernelParams p;
  p.lengthscales = Vector::Constant(dims, 0.5);
  p.signal_variance = variance;
  p.noise_variance = 1e-2;
  if (restart == 0) return p;
  std::mt19937_64 gen(derive_seed(seed, static_cast<std::uint64_t>(restart)));
  auto log_uniform = [&](double lo, double hi) {
    std::uniform_real_distribution<double> d(std::log(lo), std::log(hi));
    return std::exp(d(gen));
  };
  for (std::size_t i = 0; i < dims; ++i) p.lengthscales[i] = log_uniform(0.05, 5.0);
  p.signal_variance = variance * log_uniform(0.1, 10.0);
  p.noise_variance = log_uniform(1e-6, 1.0);
  return p;
}

std::vector<std::size_t> optimization_rows(std::size_t n, const FitOptions& o) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (o.max_optimization_points == 0 || n <= o.max_optimization_points) return rows;
  std::mt19937_64 gen(derive_seed(o.seed, 0x0b7a11));
  std::shuffle(rows.begin(), rows.end(), gen);
  rows.resize(o.max_optimization_points);
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

void RbfKernelParams::validate(std::size_t dims) const {
  if (static_cast<std::size_t>(lengthscales.size()) != dims)
    throw DomainError("lengthscale count does not match input dimension");
  if ((lengthscales.array() <= 0.0).any() || !lengthscales.allFinite())
    throw DomainError("lengthscales must be positive");
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
    throw DomainError("signal variance must be positive");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw DomainError("noise variance must be non-negative");
}

Matrix rbf_gram(const Matrix& a, const Matrix& b, const RbfKernelParams& p) {
  if (a.cols() != p.lengthscales.size() || b.cols() != p.lengthscales.size())
    throw DomainError("input width does not match lengthscales");
  const Vector inv = p.lengthscales.cwiseInverse();
  const Matrix as = a * inv.asDiagonal();
  const Matrix bs = b * inv.asDiagonal();
  const Vector an = as.rowwise().squaredNorm();
  const Vector bn = bs.rowwise().squaredNorm();
  Matrix d2 = -2.0 * as * bs.transpose();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return p.signal_variance * (-0.5 * d2.array().max(0.0)).exp().matrix();
}

bool log_marginal_likelihood(const Matrix& x, const Vector& y, const RbfKernelParams& p,
                             double* value, Vector* gradient) {
  const auto n = x.rows();
  const auto dims = x.cols();
  const Matrix kf = rbf_gram(x, x, p);
  Matrix k = kf;
  k.diagonal().array() += p.noise_variance;
  auto f = factorize(k, std::nullopt);
  if (!f) return false;
  const auto tri = f->lower.triangularView<Eigen::Lower>();
  const Vector w = tri.solve(y);
  *value = -0.5 * w.squaredNorm() - f->lower.diagonal().array().log().sum() -
           0.5 * static_cast<double>(n) * kLog2Pi;
  if (!std::isfinite(*value)) return false;
  if (!gradient) return true;

  Matrix linv = Matrix::Identity(n, n);
  tri.solveInPlace(linv);
  const Matrix kinv = linv.transpose() * linv;
  const Vector alpha = linv.transpose() * w;
  // dL/dtheta = 0.5 tr((alpha alpha^T - K^{-1}) dK/dtheta)
  Matrix gamma = alpha * alpha.transpose() - kinv;
  const Matrix gk = gamma.cwiseProduct(kf);
  gradient->resize(dims + 2);
  for (Eigen::Index i = 0; i < dims; ++i) {
    const double l2 = p.lengthscales[i] * p.lengthscales[i];
    double s = 0.0;
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) {
        const double d = x(r, i) - x(c, i);
        s += gk(r, c) * d * d;
      }
    (*gradient)[i] = 0.5 * s / l2;
  }
  (*gradient)[dims] = 0.5 * gk.sum();
  (*gradient)[dims + 1] = 0.5 * p.noise_variance * gamma.trace();
  return gradient->allFinite();
}

OutputGp Surrogate::condition_output(const Matrix& inputs, const Vector& targets,
                                     const RbfKernelParams& params, double jitter_hint) {
  params.validate(static_cast<std::size_t>(inputs.cols()));
  OutputGp gp;
  gp.params = params;
  gp.targets = targets;
  auto f = factorize(training_gram(inputs, params),
                     jitter_hint >= 0.0 ? std::optional<double>(jitter_hint) : std::nullopt);
  if (!f) throw FactorizationFailure("Gram matrix is not positive definite after maximum jitter");
  gp.factor = std::move(f->lower);
  gp.jitter = f->jitter;
  gp.dual_weights = gp.factor.triangularView<Eigen::Lower>().solve(targets);
  gp.factor.transpose().triangularView<Eigen::Upper>().solveInPlace(gp.dual_weights);
  const auto diag = gp.factor.diagonal();
  const double ratio = diag.maxCoeff() / diag.minCoeff();
  gp.diagnostics.condition_estimate = ratio * ratio;
  if (!gp.dual_weights.allFinite()) throw NonFiniteLikelihood("non-finite dual weights");
  return gp;
}

Surrogate Surrogate::fit(const DesignMatrix& design, const FitOptions& options) {
  design.validate();
  if (design.rows() < 2) throw DomainError("fit needs at least two rows");
  if (!design.outputs.allFinite()) throw DomainError("non-finite training targets");
  const auto dims = design.input_dims();
  const auto rows = optimization_rows(design.rows(), options);
  const DesignMatrix sub = design.select_rows(rows);

  Surrogate s;
  s.inputs_ = design.inputs;
  s.outputs_.resize(design.output_dims());
  parallel_for(design.output_dims(), options.threads, [&](std::size_t l) {
    const Vector y_sub = sub.outputs.col(l);
    // constant outputs fall back to unit scale
    double variance = (y_sub.array() - y_sub.mean()).square().sum() / static_cast<double>(y_sub.size() - 1);
    if (!(variance > 1e-12)) variance = 1.0;
    const auto bounds = make_bounds(dims, options, variance);
    const auto seed = derive_seed(options.seed, l);
    RestartResult best;
    int succeeded = 0;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      auto result = run_restart(sub.inputs, y_sub, bounds, draw_start(dims, seed, r, variance),
                                options.max_iterations);
      if (!result.ok) continue;
      ++succeeded;
      if (result.lml > best.lml) best = std::move(result);
    }
    if (!best.ok) throw FactorizationFailure("no hyperparameter restart produced a stable fit");
    if (!std::isfinite(best.lml)) throw NonFiniteLikelihood("non-finite marginal likelihood");
    auto gp = condition_output(design.inputs, design.outputs.col(l), best.params, -1.0);
    gp.diagnostics.log_likelihood = best.lml;
    gp.diagnostics.restarts_succeeded = succeeded;
    gp.diagnostics.likelihood_trace = std::move(best.trace);
    s.outputs_[l] = std::move(gp);
  });
  return s;
}

Surrogate Surrogate::condition(const Matrix& inputs, const Matrix& targets,
                               const std::vector<RbfKernelParams>& params) {
  if (inputs.rows() != targets.rows()) throw DomainError("input and target row counts differ");
  if (static_cast<Eigen::Index>(params.size()) != targets.cols())
    throw DomainError("need one parameter set per output");
  if ((inputs.array() < 0.0).any() || (inputs.array() > 1.0).any())
    throw DomainError("training inputs outside the unit cube");
  Surrogate s;
  s.inputs_ = inputs;
  for (std::size_t l = 0; l < params.size(); ++l)
    s.outputs_.push_back(condition_output(inputs, targets.col(l), params[l], -1.0));
  return s;
}

Surrogate Surrogate::single_output(std::size_t l) const {
  Surrogate s;
  s.inputs_ = inputs_;
  s.outputs_.push_back(outputs_.at(l));
  return s;
}

Matrix Surrogate::prior_kernel(std::size_t l, const Matrix& u, const Matrix& u2) const {
  return rbf_gram(u, u2, outputs_.at(l).params);
}

Matrix Surrogate::predict_mean(const Matrix& u) const {
  if (u.cols() != inputs_.cols()) throw DomainError("prediction input width mismatch");
  Matrix out(u.rows(), outputs_.size());
  for (std::size_t l = 0; l < outputs_.size(); ++l)
    out.col(l) = rbf_gram(u, inputs_, outputs_[l].params) * outputs_[l].dual_weights;
  return out;
}

Matrix Surrogate::predict_variance(const Matrix& u) const {
  if (u.cols() != inputs_.cols()) throw DomainError("prediction input width mismatch");
  Matrix out(u.rows(), outputs_.size());
  for (std::size_t l = 0; l < outputs_.size(); ++l) {
    const auto& gp = outputs_[l];
    Matrix v = rbf_gram(inputs_, u, gp.params);
    gp.factor.triangularView<Eigen::Lower>().solveInPlace(v);
    out.col(l) = (gp.params.signal_variance - v.colwise().squaredNorm().array()).max(0.0).matrix();
  }
  return out;
}

std::vector<Matrix> Surrogate::posterior_kernel(const Matrix& u, const Matrix& u2) const {
  if (u.cols() != inputs_.cols() || u2.cols() != inputs_.cols())
    throw DomainError("kernel input width mismatch");
  std::vector<Matrix> blocks;
  for (const auto& gp : outputs_) {
    const auto tri = gp.factor.triangularView<Eigen::Lower>();
    const Matrix a = tri.solve(rbf_gram(inputs_, u, gp.params));
    const Matrix b = tri.solve(rbf_gram(inputs_, u2, gp.params));
    blocks.push_back(rbf_gram(u, u2, gp.params) - a.transpose() * b);
  }
  return blocks;
}

ValidationResult Surrogate::validate(const DesignMatrix& held_out) const {
  held_out.validate();
  if (held_out.output_dims() != outputs_.size()) throw DomainError("held-out output count mismatch");
  const Matrix mean = predict_mean(held_out.inputs);
  const Matrix var = predict_variance(held_out.inputs);
  const double n = static_cast<double>(held_out.rows());
  ValidationResult r;
  r.rmse = ((mean - held_out.outputs).array().square().colwise().sum() / n).sqrt().transpose();
  r.mean_sd = (var.array().sqrt().colwise().sum() / n).transpose();
  return r;
}

namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string Surrogate::to_json() const {
  nlohmann::json doc;
  doc["format"] = "sobolmat-surrogate";
  doc["version"] = 1;
  doc["input_dims"] = inputs_.cols();
  doc["training_size"] = inputs_.rows();
  auto& rows = doc["training_inputs"] = nlohmann::json::array();
  for (Eigen::Index n = 0; n < inputs_.rows(); ++n) rows.push_back(vector_json(inputs_.row(n).transpose()));
  auto& models = doc["outputs"] = nlohmann::json::array();
  for (const auto& gp : outputs_) {
    nlohmann::json m;
    m["lengthscales"] = vector_json(gp.params.lengthscales);
    m["signal_variance"] = gp.params.signal_variance;
    m["noise_variance"] = gp.params.noise_variance;
    m["jitter"] = gp.jitter;
    m["targets"] = vector_json(gp.targets);
    m["dual_weights"] = vector_json(gp.dual_weights);
    m["log_likelihood"] = gp.diagnostics.log_likelihood;
    m["condition_estimate"] = gp.diagnostics.condition_estimate;
    m["restarts_succeeded"] = gp.diagnostics.restarts_succeeded;
    models.push_back(std::move(m));
  }
  return doc.dump(1);
}

Surrogate Surrogate::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed model JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "sobolmat-surrogate") throw DomainError("not a surrogate model document");
    const auto dims = doc.at("input_dims").get<std::size_t>();
    const auto& rows = doc.at("training_inputs");
    Surrogate s;
    s.inputs_.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dims));
    for (std::size_t n = 0; n < rows.size(); ++n) {
      const Vector r = json_vector(rows[n]);
      if (static_cast<std::size_t>(r.size()) != dims) throw DomainError("training input row width mismatch");
      s.inputs_.row(static_cast<Eigen::Index>(n)) = r.transpose();
    }
    for (const auto& m : doc.at("outputs")) {
      RbfKernelParams p;
      p.lengthscales = json_vector(m.at("lengthscales"));
      p.signal_variance = m.at("signal_variance").get<double>();
      p.noise_variance = m.at("noise_variance").get<double>();
      auto gp = condition_output(s.inputs_, json_vector(m.at("targets")), p, m.at("jitter").get<double>());
      // keep the stored weights so a reload reproduces the saved model exactly
      gp.dual_weights = json_vector(m.at("dual_weights"));
      if (gp.dual_weights.size() != s.inputs_.rows()) throw DomainError("dual weight count mismatch");
      gp.diagnostics.log_likelihood = m.value("log_likelihood", 0.0);
      gp.diagnostics.restarts_succeeded = m.value("restarts_succeeded", 0);
      s.outputs_.push_back(std::move(gp));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace sobolmat
