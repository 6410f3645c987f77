#include "sobolmat/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

#include "sobolmat/errors.hpp"
#include "sobolmat/parallel.hpp"

namespace sobolmat {

namespace {

constexpr double kSqrtHalfPi = 1.2533141373155002512078826424055;  // sqrt(pi/2)
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kMaxIntegrationError = 1e-6;

double gauss(double u, double x, double l) {
  const double d = (u - x) / l;
  return std::exp(-0.5 * d * d);
}

// integral over [0,1] of gauss(u, x, l) du
double gauss_integral(double x, double l) {
  const double k = kInvSqrt2 / l;
  return l * kSqrtHalfPi * (std::erf((1.0 - x) * k) + std::erf(x * k));
}

// integral over [0,1] of gauss(u, x, a) gauss(u, y, b) du
double gauss_pair_integral(double x, double a, double y, double b) {
  const double a2 = a * a, b2 = b * b, t = a2 + b2;
  const double s = a * b / std::sqrt(t);
  const double c = (x * b2 + y * a2) / t;
  const double k = kInvSqrt2 / s;
  const double d = x - y;
  return std::exp(-0.5 * d * d / t) * s * kSqrtHalfPi * (std::erf((1.0 - c) * k) + std::erf(c * k));
}

// double integral over the unit square of gauss(u, v, l)
double gauss_double_integral(double l) {
  return 2.0 * (l * kSqrtHalfPi * std::erf(kInvSqrt2 / l) - l * l * -std::expm1(-0.5 / (l * l)));
}

Vector node_vector(const QuadratureRule& r, bool weights) {
  const auto& v = weights ? r.weights : r.nodes;
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

MomentEngine::MomentEngine(const Surrogate& s, MomentOptions options)
    : s_(&s),
      options_(options),
      dims_(s.input_dims()),
      outputs_(s.output_dims()),
      n_(s.training_size()) {
  if (options_.quadrature_order < 1) throw DomainError("quadrature order must be positive");
  if (!std::isfinite(options_.kernel_offset)) throw DomainError("kernel offset must be finite");
  for (std::size_t i = 0; i < dims_; ++i) {
    double lmin = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < outputs_; ++p) lmin = std::min(lmin, lengthscale(p, i));
    int panels = options_.panels;
    if (panels <= 0) panels = static_cast<int>(std::clamp(std::ceil(0.25 / lmin), 1.0, 128.0));
    rules_.push_back(composite_gauss_legendre(options_.quadrature_order, panels));
  }

  const Matrix& x = s.training_inputs();
  cache_.resize(outputs_);
  mu0_.resize(outputs_);
  for (std::size_t p = 0; p < outputs_; ++p) {
    auto& c = cache_[p];
    const auto& gp = s.output(p);
    c.s2 = gp.params.signal_variance;
    c.beta = c.s2 * gp.dual_weights;
    c.G.resize(n_, dims_);
    c.c.resize(dims_);
    for (std::size_t i = 0; i < dims_; ++i) {
      const double l = lengthscale(p, i);
      const Vector quad = node_kernel(p, i).transpose() * node_vector(rules_[i], true);
      Vector closed(n_);
      for (std::size_t n = 0; n < n_; ++n) closed[n] = gauss_integral(x(n, i), l);
      const double err = (quad - closed).cwiseAbs().maxCoeff() / closed.cwiseAbs().maxCoeff();
      integration_error_ = std::max(integration_error_, err);
      if (options_.method == IntegrationMethod::closed_form) {
        c.G.col(i) = closed;
        c.c[i] = gauss_double_integral(l);
      } else {
        c.G.col(i) = quad;
        const Vector w = node_vector(rules_[i], true);
        c.c[i] = w.dot(node_mean_kernel(p, i));
      }
    }
    mu0_[p] = c.beta.dot(c.G.rowwise().prod());
  }
  if (integration_error_ > kMaxIntegrationError)
    throw IntegrationFailure("quadrature cannot resolve the fitted lengthscales (relative error " +
                             std::to_string(integration_error_) + ")");

  // single-double integrals E^{pq}_i, reused by every T contraction
  single_double_.assign(outputs_ * outputs_, Matrix(n_, dims_));
  for (std::size_t i = 0; i < dims_; ++i) {
    const Vector w = node_vector(rules_[i], true);
    std::vector<Vector> weighted(outputs_);
    for (std::size_t q = 0; q < outputs_; ++q) weighted[q] = w.cwiseProduct(node_mean_kernel(q, i));
    for (std::size_t p = 0; p < outputs_; ++p) {
      const Matrix a = node_kernel(p, i);
      for (std::size_t q = 0; q < outputs_; ++q)
        single_double_[p * outputs_ + q].col(i) = a.transpose() * weighted[q];
    }
  }
}

double MomentEngine::lengthscale(std::size_t p, std::size_t axis) const {
  return s_->output(p).params.lengthscales[static_cast<Eigen::Index>(axis)];
}

Matrix MomentEngine::node_kernel(std::size_t p, std::size_t axis) const {
  const auto& r = rules_[axis];
  const auto& x = s_->training_inputs();
  const double l = lengthscale(p, axis);
  Matrix a(r.size(), n_);
  for (std::size_t n = 0; n < n_; ++n)
    for (std::size_t t = 0; t < r.size(); ++t) a(t, n) = gauss(r.nodes[t], x(n, axis), l);
  return a;
}

Vector MomentEngine::node_mean_kernel(std::size_t q, std::size_t axis) const {
  const auto& r = rules_[axis];
  const double l = lengthscale(q, axis);
  Vector g(r.size());
  if (options_.method == IntegrationMethod::closed_form) {
    for (std::size_t t = 0; t < r.size(); ++t) g[t] = gauss_integral(r.nodes[t], l);
  } else {
    for (std::size_t t = 0; t < r.size(); ++t) {
      double sum = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) sum += r.weights[k] * gauss(r.nodes[t], r.nodes[k], l);
      g[t] = sum;
    }
  }
  return g;
}

Vector MomentEngine::axis_mean_kernel(std::size_t p, std::size_t axis) const {
  return cache_.at(p).G.col(axis);
}

double MomentEngine::axis_double(std::size_t q, std::size_t axis) const {
  return cache_.at(q).c[axis];
}

Vector MomentEngine::axis_single_double(std::size_t p, std::size_t q, std::size_t axis) const {
  return single_double_.at(p * outputs_ + q).col(axis);
}

Matrix MomentEngine::axis_pair_kernel(std::size_t p, std::size_t q, std::size_t axis) const {
  if (options_.method == IntegrationMethod::quadrature) {
    const Vector w = node_vector(rules_[axis], true);
    const Matrix ap = node_kernel(p, axis);
    const Matrix aq = p == q ? ap : node_kernel(q, axis);
    return ap.transpose() * w.asDiagonal() * aq;
  }
  const auto& x = s_->training_inputs();
  const double a = lengthscale(p, axis), b = lengthscale(q, axis);
  Matrix out(n_, n_);
  for (std::size_t j = 0; j < n_; ++j)
    for (std::size_t n = 0; n < n_; ++n) {
      if (p == q && n < j) {
        out(n, j) = out(j, n);
        continue;
      }
      out(n, j) = gauss_pair_integral(x(n, axis), a, x(j, axis), b);
    }
  return out;
}

Matrix MomentEngine::axis_triple(std::size_t p, std::size_t q, std::size_t r,
                                 std::size_t axis) const {
  const auto& rule = rules_[axis];
  const Vector w = node_vector(rule, true);
  const auto& x = s_->training_inputs();
  // inner[t, n'] = integral of g^q(t, v) g^r(v, x_n') dv
  Matrix inner(rule.size(), n_);
  if (options_.method == IntegrationMethod::closed_form) {
    const double b = lengthscale(q, axis), c = lengthscale(r, axis);
    for (std::size_t n = 0; n < n_; ++n)
      for (std::size_t t = 0; t < rule.size(); ++t)
        inner(t, n) = gauss_pair_integral(rule.nodes[t], b, x(n, axis), c);
  } else {
    const double b = lengthscale(q, axis);
    Matrix kq(rule.size(), rule.size());
    for (std::size_t j = 0; j < rule.size(); ++j)
      for (std::size_t t = 0; t < rule.size(); ++t) kq(t, j) = gauss(rule.nodes[t], rule.nodes[j], b);
    inner = kq * w.asDiagonal() * node_kernel(r, axis);
  }
  return node_kernel(p, axis).transpose() * w.asDiagonal() * inner;
}

Vector MomentEngine::weights_for(std::size_t p, const AxisSet& m) const {
  const auto& c = cache_[p];
  Vector a = c.beta;
  for (std::size_t i = 0; i < dims_; ++i)
    if (!m.contains(i)) a = a.cwiseProduct(c.G.col(i));
  return a;
}

Vector MomentEngine::complement_g(std::size_t q, const AxisSet& m) const {
  Vector g = Vector::Ones(n_);
  for (std::size_t i = 0; i < dims_; ++i)
    if (!m.contains(i)) g = g.cwiseProduct(cache_[q].G.col(i));
  return g;
}

double MomentEngine::residual(std::size_t p, const AxisSet& m) const {
  Vector a = weights_for(p, m);
  for (std::size_t i : m.axes()) a = a.cwiseProduct(cache_[p].G.col(i));
  return a.sum() - mu0_[p];
}

Matrix MomentEngine::pair_product(std::size_t p, std::size_t q, const AxisSet& m) const {
  Matrix h = Matrix::Ones(n_, n_);
  for (std::size_t i : m.axes()) h.array() *= axis_pair_kernel(p, q, i).array();
  return h;
}

Matrix MomentEngine::triple_product(std::size_t p, std::size_t q, std::size_t r,
                                    const AxisSet& m) const {
  Matrix h = Matrix::Ones(n_, n_);
  for (std::size_t i : m.axes()) h.array() *= axis_triple(p, q, r, i).array();
  return h;
}

Matrix MomentEngine::marginal_mean(const AxisSet& m, const Matrix& u_m) const {
  if (m.ambient() != dims_) throw DomainError("subset ambient dimension mismatch");
  if (u_m.cols() != static_cast<Eigen::Index>(m.size()))
    throw DomainError("marginal_mean expects one column per retained axis");
  if ((u_m.array() < 0.0).any() || (u_m.array() > 1.0).any())
    throw DomainError("marginal_mean inputs outside the unit cube");
  if (m.is_full()) {
    // columns of u_m follow the sorted axes, which for the full set is the identity
    return s_->predict_mean(u_m);
  }
  const auto& x = s_->training_inputs();
  const auto p_count = u_m.rows();
  Matrix out(p_count, outputs_);
  for (std::size_t p = 0; p < outputs_; ++p) {
    Matrix k = Matrix::Ones(p_count, n_);
    std::size_t col = 0;
    for (std::size_t i : m.axes()) {
      const double l = lengthscale(p, i);
      for (std::size_t n = 0; n < n_; ++n)
        for (Eigen::Index j = 0; j < p_count; ++j) k(j, n) *= gauss(u_m(j, col), x(n, i), l);
      ++col;
    }
    out.col(p) = k * weights_for(p, m);
  }
  return out;
}

Matrix MomentEngine::marginal_variance(const AxisSet& m) const {
  if (m.ambient() != dims_) throw DomainError("subset ambient dimension mismatch");
  Matrix v = Matrix::Zero(outputs_, outputs_);
  if (m.empty()) return v;
  std::vector<Vector> a(outputs_);
  for (std::size_t p = 0; p < outputs_; ++p) a[p] = weights_for(p, m);
  for (std::size_t p = 0; p < outputs_; ++p)
    for (std::size_t q = p; q < outputs_; ++q) {
      const Matrix h = pair_product(p, q, m);
      v(p, q) = v(q, p) = a[p].dot(h * a[q]) - mu0_[p] * mu0_[q];
    }
  return v;
}

std::vector<Matrix> MomentEngine::marginal_second_moment(const AxisSet& m, const AxisSet& m2,
                                                         const Matrix& u_m,
                                                         const Matrix& u_m2) const {
  if (m.ambient() != dims_ || m2.ambient() != dims_)
    throw DomainError("subset ambient dimension mismatch");
  if (u_m.cols() != static_cast<Eigen::Index>(m.size()) ||
      u_m2.cols() != static_cast<Eigen::Index>(m2.size()))
    throw DomainError("marginal_second_moment expects one column per retained axis");
  const auto& x = s_->training_inputs();
  if (m.is_full() && m2.is_full()) {
    auto blocks = s_->posterior_kernel(u_m, u_m2);
    for (auto& b : blocks) b.array() += options_.kernel_offset;
    return blocks;
  }
  auto column_of = [](const AxisSet& set, std::size_t axis) {
    const auto& ax = set.axes();
    return static_cast<Eigen::Index>(std::find(ax.begin(), ax.end(), axis) - ax.begin());
  };
  const auto rows = u_m.rows(), cols = u_m2.rows();
  std::vector<Matrix> blocks;
  for (std::size_t q = 0; q < outputs_; ++q) {
    const auto& c = cache_[q];
    Matrix prior = Matrix::Constant(rows, cols, c.s2);
    Matrix k1 = Matrix::Constant(n_, rows, c.s2), k2 = Matrix::Constant(n_, cols, c.s2);
    for (std::size_t i = 0; i < dims_; ++i) {
      const double l = lengthscale(q, i);
      const bool in1 = m.contains(i), in2 = m2.contains(i);
      const auto c1 = in1 ? column_of(m, i) : 0, c2 = in2 ? column_of(m2, i) : 0;
      if (in1 && in2) {
        for (Eigen::Index b = 0; b < cols; ++b)
          for (Eigen::Index a = 0; a < rows; ++a) prior(a, b) *= gauss(u_m(a, c1), u_m2(b, c2), l);
      } else if (in1) {
        for (Eigen::Index a = 0; a < rows; ++a) prior.row(a) *= gauss_integral(u_m(a, c1), l);
      } else if (in2) {
        for (Eigen::Index b = 0; b < cols; ++b) prior.col(b) *= gauss_integral(u_m2(b, c2), l);
      } else {
        prior *= c.c[i];
      }
      for (std::size_t n = 0; n < n_; ++n) {
        for (Eigen::Index a = 0; a < rows; ++a)
          k1(n, a) *= in1 ? gauss(u_m(a, c1), x(n, i), l) : c.G(n, i);
        for (Eigen::Index b = 0; b < cols; ++b)
          k2(n, b) *= in2 ? gauss(u_m2(b, c2), x(n, i), l) : c.G(n, i);
      }
    }
    const auto tri = s_->output(q).factor.triangularView<Eigen::Lower>();
    tri.solveInPlace(k1);
    tri.solveInPlace(k2);
    Matrix block = prior - k1.transpose() * k2;
    block.array() += options_.kernel_offset;
    blocks.push_back(std::move(block));
  }
  return blocks;
}

Vector MomentEngine::data_vector(const AxisSet& m, std::size_t p, std::size_t q,
                                 const Matrix& pair) const {
  if (m.empty()) return Vector::Zero(n_);
  const Vector a = weights_for(p, m);
  const Vector lifted = (pair.transpose() * a).cwiseProduct(complement_g(q, m));
  Vector h = cache_[q].s2 * (lifted - mu0_[p] * complement_g(q, AxisSet::empty(dims_)));
  s_->output(q).factor.triangularView<Eigen::Lower>().solveInPlace(h);
  return h;
}

double MomentEngine::prior_term(const AxisSet& m, const AxisSet& m2, std::size_t p, std::size_t q,
                                std::size_t r, const Matrix* triple) const {
  const auto& cq = cache_[q];
  const Matrix& epq = single_double_[p * outputs_ + q];
  const Matrix& erq = single_double_[r * outputs_ + q];
  Vector left = weights_for(p, m), right = weights_for(r, m2);
  Vector left_all = left, right_all = right;
  double scal = 1.0, scal_m = 1.0, scal_m2 = 1.0, scal_all = 1.0;
  bool shared = false;
  for (std::size_t i = 0; i < dims_; ++i) {
    const bool in1 = m.contains(i), in2 = m2.contains(i);
    if (in1) left_all = left_all.cwiseProduct(epq.col(i));
    else scal_m *= cq.c[i];
    if (in2) right_all = right_all.cwiseProduct(erq.col(i));
    else scal_m2 *= cq.c[i];
    scal_all *= cq.c[i];
    if (in1 && in2) shared = true;
    else if (in1) left = left.cwiseProduct(epq.col(i));
    else if (in2) right = right.cwiseProduct(erq.col(i));
    else scal *= cq.c[i];
  }
  double s1;
  if (!shared) {
    s1 = left.sum() * right.sum() * scal;
  } else {
    const AxisSet inter = m.intersect(m2);
    if (triple) s1 = left.dot(*triple * right) * scal;
    else s1 = left.dot(triple_product(p, q, r, inter) * right) * scal;
  }
  const double s2 = right_all.sum() * scal_m2;
  const double s3 = left_all.sum() * scal_m;
  return cq.s2 * (s1 - mu0_[p] * s2 - mu0_[r] * s3 + mu0_[p] * mu0_[r] * scal_all);
}

double MomentEngine::cross_term(const AxisSet& m, const AxisSet& m2, std::size_t p,
                                std::size_t q, std::size_t r) const {
  if (m.ambient() != dims_ || m2.ambient() != dims_)
    throw DomainError("subset ambient dimension mismatch");
  if (p >= outputs_ || q >= outputs_ || r >= outputs_) throw DomainError("output index out of range");
  if (m.empty() || m2.empty()) return 0.0;
  const double prior = prior_term(m, m2, p, q, r, nullptr);
  const Vector z1 = data_vector(m, p, q, pair_product(p, q, m));
  const Vector z2 = data_vector(m2, r, q, pair_product(r, q, m2));
  return prior - z1.dot(z2) + options_.kernel_offset * residual(p, m) * residual(r, m2);
}

Tensor4 MomentEngine::covariance_of_variances(const AxisSet& m, const AxisSet& m2) const {
  Tensor4 w(outputs_);
  if (m.empty() || m2.empty()) return w;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> memo;
  auto t = [&](std::size_t p, std::size_t q, std::size_t r) {
    const auto key = std::make_tuple(p, q, r);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    return memo[key] = cross_term(m, m2, p, q, r);
  };
  for (std::size_t a = 0; a < outputs_; ++a)
    for (std::size_t b = 0; b < outputs_; ++b)
      for (std::size_t c = 0; c < outputs_; ++c)
        for (std::size_t d = 0; d < outputs_; ++d) {
          const std::pair<std::size_t, std::size_t> left[] = {{a, b}, {b, a}};
          const std::pair<std::size_t, std::size_t> right[] = {{c, d}, {d, c}};
          double sum = 0.0;
          for (auto [p, q] : left)
            for (auto [r, s] : right)
              if (q == s) sum += t(p, q, r);
          w(a, b, c, d) = sum;
        }
  return w;
}

namespace {

// Hadamard products of per-axis matrices over many subsets, reusing the
// running product over the leading axes 0..k-1 that subsets share.
class ProductCache {
 public:
  ProductCache(std::size_t dims, std::function<Matrix(std::size_t)> factor)
      : factor_(std::move(factor)), factors_(dims), prefix_(dims + 1) {}

  Matrix product(const AxisSet& m) {
    std::size_t k = 0;
    while (k < m.size() && m.axes()[k] == k) ++k;
    if (k == 0) k = 1;  // no shared prefix: start from the first axis alone
    Matrix h = m.axes()[0] == 0 ? prefix(k) : axis(m.axes()[0]);
    for (std::size_t j = k; j < m.size(); ++j) h.array() *= axis(m.axes()[j]).array();
    return h;
  }

 private:
  const Matrix& axis(std::size_t i) {
    if (!factors_[i]) factors_[i] = factor_(i);
    return *factors_[i];
  }
  const Matrix& prefix(std::size_t k) {
    if (!prefix_[k]) {
      if (k == 1) prefix_[1] = axis(0);
      else prefix_[k] = prefix(k - 1).cwiseProduct(axis(k - 1));
    }
    return *prefix_[k];
  }
  std::function<Matrix(std::size_t)> factor_;
  std::vector<std::optional<Matrix>> factors_;
  std::vector<std::optional<Matrix>> prefix_;
};

}  // namespace

MomentBatch MomentEngine::analyze(const std::vector<AxisSet>& subsets) const {
  const AxisSet full = AxisSet::full(dims_);
  std::vector<AxisSet> sets = subsets;
  sets.push_back(full);
  for (const auto& m : sets)
    if (m.ambient() != dims_) throw DomainError("subset ambient dimension mismatch");
  const std::size_t count = sets.size(), L = outputs_;

  std::vector<std::vector<Vector>> a(count, std::vector<Vector>(L));
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t p = 0; p < L; ++p) a[k][p] = weights_for(p, sets[k]);

  // V and whitened data vectors z^{pq}_m, one unordered output pair per work item
  std::vector<Matrix> v(count, Matrix::Zero(L, L));
  std::vector<std::vector<Vector>> z(count, std::vector<Vector>(L * L));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = p; q < L; ++q) pairs.emplace_back(p, q);
  parallel_for(pairs.size(), options_.threads, [&](std::size_t job) {
    const auto [p, q] = pairs[job];
    ProductCache cache(dims_, [&, p = p, q = q](std::size_t i) { return axis_pair_kernel(p, q, i); });
    for (std::size_t k = 0; k < count; ++k) {
      const auto& m = sets[k];
      if (m.empty()) {
        z[k][p * L + q] = z[k][q * L + p] = Vector::Zero(n_);
        continue;
      }
      const Matrix h = cache.product(m);
      v[k](p, q) = v[k](q, p) = a[k][p].dot(h * a[k][q]) - mu0_[p] * mu0_[q];
      z[k][p * L + q] = data_vector(m, p, q, h);
      if (p != q) z[k][q * L + p] = data_vector(m, q, p, h.transpose());
    }
  });

  // prior parts: T_mm(p,q,p) and T_mM(p,q,q), one ordered pair per work item
  std::vector<Matrix> tmm(count, Matrix::Zero(L, L)), tmM(count, Matrix::Zero(L, L));
  parallel_for(L * L, options_.threads, [&](std::size_t job) {
    const std::size_t p = job / L, q = job % L;
    // kind 0 pairs m with itself (r = p), kind 1 pairs m with the full set (r = q)
    for (const std::size_t r : p == q ? std::vector<std::size_t>{p} : std::vector<std::size_t>{p, q}) {
      ProductCache cache(dims_, [&](std::size_t i) { return axis_triple(p, q, r, i); });
      for (std::size_t k = 0; k < count; ++k) {
        const auto& m = sets[k];
        if (m.empty()) continue;
        const Matrix prod = cache.product(m);  // m is the shared axis set in both kinds
        for (int kind = 0; kind < 2; ++kind) {
          if ((kind == 0 ? p : q) != r) continue;
          const AxisSet& m2 = kind == 0 ? m : full;
          const std::size_t k2 = kind == 0 ? k : count - 1;
          const double prior = prior_term(m, m2, p, q, r, &prod);
          const double data = z[k][p * L + q].dot(z[k2][r * L + q]);
          const double offset = options_.kernel_offset * residual(p, m) * residual(r, m2);
          (kind == 0 ? tmm : tmM)[k](p, q) = prior - data + offset;
        }
      }
    }
  });

  MomentBatch batch;
  batch.mean = mu0_;
  batch.full = {full, v[count - 1], tmm[count - 1], tmM[count - 1]};
  batch.integration_error = integration_error_;
  for (std::size_t k = 0; k + 1 < count; ++k)
    batch.subsets.push_back({sets[k], v[k], tmm[k], tmM[k]});
  return batch;
}

}  // namespace sobolmat
