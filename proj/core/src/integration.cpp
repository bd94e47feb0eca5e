#include "cylhjm/integration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cylhjm {

namespace {

void require_space(const FiniteSpace& expected, std::size_t n_values, const char* what) {
  if (n_values != expected.n_cells) {
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(n_values) +
                                " cell values, space has " + std::to_string(expected.n_cells));
  }
}

void require_dim(Eigen::Index got, std::size_t want, const char* what) {
  if (static_cast<std::size_t>(got) != want) {
    throw std::invalid_argument(std::string("dimension mismatch for ") + what + ": got " +
                                std::to_string(got) + ", expected " + std::to_string(want));
  }
}

Eigen::VectorXd random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

FiniteSpace::FiniteSpace(std::size_t n) : n_cells(n) {
  if (n == 0) throw std::invalid_argument("finite space needs at least one cell");
}

// ---------------------------------------------------------------------------

BilinearPairing::BilinearPairing(std::size_t dim_f, std::size_t dim_g, std::size_t dim_h)
    : dim_f_(dim_f), dim_g_(dim_g), dim_h_(dim_h) {
  if (dim_f == 0 || dim_g == 0 || dim_h == 0) {
    throw std::invalid_argument("pairing dimensions must be positive");
  }
  coeffs_.assign(dim_h, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_f),
                                              static_cast<Eigen::Index>(dim_g)));
}

BilinearPairing BilinearPairing::multiplication() {
  BilinearPairing p(1, 1, 1);
  p.coefficient(0, 0, 0) = 1.0;
  return p;
}

BilinearPairing BilinearPairing::scalar_action(std::size_t n) {
  BilinearPairing p(1, n, n);
  for (std::size_t h = 0; h < n; ++h) p.coefficient(0, h, h) = 1.0;
  return p;
}

BilinearPairing BilinearPairing::matrix_action(std::size_t rows, std::size_t cols) {
  // f in R^{rows*cols} (row-major matrix), g in R^cols, h in R^rows.
  BilinearPairing p(rows * cols, cols, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) p.coefficient(r * cols + c, c, r) = 1.0;
  }
  return p;
}

Eigen::VectorXd BilinearPairing::apply(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  require_dim(f.size(), dim_f_, "pairing left argument");
  require_dim(g.size(), dim_g_, "pairing right argument");
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim_h_));
  for (std::size_t h = 0; h < dim_h_; ++h) {
    out[static_cast<Eigen::Index>(h)] = f.dot(coeffs_[h] * g);
  }
  return out;
}

Eigen::MatrixXd BilinearPairing::left_operator(const Eigen::VectorXd& g) const {
  require_dim(g.size(), dim_g_, "pairing right argument");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim_h_), static_cast<Eigen::Index>(dim_f_));
  for (std::size_t h = 0; h < dim_h_; ++h) {
    m.row(static_cast<Eigen::Index>(h)) = (coeffs_[h] * g).transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd FiniteVectorMeasure::measure_of(const std::vector<bool>& member) const {
  require_space(space, member.size(), "cell mask");
  require_space(space, values.size(), "vector measure");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(values.front().size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (member[k]) out += values[k];
  }
  return out;
}

FiniteVectorMeasure FiniteVectorMeasure::restricted(const std::vector<bool>& member) const {
  require_space(space, member.size(), "cell mask");
  FiniteVectorMeasure out = *this;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!member[k]) out.values[k].setZero();
  }
  return out;
}

double ElementaryFunction::sup_norm() const {
  double s = 0.0;
  for (const auto& v : values) s = std::max(s, v.norm());
  return s;
}

Eigen::VectorXd elementary_integral(const ElementaryFunction& f, const FiniteVectorMeasure& mu,
                                    const BilinearPairing& p) {
  if (!(f.space == mu.space)) {
    throw std::invalid_argument("integrand and measure live on different finite spaces");
  }
  require_space(f.space, f.values.size(), "integrand");
  require_space(mu.space, mu.values.size(), "vector measure");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dim_h()));
  for (std::size_t k = 0; k < f.values.size(); ++k) out += p.apply(f.values[k], mu.values[k]);
  return out;
}

// ---------------------------------------------------------------------------

double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

namespace {

Semivariation exact_scalar_semivariation(const FiniteVectorMeasure& mu, const BilinearPairing& p) {
  if (p.dim_f() != 1) {
    throw std::invalid_argument("exact semivariation requires scalar integrands (dim_F = 1)");
  }
  const std::size_t n = mu.space.n_cells;
  if (n > kMaxExactSemivariationCells) {
    throw std::invalid_argument("exact semivariation enumerates 2^n sign patterns; n_cells = " +
                                std::to_string(n) + " exceeds the limit of " +
                                std::to_string(kMaxExactSemivariationCells));
  }
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  std::vector<Eigen::VectorXd> v;
  v.reserve(n);
  for (const auto& g : mu.values) v.push_back(p.apply(one, g));

  // Gray-code walk over sign patterns with the first sign fixed to +1; the
  // objective is even in the signs.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dim_h()));
  for (const auto& vk : v) sum += vk;
  std::vector<int> signs(n, 1);
  std::uint64_t best_code = 0;
  double best = sum.norm();
  const std::uint64_t patterns = std::uint64_t{1} << (n - 1);
  for (std::uint64_t i = 1; i < patterns; ++i) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(i)) + 1;
    signs[bit] = -signs[bit];
    sum += 2.0 * signs[bit] * v[bit];
    const double value = sum.norm();
    if (value > best) {
      best = value;
      best_code = i ^ (i >> 1);
    }
  }

  Semivariation out{best, best, true, ElementaryFunction{mu.space, {}}};
  for (std::size_t k = 0; k < n; ++k) {
    const bool flipped = k > 0 && ((best_code >> (k - 1)) & 1U);
    out.witness.values.push_back(Eigen::VectorXd::Constant(1, flipped ? -1.0 : 1.0));
  }
  return out;
}

Semivariation sampled_semivariation(const FiniteVectorMeasure& mu, const BilinearPairing& p,
                                    const SemivariationOptions& options) {
  const std::size_t n = mu.space.n_cells;
  std::vector<Eigen::MatrixXd> ops;
  ops.reserve(n);
  double upper = 0.0;
  for (const auto& g : mu.values) {
    ops.push_back(p.left_operator(g));
    upper += operator_norm(ops.back());
  }

  std::mt19937_64 rng(options.seed);
  Semivariation out{0.0, upper, false, ElementaryFunction{mu.space, {}}};
  for (std::size_t s = 0; s < std::max<std::size_t>(options.samples, 1); ++s) {
    std::vector<Eigen::VectorXd> f;
    f.reserve(n);
    for (std::size_t k = 0; k < n; ++k) f.push_back(random_unit(p.dim_f(), rng));
    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dim_h()));
    for (std::size_t k = 0; k < n; ++k) total += ops[k] * f[k];

    // Block ascent: the objective is convex in each f_k, so moving f_k to the
    // unit vector aligned with the gradient never decreases it.
    double value = total.norm();
    for (std::size_t sweep = 0; sweep < options.ascent_sweeps; ++sweep) {
      const double before = value;
      for (std::size_t k = 0; k < n; ++k) {
        if (value == 0.0) break;
        Eigen::VectorXd grad = ops[k].transpose() * total;
        const double gn = grad.norm();
        if (gn == 0.0) continue;
        Eigen::VectorXd candidate = grad / gn;
        Eigen::VectorXd next = total + ops[k] * (candidate - f[k]);
        if (next.norm() >= value) {
          total = next;
          f[k] = candidate;
          value = total.norm();
        }
      }
      if (value <= before * (1.0 + 1e-14)) break;
    }
    if (value > out.lower) {
      out.lower = value;
      out.witness.values = f;
    }
  }
  return out;
}

}  // namespace

Semivariation semivariation(const FiniteVectorMeasure& mu, const BilinearPairing& p,
                            SemivariationMode mode, const SemivariationOptions& options) {
  require_space(mu.space, mu.values.size(), "vector measure");
  for (const auto& g : mu.values) require_dim(g.size(), p.dim_g(), "vector measure value");
  return mode == SemivariationMode::exact_scalar ? exact_scalar_semivariation(mu, p)
                                                 : sampled_semivariation(mu, p, options);
}

// ---------------------------------------------------------------------------

CylindricalIntegral::CylindricalIntegral(Eigen::MatrixXd op, std::size_t dim_e)
    : op_(std::move(op)), dim_e_(dim_e) {
  if (dim_e == 0) throw std::invalid_argument("dim_E must be at least 1");
  if (op_.size() == 0) throw std::invalid_argument("integral operator must be non-empty");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op_, Eigen::ComputeFullV);
  upper_ = svd.singularValues()(0);
  witness_ = Eigen::MatrixXd::Zero(op_.cols(), static_cast<Eigen::Index>(dim_e_));
  witness_.col(0) = svd.matrixV().col(0);
  lower_ = operator_norm(lift(witness_));
}

Eigen::VectorXd CylindricalIntegral::apply(const Eigen::MatrixXd& f, const Eigen::VectorXd& e) const {
  require_dim(f.rows(), dim_i(), "integrand rows");
  require_dim(f.cols(), dim_e_, "integrand columns");
  require_dim(e.size(), dim_e_, "test vector");
  return op_ * (f * e);
}

Eigen::MatrixXd CylindricalIntegral::lift(const Eigen::MatrixXd& f) const {
  require_dim(f.rows(), dim_i(), "integrand rows");
  require_dim(f.cols(), dim_e_, "integrand columns");
  return op_ * f;
}

CylindricalIntegral cylindrify(const Eigen::MatrixXd& op, std::size_t dim_e) {
  return CylindricalIntegral(op, dim_e);
}

Eigen::VectorXd bochner_quadrature(std::span<const Eigen::VectorXd> values, double dt,
                                   std::size_t dim) {
  if (!(dt > 0.0)) throw std::invalid_argument("quadrature step must be positive");
  if (values.empty()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(values.front().size());
  for (const auto& v : values) sum += v;
  return sum * dt;
}

double bochner_quadrature(std::span<const double> values, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("quadrature step must be positive");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * dt;
}

}  // namespace cylhjm
