#pragma once

// Elementary integrals of finitely additive vector measures on a finite set,
// their semivariation, and the cylindrification of a bounded integral.
//
// All spaces are finite-dimensional and carry Euclidean norms. The algebra on
// the underlying set is generated by a partition into `n_cells` cells, so a
// vector measure is determined by its value on each cell and an elementary
// function by its value on each cell.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cylhjm {

struct FiniteSpace {
  std::size_t n_cells;

  explicit FiniteSpace(std::size_t n);
  friend bool operator==(const FiniteSpace&, const FiniteSpace&) = default;
};

/// Continuous bilinear map F x G -> H given by p(f, g)_h = sum_{a,b} c[h](a, b) f_a g_b.
class BilinearPairing {
 public:
  BilinearPairing(std::size_t dim_f, std::size_t dim_g, std::size_t dim_h);

  /// Scalar multiplication R x R -> R.
  static BilinearPairing multiplication();
  /// Scalar action R x R^n -> R^n.
  static BilinearPairing scalar_action(std::size_t n);
  /// Matrix application L(R^m, R^n) x R^m -> R^n with the matrix stored
  /// row-major as an element of R^{n*m}.
  static BilinearPairing matrix_action(std::size_t rows, std::size_t cols);

  std::size_t dim_f() const { return dim_f_; }
  std::size_t dim_g() const { return dim_g_; }
  std::size_t dim_h() const { return dim_h_; }

  double& coefficient(std::size_t a, std::size_t b, std::size_t h) { return coeffs_[h](a, b); }
  double coefficient(std::size_t a, std::size_t b, std::size_t h) const { return coeffs_[h](a, b); }

  Eigen::VectorXd apply(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
  /// The linear map f -> p(f, g) as a dim_h x dim_f matrix.
  Eigen::MatrixXd left_operator(const Eigen::VectorXd& g) const;

 private:
  std::size_t dim_f_;
  std::size_t dim_g_;
  std::size_t dim_h_;
  std::vector<Eigen::MatrixXd> coeffs_;
};

struct FiniteVectorMeasure {
  FiniteSpace space;
  std::vector<Eigen::VectorXd> values;

  /// Value on the union of the cells flagged in `member`.
  Eigen::VectorXd measure_of(const std::vector<bool>& member) const;
  /// The measure A -> mu(A intersect S) for the cell set S flagged in `member`.
  FiniteVectorMeasure restricted(const std::vector<bool>& member) const;
};

struct ElementaryFunction {
  FiniteSpace space;
  std::vector<Eigen::VectorXd> values;

  double sup_norm() const;
};

/// sum over cells of p(f_k, mu_k).
Eigen::VectorXd elementary_integral(const ElementaryFunction& f, const FiniteVectorMeasure& mu,
                                    const BilinearPairing& p);

enum class SemivariationMode { exact_scalar, sampled };

struct SemivariationOptions {
  std::size_t samples = 64;
  std::uint64_t seed = 1;
  std::size_t ascent_sweeps = 50;
};

struct Semivariation {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
  /// Integrand attaining `lower`.
  ElementaryFunction witness;
};

constexpr std::size_t kMaxExactSemivariationCells = 24;

Semivariation semivariation(const FiniteVectorMeasure& mu, const BilinearPairing& p,
                            SemivariationMode mode, const SemivariationOptions& options = {});

/// Operator norm of a matrix under Euclidean norms.
double operator_norm(const Eigen::MatrixXd& m);

/// The integral T : I -> H lifted to L(E, I) -> L(E, H), f -> T o f.
class CylindricalIntegral {
 public:
  CylindricalIntegral(Eigen::MatrixXd op, std::size_t dim_e);

  std::size_t dim_e() const { return dim_e_; }
  std::size_t dim_i() const { return static_cast<std::size_t>(op_.cols()); }
  std::size_t dim_h() const { return static_cast<std::size_t>(op_.rows()); }

  /// (T o f)(e) for f stored as a dim_i x dim_e matrix.
  Eigen::VectorXd apply(const Eigen::MatrixXd& f, const Eigen::VectorXd& e) const;
  Eigen::MatrixXd lift(const Eigen::MatrixXd& f) const;

  /// ||T||, exact from the singular values.
  double upper() const { return upper_; }
  /// ||T o w|| for the rank-one witness w = u e_1^T, u the top right singular vector.
  double lower() const { return lower_; }
  const Eigen::MatrixXd& witness() const { return witness_; }

 private:
  Eigen::MatrixXd op_;
  std::size_t dim_e_;
  double upper_;
  double lower_;
  Eigen::MatrixXd witness_;
};

CylindricalIntegral cylindrify(const Eigen::MatrixXd& op, std::size_t dim_e);

/// Left-endpoint quadrature sum_j values_j * dt. An empty input gives the zero
/// vector of dimension `dim`.
Eigen::VectorXd bochner_quadrature(std::span<const Eigen::VectorXd> values, double dt,
                                   std::size_t dim = 0);
double bochner_quadrature(std::span<const double> values, double dt);

}  // namespace cylhjm
