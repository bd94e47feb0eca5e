#pragma once

// Finite signed measures on the positive half-line.
//
// A SignedMeasure is an atom list plus a piecewise-constant density on a
// uniform maturity grid covering (0, n_cells * cell_width]. Every mass query
// uses half-open intervals (a, b]: an atom sitting at a is excluded, an atom
// sitting at b is included.
//
// Geometry is kept in cell units internally (location / cell_width). Values
// within 1e-9 of an integer are snapped onto the grid, so decimal inputs such
// as 0.3 on a 0.1 grid behave as cell boundaries.

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cylhjm {

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MisalignedShift : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MaturityGrid {
 public:
  MaturityGrid(double cell_width, std::size_t n_cells);

  double cell_width() const { return cell_width_; }
  std::size_t n_cells() const { return n_cells_; }
  double window() const { return cell_width_ * static_cast<double>(n_cells_); }
  double boundary(std::size_t k) const { return cell_width_ * static_cast<double>(k); }

  /// Location in cell units, snapped to the nearest integer when within 1e-9.
  double to_coord(double x) const;
  bool is_aligned(double x) const;
  /// Number of whole cells in x; throws MisalignedShift if x is off-grid.
  std::size_t cells_in(double x) const;

  MaturityGrid refined(std::size_t factor) const;

  friend bool operator==(const MaturityGrid&, const MaturityGrid&) = default;

 private:
  double cell_width_;
  std::size_t n_cells_;
};

struct Atom {
  double location;
  double weight;
};

class SignedMeasure {
 public:
  explicit SignedMeasure(MaturityGrid grid);

  static SignedMeasure zero(const MaturityGrid& grid) { return SignedMeasure(grid); }
  static SignedMeasure dirac(const MaturityGrid& grid, double location, double weight);
  /// Constant density `value` on (from, to]; both ends must be cell-aligned.
  static SignedMeasure constant_density(const MaturityGrid& grid, double value, double from,
                                        double to);
  static SignedMeasure constant_density(const MaturityGrid& grid, double value) {
    return constant_density(grid, value, 0.0, grid.window());
  }

  const MaturityGrid& grid() const { return grid_; }
  std::size_t atom_count() const { return atom_coords_.size(); }
  Atom atom(std::size_t i) const {
    return {atom_coords_[i] * grid_.cell_width(), atom_weights_[i]};
  }
  std::vector<Atom> atoms() const;
  /// Atom locations in cell units, strictly increasing.
  std::span<const double> atom_coords() const { return atom_coords_; }
  std::span<const double> atom_weights() const { return atom_weights_; }
  std::span<const double> density() const { return density_; }
  std::span<double> density() { return density_; }

  /// Adds w at x in (0, window]; merges with an existing atom at the same place.
  void add_atom(double location, double weight);
  void set_density(std::size_t cell, double value) { density_.at(cell) = value; }

  bool is_zero() const;

  /// this += alpha * other, in place. Grids must match.
  SignedMeasure& axpy(double alpha, const SignedMeasure& other);
  SignedMeasure& scale(double alpha);
  /// In-place adjoint shift by a whole number of cells; returns the mass of
  /// (0, cells * h] that left the window through 0.
  double shift_cells_inplace(std::size_t cells);

  friend bool operator==(const SignedMeasure&, const SignedMeasure&) = default;
  friend SignedMeasure mul_distribution(const SignedMeasure& mu);

 private:
  void insert_atom_coord(double coord, double weight);

  MaturityGrid grid_;
  std::vector<double> atom_coords_;
  std::vector<double> atom_weights_;
  std::vector<double> density_;
};

/// mu(a, b]; b beyond the window is truncated to the window end.
double eval_interval(const SignedMeasure& mu, double a, double b);

/// mu(0, k h] for k = 0..n_cells.
std::vector<double> cumulative_at_boundaries(const SignedMeasure& mu);

SignedMeasure linear_combine(double alpha, const SignedMeasure& mu, double beta,
                             const SignedMeasure& nu);

/// (S_t^* mu)(a, b] = mu(a + t, b + t]; t must be a multiple of the cell width.
SignedMeasure shift_adjoint(const SignedMeasure& mu, double t);

double total_variation(const SignedMeasure& mu);

/// (mu(0, y-] + mu(0, y]) / 2.
double distribution_mid(const SignedMeasure& mu, double y);

/// The product mu * (distribution function of mu) under the midpoint
/// convention at atoms. Density cells are integrated exactly against the
/// piecewise-linear distribution function and stored as cell averages, so
/// nu(0, x] = mu(0, x]^2 / 2 holds at every cell boundary and at every atom
/// that is a cell boundary or lies in a cell where mu has zero density.
SignedMeasure mul_distribution(const SignedMeasure& mu);

/// Piecewise-constant function on a maturity grid, with values at individual
/// points where the measure being paired carries atoms.
struct StepFunction {
  enum class PointRule {
    /// A point takes the value of the cell ((k-1)h, kh] containing it.
    cell_value,
    /// Points must be listed in `point_values`; a missing one is an error.
    explicit_only,
  };

  std::vector<double> cell_values;
  /// Keyed by location in cell units (see MaturityGrid::to_coord).
  std::map<double, double> point_values;
  PointRule rule = PointRule::cell_value;

  static StepFunction constant(const MaturityGrid& grid, double value);
  /// Indicator of (a, b]; ends must be cell-aligned.
  static StepFunction indicator(const MaturityGrid& grid, double a, double b);

  void set_point(const MaturityGrid& grid, double location, double value) {
    point_values[grid.to_coord(location)] = value;
  }
  double value_at(const MaturityGrid& grid, double coord) const;
  double sup_norm() const;
};

double pair_with_function(const SignedMeasure& mu, const StepFunction& f);

/// Splits every cell into `factor` equal cells carrying the same density.
SignedMeasure refine(const SignedMeasure& mu, std::size_t factor);

}  // namespace cylhjm
