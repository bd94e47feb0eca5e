#include "cylhjm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cylhjm {

namespace {

constexpr double kSnapTolerance = 1e-9;

void require_same_grid(const MaturityGrid& a, const MaturityGrid& b) {
  if (!(a == b)) {
    std::ostringstream os;
    os << "incompatible maturity grids: (h=" << a.cell_width() << ", n=" << a.n_cells()
       << ") vs (h=" << b.cell_width() << ", n=" << b.n_cells() << ")";
    throw GridMismatch(os.str());
  }
}

}  // namespace

MaturityGrid::MaturityGrid(double cell_width, std::size_t n_cells)
    : cell_width_(cell_width), n_cells_(n_cells) {
  if (!(cell_width > 0.0) || !std::isfinite(cell_width)) {
    throw std::invalid_argument("maturity grid cell_width must be positive and finite");
  }
  if (n_cells == 0) {
    throw std::invalid_argument("maturity grid needs at least one cell");
  }
}

double MaturityGrid::to_coord(double x) const {
  const double u = x / cell_width_;
  const double r = std::round(u);
  return std::abs(u - r) <= kSnapTolerance * std::max(1.0, std::abs(r)) ? r : u;
}

bool MaturityGrid::is_aligned(double x) const {
  const double u = to_coord(x);
  return u == std::round(u);
}

std::size_t MaturityGrid::cells_in(double x) const {
  const double u = to_coord(x);
  if (u < 0.0 || u != std::round(u)) {
    std::ostringstream os;
    os << "value " << x << " is not a nonnegative multiple of the cell width " << cell_width_;
    throw MisalignedShift(os.str());
  }
  return static_cast<std::size_t>(u);
}

MaturityGrid MaturityGrid::refined(std::size_t factor) const {
  if (factor == 0) throw std::invalid_argument("refinement factor must be positive");
  return MaturityGrid(cell_width_ / static_cast<double>(factor), n_cells_ * factor);
}

// ---------------------------------------------------------------------------

SignedMeasure::SignedMeasure(MaturityGrid grid)
    : grid_(grid), density_(grid.n_cells(), 0.0) {}

SignedMeasure SignedMeasure::dirac(const MaturityGrid& grid, double location, double weight) {
  SignedMeasure mu(grid);
  mu.add_atom(location, weight);
  return mu;
}

SignedMeasure SignedMeasure::constant_density(const MaturityGrid& grid, double value,
                                              double from, double to) {
  const std::size_t k0 = grid.cells_in(from);
  const std::size_t k1 = std::min(grid.cells_in(to), grid.n_cells());
  SignedMeasure mu(grid);
  for (std::size_t k = k0; k < k1; ++k) mu.density_[k] = value;
  return mu;
}

std::vector<Atom> SignedMeasure::atoms() const {
  std::vector<Atom> out;
  out.reserve(atom_count());
  for (std::size_t i = 0; i < atom_count(); ++i) out.push_back(atom(i));
  return out;
}

void SignedMeasure::add_atom(double location, double weight) {
  const double coord = grid_.to_coord(location);
  if (!(coord > 0.0) || coord > static_cast<double>(grid_.n_cells())) {
    std::ostringstream os;
    os << "atom location " << location << " outside (0, " << grid_.window() << "]";
    throw std::out_of_range(os.str());
  }
  insert_atom_coord(coord, weight);
}

void SignedMeasure::insert_atom_coord(double coord, double weight) {
  if (weight == 0.0) return;
  auto it = std::lower_bound(atom_coords_.begin(), atom_coords_.end(), coord);
  const auto idx = static_cast<std::size_t>(it - atom_coords_.begin());
  if (it != atom_coords_.end() && *it == coord) {
    atom_weights_[idx] += weight;
    if (atom_weights_[idx] == 0.0) {
      atom_coords_.erase(it);
      atom_weights_.erase(atom_weights_.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    return;
  }
  atom_coords_.insert(it, coord);
  atom_weights_.insert(atom_weights_.begin() + static_cast<std::ptrdiff_t>(idx), weight);
}

bool SignedMeasure::is_zero() const {
  return atom_coords_.empty() &&
         std::all_of(density_.begin(), density_.end(), [](double d) { return d == 0.0; });
}

SignedMeasure& SignedMeasure::axpy(double alpha, const SignedMeasure& other) {
  require_same_grid(grid_, other.grid_);
  if (alpha == 0.0) return *this;
  for (std::size_t k = 0; k < density_.size(); ++k) density_[k] += alpha * other.density_[k];
  if (other.atom_coords_.empty()) return *this;

  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(atom_coords_.size() + other.atom_coords_.size());
  weights.reserve(coords.capacity());
  auto push = [&](double c, double w) {
    if (w != 0.0) {
      coords.push_back(c);
      weights.push_back(w);
    }
  };
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < atom_coords_.size() || j < other.atom_coords_.size()) {
    if (j == other.atom_coords_.size() ||
        (i < atom_coords_.size() && atom_coords_[i] < other.atom_coords_[j])) {
      push(atom_coords_[i], atom_weights_[i]);
      ++i;
    } else if (i == atom_coords_.size() || other.atom_coords_[j] < atom_coords_[i]) {
      push(other.atom_coords_[j], alpha * other.atom_weights_[j]);
      ++j;
    } else {
      push(atom_coords_[i], atom_weights_[i] + alpha * other.atom_weights_[j]);
      ++i;
      ++j;
    }
  }
  atom_coords_ = std::move(coords);
  atom_weights_ = std::move(weights);
  return *this;
}

SignedMeasure& SignedMeasure::scale(double alpha) {
  if (alpha == 0.0) {
    atom_coords_.clear();
    atom_weights_.clear();
    std::fill(density_.begin(), density_.end(), 0.0);
    return *this;
  }
  for (double& w : atom_weights_) w *= alpha;
  for (double& d : density_) d *= alpha;
  return *this;
}

double SignedMeasure::shift_cells_inplace(std::size_t cells) {
  if (cells == 0) return 0.0;
  const std::size_t n = density_.size();
  const std::size_t s = std::min(cells, n);
  const double h = grid_.cell_width();

  double exited = 0.0;
  for (std::size_t k = 0; k < s; ++k) exited += density_[k] * h;
  const double cut = static_cast<double>(cells);
  std::size_t dropped = 0;
  while (dropped < atom_coords_.size() && atom_coords_[dropped] <= cut) {
    exited += atom_weights_[dropped];
    ++dropped;
  }

  std::move(density_.begin() + static_cast<std::ptrdiff_t>(s), density_.end(), density_.begin());
  std::fill(density_.end() - static_cast<std::ptrdiff_t>(s), density_.end(), 0.0);

  atom_coords_.erase(atom_coords_.begin(), atom_coords_.begin() + static_cast<std::ptrdiff_t>(dropped));
  atom_weights_.erase(atom_weights_.begin(),
                      atom_weights_.begin() + static_cast<std::ptrdiff_t>(dropped));
  for (double& c : atom_coords_) c -= cut;
  return exited;
}

// ---------------------------------------------------------------------------

double eval_interval(const SignedMeasure& mu, double a, double b) {
  if (a < 0.0 || b < a) {
    std::ostringstream os;
    os << "eval_interval requires 0 <= a <= b, got (" << a << ", " << b << "]";
    throw std::invalid_argument(os.str());
  }
  const auto& grid = mu.grid();
  const double n = static_cast<double>(grid.n_cells());
  const double ua = std::min(grid.to_coord(a), n);
  const double ub = std::min(grid.to_coord(b), n);
  if (ub <= ua) return 0.0;

  auto coords = mu.atom_coords();
  auto weights = mu.atom_weights();
  auto first = std::upper_bound(coords.begin(), coords.end(), ua);
  auto last = std::upper_bound(first, coords.end(), ub);
  double atom_mass = 0.0;
  for (auto it = first; it != last; ++it) {
    atom_mass += weights[static_cast<std::size_t>(it - coords.begin())];
  }

  auto dens = mu.density();
  double cells = 0.0;
  for (auto k = static_cast<std::size_t>(std::floor(ua)); static_cast<double>(k) < ub; ++k) {
    const double lo = std::max(static_cast<double>(k), ua);
    const double hi = std::min(static_cast<double>(k + 1), ub);
    cells += dens[k] * (hi - lo);
  }
  return atom_mass + cells * grid.cell_width();
}

std::vector<double> cumulative_at_boundaries(const SignedMeasure& mu) {
  const std::size_t n = mu.grid().n_cells();
  const double h = mu.grid().cell_width();
  auto coords = mu.atom_coords();
  auto weights = mu.atom_weights();
  auto dens = mu.density();

  std::vector<double> cum(n + 1, 0.0);
  std::size_t a = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = cum[k - 1] + dens[k - 1] * h;
    const auto right = static_cast<double>(k);
    while (a < coords.size() && coords[a] <= right) acc += weights[a++];
    cum[k] = acc;
  }
  return cum;
}

SignedMeasure linear_combine(double alpha, const SignedMeasure& mu, double beta,
                             const SignedMeasure& nu) {
  require_same_grid(mu.grid(), nu.grid());
  SignedMeasure out(mu.grid());
  out.axpy(alpha, mu);
  out.axpy(beta, nu);
  return out;
}

SignedMeasure shift_adjoint(const SignedMeasure& mu, double t) {
  const std::size_t cells = mu.grid().cells_in(t);
  SignedMeasure out = mu;
  out.shift_cells_inplace(cells);
  return out;
}

double total_variation(const SignedMeasure& mu) {
  double tv = 0.0;
  for (double w : mu.atom_weights()) tv += std::abs(w);
  double cells = 0.0;
  for (double d : mu.density()) cells += std::abs(d);
  return tv + cells * mu.grid().cell_width();
}

double distribution_mid(const SignedMeasure& mu, double y) {
  const double upto = eval_interval(mu, 0.0, y);
  const double coord = mu.grid().to_coord(y);
  auto coords = mu.atom_coords();
  auto it = std::lower_bound(coords.begin(), coords.end(), coord);
  if (it != coords.end() && *it == coord) {
    return upto - 0.5 * mu.atom_weights()[static_cast<std::size_t>(it - coords.begin())];
  }
  return upto;
}

SignedMeasure mul_distribution(const SignedMeasure& mu) {
  const auto& grid = mu.grid();
  const double h = grid.cell_width();
  auto coords = mu.atom_coords();
  auto weights = mu.atom_weights();
  auto dens = mu.density();

  SignedMeasure nu(grid);
  auto out_density = nu.density();
  double running = 0.0;  // mu(0, current position]
  std::size_t a = 0;
  for (std::size_t k = 0; k < grid.n_cells(); ++k) {
    const double d = dens[k];
    double pos = static_cast<double>(k);
    const double right = static_cast<double>(k + 1);
    double cell_mass = 0.0;
    // On a stretch of length L (cell units) with density d, the distribution
    // function grows linearly by m = d L h and contributes D m + m^2 / 2.
    while (a < coords.size() && coords[a] <= right) {
      const double m = d * (coords[a] - pos) * h;
      cell_mass += running * m + 0.5 * m * m;
      running += m;
      const double w = weights[a];
      const double product = w * (running + 0.5 * w);
      if (product != 0.0) nu.insert_atom_coord(coords[a], product);
      running += w;
      pos = coords[a];
      ++a;
    }
    const double m = d * (right - pos) * h;
    cell_mass += running * m + 0.5 * m * m;
    running += m;
    out_density[k] = cell_mass / h;
  }
  return nu;
}

// ---------------------------------------------------------------------------

StepFunction StepFunction::constant(const MaturityGrid& grid, double value) {
  StepFunction f;
  f.cell_values.assign(grid.n_cells(), value);
  return f;
}

StepFunction StepFunction::indicator(const MaturityGrid& grid, double a, double b) {
  const std::size_t ka = grid.cells_in(a);
  const std::size_t kb = std::min(grid.cells_in(b), grid.n_cells());
  StepFunction f;
  f.cell_values.assign(grid.n_cells(), 0.0);
  for (std::size_t k = ka; k < kb; ++k) f.cell_values[k] = 1.0;
  return f;
}

double StepFunction::value_at(const MaturityGrid& grid, double coord) const {
  auto it = point_values.lower_bound(coord - kSnapTolerance);
  if (it != point_values.end() && std::abs(it->first - coord) <= kSnapTolerance) {
    return it->second;
  }
  if (rule == PointRule::explicit_only) {
    std::ostringstream os;
    os << "step function has no point value at location " << coord * grid.cell_width();
    throw std::invalid_argument(os.str());
  }
  const auto k = static_cast<std::size_t>(std::max(std::ceil(coord) - 1.0, 0.0));
  return cell_values.at(std::min(k, cell_values.size() - 1));
}

double StepFunction::sup_norm() const {
  double s = 0.0;
  for (double v : cell_values) s = std::max(s, std::abs(v));
  for (const auto& [_, v] : point_values) s = std::max(s, std::abs(v));
  return s;
}

double pair_with_function(const SignedMeasure& mu, const StepFunction& f) {
  const auto& grid = mu.grid();
  if (f.cell_values.size() != grid.n_cells()) {
    throw GridMismatch("step function has " + std::to_string(f.cell_values.size()) +
                       " cells, measure grid has " + std::to_string(grid.n_cells()));
  }
  double cells = 0.0;
  auto dens = mu.density();
  for (std::size_t k = 0; k < dens.size(); ++k) cells += f.cell_values[k] * dens[k];
  double atoms = 0.0;
  auto coords = mu.atom_coords();
  auto weights = mu.atom_weights();
  for (std::size_t i = 0; i < coords.size(); ++i) atoms += f.value_at(grid, coords[i]) * weights[i];
  return atoms + cells * grid.cell_width();
}

SignedMeasure refine(const SignedMeasure& mu, std::size_t factor) {
  SignedMeasure out(mu.grid().refined(factor));
  auto src = mu.density();
  auto dst = out.density();
  for (std::size_t k = 0; k < src.size(); ++k) {
    for (std::size_t r = 0; r < factor; ++r) dst[k * factor + r] = src[k];
  }
  for (std::size_t i = 0; i < mu.atom_count(); ++i) {
    out.add_atom(mu.atom(i).location, mu.atom_weights()[i]);
  }
  return out;
}

}  // namespace cylhjm
