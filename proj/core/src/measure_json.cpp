#include "cylhjm/measure_json.hpp"

#include <stdexcept>

namespace cylhjm {

nlohmann::json to_json(const SignedMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : mu.atoms()) atoms.push_back({a.location, a.weight});
  auto dens = mu.density();
  return {
      {"cell_width", mu.grid().cell_width()},
      {"n_cells", mu.grid().n_cells()},
      {"atoms", std::move(atoms)},
      {"density", std::vector<double>(dens.begin(), dens.end())},
  };
}

SignedMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("measure must be a JSON object");
  const MaturityGrid grid(j.at("cell_width").get<double>(), j.at("n_cells").get<std::size_t>());
  SignedMeasure mu(grid);
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms")) {
      if (!a.is_array() || a.size() != 2) {
        throw std::invalid_argument("each atom must be a [location, weight] pair");
      }
      mu.add_atom(a[0].get<double>(), a[1].get<double>());
    }
  }
  if (j.contains("density")) {
    const auto& d = j.at("density");
    if (!d.is_array() || d.size() != grid.n_cells()) {
      throw std::invalid_argument("density must list exactly n_cells values");
    }
    for (std::size_t k = 0; k < grid.n_cells(); ++k) mu.set_density(k, d[k].get<double>());
  }
  return mu;
}

}  // namespace cylhjm
