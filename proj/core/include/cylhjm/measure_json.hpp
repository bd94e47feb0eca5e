#pragma once

#include <json.hpp>

#include "cylhjm/measures.hpp"

namespace cylhjm {

/// {cell_width, n_cells, atoms: [[location, weight], ...], density: [...]}
nlohmann::json to_json(const SignedMeasure& mu);

/// Inverse of to_json. `density` may be omitted (all zero); if present it must
/// have n_cells entries.
SignedMeasure measure_from_json(const nlohmann::json& j);

}  // namespace cylhjm
