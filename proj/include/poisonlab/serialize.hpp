#pragma once

#include <string>

#include <json.hpp>

#include "poisonlab/types.hpp"

namespace poisonlab {

using Json = nlohmann::json;

/// TabularMdp document:
/// {"n_states", "n_actions", "P": [[[...]]], "R": [[...]], "noise_std": [[...]],
///  "mu0": [...], "terminal": [...], "horizon": H}
Json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const Json& j);

/// Policy documents:
///   {"kind": "deterministic", "actions": [...]}
///   {"kind": "stochastic", "dist": [[...]]}
///   {"kind": "parametric", "dims": n, "weights": [...], "feature_map": "..."}
Json policy_to_json(const Policy& pi);
Policy policy_from_json(const Json& j);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

} // namespace poisonlab
