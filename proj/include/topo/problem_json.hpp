#pragma once

// JSON form of a Problem:
//   {"nelx": 40, "nely": 40, "physics": "mechanical",
//    "fixed_dofs": [0, 2], "loads": [[81, -1.0]], "vol_frac": 0.5}

#include "json.hpp"
#include "topo/fem.hpp"

namespace topo::fem {

void to_json(nlohmann::json& j, const Problem& p);
void from_json(const nlohmann::json& j, Problem& p);

}  // namespace topo::fem
