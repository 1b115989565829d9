#include "topo/problem_json.hpp"

namespace topo::fem {

void to_json(nlohmann::json& j, const Problem& p) {
  nlohmann::json loads = nlohmann::json::array();
  for (const Load& l : p.loads) loads.push_back({l.dof, l.magnitude});
  j = nlohmann::json{{"nelx", p.nelx},
                     {"nely", p.nely},
                     {"physics", to_string(p.physics)},
                     {"fixed_dofs", p.fixed_dofs},
                     {"loads", loads},
                     {"vol_frac", p.volume_fraction}};
}

void from_json(const nlohmann::json& j, Problem& p) {
  try {
    p.nelx = j.at("nelx").get<int>();
    p.nely = j.at("nely").get<int>();
    p.physics = physics_from_string(j.at("physics").get<std::string>());
    p.fixed_dofs = j.at("fixed_dofs").get<std::vector<int>>();
    p.loads.clear();
    for (const auto& l : j.at("loads")) {
      if (!l.is_array() || l.size() != 2) fail(ErrorKind::format, "load entry must be [dof, magnitude]");
      p.loads.push_back({l[0].get<int>(), l[1].get<double>()});
    }
    p.volume_fraction = j.at("vol_frac").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("malformed problem JSON: ") + e.what());
  }
}

}  // namespace topo::fem
