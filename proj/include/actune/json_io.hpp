#pragma once

#include "json.hpp"

#include "actune/config_space.hpp"

namespace actune {

inline nlohmann::json config_to_json(const Configuration& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, v] : c.values) {
    switch (v.index()) {
      case 0: j[name] = std::get<double>(v); break;
      case 1: j[name] = std::get<int64_t>(v); break;
      default: j[name] = std::get<std::string>(v);
    }
  }
  return j;
}

// Types are recovered against the space so integers and reals stay distinct.
inline Configuration config_from_json(const nlohmann::json& j, const ConfigSpace& space) {
  Configuration c;
  for (auto& [name, v] : j.items()) {
    const Parameter* p = space.find(name);
    if (!p) throw Error("unknown parameter in configuration: " + name);
    switch (p->kind) {
      case ParamKind::Real: c.values[name] = v.get<double>(); break;
      case ParamKind::Integer: c.values[name] = v.get<int64_t>(); break;
      default: c.values[name] = v.get<std::string>();
    }
  }
  return c;
}

}  // namespace actune
