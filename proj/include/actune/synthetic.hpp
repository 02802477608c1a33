#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "actune/config_space.hpp"
#include "actune/rng.hpp"
#include "actune/util.hpp"

namespace actune {

enum class LandscapeKind { QuadraticBowl, SeedNoise, InstanceShift, Heterogeneous };

inline const char* to_string(LandscapeKind k) {
  switch (k) {
    case LandscapeKind::QuadraticBowl: return "quadratic_bowl";
    case LandscapeKind::SeedNoise: return "seed_noise";
    case LandscapeKind::InstanceShift: return "instance_shift";
    default: return "heterogeneous";
  }
}

inline LandscapeKind landscape_kind_from(const std::string& s) {
  if (s == "quadratic_bowl") return LandscapeKind::QuadraticBowl;
  if (s == "seed_noise") return LandscapeKind::SeedNoise;
  if (s == "instance_shift") return LandscapeKind::InstanceShift;
  if (s == "heterogeneous") return LandscapeKind::Heterogeneous;
  throw Error("unknown landscape kind: " + s);
}

// Closed-form synthetic cost landscape. runtime(config, instance, seed) is a
// pure function, so the same landscape can back an in-process oracle and a
// spawned fixture executable with bit-identical values.
//
//   quadratic_bowl:  h(pi) * (1 + sum_i (theta_i - opt_i)^2)
//   seed_noise:      bowl * exp(noise_scale * z(theta, pi, seed))
//   instance_shift:  bowl around `optimum`, or around `optimum_test` for
//                    instances whose name contains "test"
//   heterogeneous:   per-instance optimum from hash(landscape seed, pi),
//                    toroidal distance on [range_lo, range_hi] so that no
//                    configuration is good on all instances
struct Landscape {
  LandscapeKind kind = LandscapeKind::QuadraticBowl;
  std::vector<std::string> dimensions;
  std::map<std::string, double> optimum;
  std::map<std::string, double> optimum_test;      // instance_shift only
  double range_lo = 0.0, range_hi = 1.0;           // heterogeneous torus
  double noise_scale = 0.0;                        // seed_noise
  std::map<std::string, double> instance_hardness; // by instance basename
  uint64_t seed = 0;

  double hardness(const std::string& instance) const {
    std::string base = std::filesystem::path(instance).filename().string();
    if (auto it = instance_hardness.find(base); it != instance_hardness.end()) return it->second;
    if (auto it = instance_hardness.find(instance); it != instance_hardness.end())
      return it->second;
    return 1.0;
  }
};

inline Landscape landscape_from_json(const nlohmann::json& j) {
  Landscape ls;
  ls.kind = landscape_kind_from(j.at("kind").get<std::string>());
  for (const auto& d : j.at("dimensions")) ls.dimensions.push_back(d.get<std::string>());
  if (j.contains("optimum"))
    for (auto& [k, v] : j.at("optimum").items()) ls.optimum[k] = v.get<double>();
  if (j.contains("optimum_test"))
    for (auto& [k, v] : j.at("optimum_test").items()) ls.optimum_test[k] = v.get<double>();
  if (j.contains("range")) {
    ls.range_lo = j.at("range").at(0).get<double>();
    ls.range_hi = j.at("range").at(1).get<double>();
  }
  if (j.contains("noise_scale")) ls.noise_scale = j.at("noise_scale").get<double>();
  if (j.contains("instance_hardness"))
    for (auto& [k, v] : j.at("instance_hardness").items())
      ls.instance_hardness[k] = v.get<double>();
  if (j.contains("seed")) ls.seed = j.at("seed").get<uint64_t>();
  if (ls.noise_scale < 0) throw Error("noise_scale must be >= 0");
  if (ls.dimensions.empty()) throw Error("landscape needs at least one dimension");
  return ls;
}

inline nlohmann::json landscape_to_json(const Landscape& ls) {
  nlohmann::json j;
  j["kind"] = to_string(ls.kind);
  j["dimensions"] = ls.dimensions;
  if (!ls.optimum.empty()) j["optimum"] = ls.optimum;
  if (!ls.optimum_test.empty()) j["optimum_test"] = ls.optimum_test;
  j["range"] = {ls.range_lo, ls.range_hi};
  if (ls.noise_scale != 0.0) j["noise_scale"] = ls.noise_scale;
  if (!ls.instance_hardness.empty()) j["instance_hardness"] = ls.instance_hardness;
  j["seed"] = ls.seed;
  return j;
}

inline Landscape load_landscape(const std::string& path) {
  return landscape_from_json(nlohmann::json::parse(read_text_file(path)));
}

inline void save_landscape(const Landscape& ls, const std::string& path) {
  write_text_file(path, landscape_to_json(ls).dump(2) + "\n");
}

namespace detail {

inline double config_dim_value(const Configuration& c, const std::string& dim) {
  auto it = c.values.find(dim);
  if (it == c.values.end()) throw Error("configuration lacks landscape dimension '" + dim + "'");
  if (std::holds_alternative<double>(it->second)) return std::get<double>(it->second);
  if (std::holds_alternative<int64_t>(it->second))
    return static_cast<double>(std::get<int64_t>(it->second));
  throw Error("landscape dimension '" + dim + "' is not numeric");
}

inline double bowl(const Landscape& ls, const Configuration& c,
                   const std::map<std::string, double>& opt) {
  double sum = 0.0;
  for (const auto& dim : ls.dimensions) {
    auto it = opt.find(dim);
    double center = it != opt.end() ? it->second : 0.0;
    double d = detail::config_dim_value(c, dim) - center;
    sum += d * d;
  }
  return 1.0 + sum;
}

}  // namespace detail

// Simulated runtime in seconds; deterministic and >= 0 by construction.
inline double synth_runtime(const Landscape& ls, const Configuration& config,
                            const std::string& instance, uint64_t seed) {
  const std::string inst_base = std::filesystem::path(instance).filename().string();
  const double h = ls.hardness(instance);
  switch (ls.kind) {
    case LandscapeKind::QuadraticBowl:
      return h * detail::bowl(ls, config, ls.optimum);
    case LandscapeKind::SeedNoise: {
      double base = h * detail::bowl(ls, config, ls.optimum);
      uint64_t hsh = hash_combine(hash64(config.canonical()), hash64(inst_base));
      hsh = hash_combine(hsh, seed ^ ls.seed);
      return base * std::exp(ls.noise_scale * normal_from_hash(hsh));
    }
    case LandscapeKind::InstanceShift: {
      bool is_test = inst_base.find("test") != std::string::npos;
      return h * detail::bowl(ls, config, is_test && !ls.optimum_test.empty() ? ls.optimum_test
                                                                              : ls.optimum);
    }
    default: {  // Heterogeneous: toroidal bowl around a per-instance optimum
      double span = ls.range_hi - ls.range_lo;
      double sum = 0.0;
      for (size_t i = 0; i < ls.dimensions.size(); ++i) {
        uint64_t hsh = hash_combine(hash_combine(ls.seed, hash64(inst_base)), i + 1);
        double center = ls.range_lo + unit_from_hash(hsh) * span;
        double d = std::fabs(detail::config_dim_value(config, ls.dimensions[i]) - center);
        d = std::min(d, span - d);
        sum += d * d;
      }
      return h * (1.0 + sum);
    }
  }
}

}  // namespace actune
