#pragma once

#include <cstdint>
#include <string>

#include "actune/config_space.hpp"
#include "actune/sandbox.hpp"

namespace actune {

// One target-algorithm invocation: configuration theta on instance pi with a
// seed and a (possibly adapted) cutoff.
struct RunRequest {
  Configuration config;
  std::string instance;
  std::string instance_info;  // accepted on the wire, carried but unused
  uint64_t seed = 0;
  double cutoff = 0.0;
  ResourceLimits limits;
};

}  // namespace actune
