#pragma once

#include <string>

#include "json.hpp"
#include "soapsched/dist.hpp"
#include "soapsched/hillvalley.hpp"

namespace soapsched {

/// Distribution spec documents:
///   {"kind":"discrete","atoms":[[1.0,0.5],[2.0,0.5]]}
///   {"kind":"exponential","rate":1.0,"quantize":{"points":2000}}
///   {"kind":"pareto","shape":1.5,"scale":1.0,"quantize":{"points":4000}}
///   {"kind":"pathological","delta":0.01}
/// plus uniform, hyperexponential, normal-mixture, four-bell and point-mass.
/// Throws ParameterError on malformed or invalid specs.
DiscreteDist parse_distribution(const nlohmann::json& spec);
DiscreteDist load_distribution(const std::string& path);

/// {"hills":[[lo,hi],...],"valleys":[[lo,hi],...]}
nlohmann::json to_json(const HVDecomp& d);

}  // namespace soapsched
