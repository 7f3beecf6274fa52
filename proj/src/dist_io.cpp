#include "soapsched/dist_io.hpp"

#include <fstream>

#include "soapsched/error.hpp"

namespace soapsched {

namespace {

using nlohmann::json;

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ParameterError(std::string("distribution spec needs numeric '") + key + "'");
  return j.at(key).get<double>();
}

int quantize_points(const json& j) {
  if (!j.contains("quantize")) return 1000;
  const json& q = j.at("quantize");
  if (!q.contains("points") || !q.at("points").is_number_integer())
    throw ParameterError("quantize.points must be an integer");
  return q.at("points").get<int>();
}

std::vector<std::vector<double>> rows(const json& j, const char* key, std::size_t width) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw ParameterError(std::string("distribution spec needs array '") + key + "'");
  std::vector<std::vector<double>> out;
  for (const json& row : j.at(key)) {
    if (!row.is_array() || row.size() != width)
      throw ParameterError(std::string("each entry of '") + key + "' needs " +
                           std::to_string(width) + " numbers");
    std::vector<double> r;
    for (const json& v : row) {
      if (!v.is_number()) throw ParameterError(std::string("non-numeric entry in '") + key + "'");
      r.push_back(v.get<double>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

DiscreteDist parse_distribution(const json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string())
    throw ParameterError("distribution spec needs a string 'kind'");
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "discrete") {
    std::vector<Atom> atoms;
    for (const auto& r : rows(spec, "atoms", 2)) atoms.push_back({r[0], r[1]});
    return DiscreteDist(std::move(atoms));
  }
  if (kind == "pathological") return pathological(number(spec, "delta"));
  if (kind == "point-mass") return DiscreteDist::point_mass(number(spec, "size"));

  ContinuousSpec cs;
  cs.points = quantize_points(spec);
  if (kind == "exponential") {
    cs.family = Exponential{number(spec, "rate")};
  } else if (kind == "pareto") {
    cs.family = Pareto{number(spec, "shape"), number(spec, "scale")};
  } else if (kind == "uniform") {
    cs.family = Uniform{number(spec, "lo"), number(spec, "hi")};
  } else if (kind == "hyperexponential") {
    HyperExponential h;
    for (const auto& r : rows(spec, "branches", 2)) h.branches.push_back({r[0], r[1]});
    cs.family = std::move(h);
  } else if (kind == "normal-mixture") {
    NormalMixture m;
    for (const auto& r : rows(spec, "components", 3)) m.components.push_back({r[0], r[1], r[2]});
    cs.family = std::move(m);
  } else if (kind == "four-bell") {
    cs.family = four_bell_mixture();
  } else {
    throw ParameterError("unknown distribution kind '" + kind + "'");
  }
  return quantize(cs);
}

DiscreteDist load_distribution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open distribution file " + path);
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw ParameterError(path + ": " + e.what());
  }
  return parse_distribution(spec);
}

json to_json(const HVDecomp& d) {
  json hills = json::array(), valleys = json::array();
  for (const Hill& h : d.hills()) hills.push_back({h.lo, h.hi});
  for (const Valley& v : d.valleys()) valleys.push_back({v.lo, v.hi});
  return {{"hills", hills}, {"valleys", valleys}};
}

}  // namespace soapsched
