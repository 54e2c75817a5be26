#include "rdspec/system_json.hpp"

#include <fstream>

#include "rdspec/errors.hpp"

namespace rdspec {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing required field");
  return *it;
}

double number(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

FiberMap fiber_from_json(const json& j, const std::string& path) {
  const int degree = static_cast<int>(integer(j, "degree", path));
  std::vector<double> breakpoints = numbers(j, "breakpoints", path);
  const json& pj = field(j, "pieces", path);
  if (!pj.is_array()) throw ConfigError(path + ".pieces: expected an array");
  std::vector<AffinePiece> pieces;
  for (std::size_t i = 0; i < pj.size(); ++i) {
    const std::string at = path + ".pieces[" + std::to_string(i) + "]";
    pieces.push_back({number(pj[i], "lo", at), number(pj[i], "hi", at),
                      number(pj[i], "slope", at), number(pj[i], "image_lo", at)});
  }
  std::vector<Interval> region;
  const json& rj = field(j, "contracting_region", path);
  if (!rj.is_array()) throw ConfigError(path + ".contracting_region: expected an array");
  for (std::size_t i = 0; i < rj.size(); ++i) {
    const json& a = rj[i];
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
      throw ConfigError(path + ".contracting_region[" + std::to_string(i) +
                        "]: expected [lo, hi]");
    }
    region.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  std::string name = j.value("name", std::string{});
  const double sigma = number(j, "sigma", path);
  const double L_bound = number(j, "L_bound", path);
  const int q = static_cast<int>(integer(j, "q", path));
  try {
    return FiberMap(degree, std::move(breakpoints), std::move(pieces), std::move(region), sigma,
                    L_bound, q, std::move(name));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

RandomSystem system_from_json(const json& j) {
  const std::string root = "system";
  const std::int64_t k = integer(j, "alphabet_size", root);
  std::vector<double> weights = numbers(j, "weights", root);
  if (k < 1 || static_cast<std::size_t>(k) != weights.size()) {
    throw ConfigError(root + ".weights: length must equal alphabet_size");
  }
  const json& seed = field(j, "master_seed", root);
  if (!seed.is_number_integer()) throw ConfigError(root + ".master_seed: expected an integer");
  const json& fj = field(j, "fibers", root);
  if (!fj.is_array()) throw ConfigError(root + ".fibers: expected an array");
  std::vector<FiberMap> fibers;
  for (std::size_t i = 0; i < fj.size(); ++i) {
    fibers.push_back(fiber_from_json(fj[i], root + ".fibers[" + std::to_string(i) + "]"));
  }
  BaseEnvironment base = [&] {
    try {
      return BaseEnvironment(std::move(weights), seed.get<std::uint64_t>());
    } catch (const ConfigError& e) {
      throw ConfigError(root + ".weights: " + e.what());
    }
  }();
  return RandomSystem(std::move(base), std::move(fibers), number(j, "epsilon0", root),
                      number(j, "c", root), number(j, "rho", root));
}

RandomSystem load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (j.contains("system")) return system_from_json(j["system"]);
  return system_from_json(j);
}

json to_json(const FiberMap& f) {
  json pieces = json::array();
  for (const AffinePiece& p : f.pieces()) {
    pieces.push_back({{"lo", p.lo}, {"hi", p.hi}, {"slope", p.slope}, {"image_lo", p.image_lo}});
  }
  json region = json::array();
  for (const Interval& a : f.contracting_region()) region.push_back({a.lo, a.hi});
  json out = {{"degree", f.degree()},       {"breakpoints", f.breakpoints()},
              {"pieces", pieces},           {"contracting_region", region},
              {"sigma", f.sigma()},         {"L_bound", f.L_bound()},
              {"q", f.q()}};
  if (!f.name().empty()) out["name"] = f.name();
  return out;
}

json to_json(const RandomSystem& sys) {
  json fibers = json::array();
  for (const FiberMap& f : sys.fibers()) fibers.push_back(to_json(f));
  return {{"alphabet_size", sys.base().alphabet_size()},
          {"weights", sys.base().weights()},
          {"master_seed", sys.base().master_seed()},
          {"fibers", fibers},
          {"epsilon0", sys.epsilon0()},
          {"c", sys.c()},
          {"rho", sys.rho()}};
}

}  // namespace rdspec
