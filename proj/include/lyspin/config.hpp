#pragma once

#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lyspin/common.hpp"
#include "lyspin/model.hpp"

namespace lyspin {

/// Parsed configuration file. Model keys live at top level (dims, boundary,
/// beta, field_re, field_im, measure, couplings, range); the remaining keys
/// parameterise the individual commands.
struct RunConfig {
  ModelSpec model;
  YAML::Node root;

  template <class T>
  T get(const std::string& key, const T& fallback) const {
    try {
      const YAML::Node n = root[key];
      return n ? n.as<T>() : fallback;
    } catch (const YAML::Exception& e) {
      throw Error(ErrorCode::ConfigParse, "key '" + key + "': " + e.what());
    }
  }
  bool has(const std::string& key) const { return static_cast<bool>(root[key]); }
  YAML::Node node(const std::string& key) const { return root[key]; }
};

inline SiteMeasure parse_measure(const YAML::Node& n) {
  if (!n) return make_ising();
  if (n.IsScalar()) {
    const std::string s = n.as<std::string>();
    if (s == "ising") return make_ising();
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
      const std::string kind = s.substr(0, colon);
      int nodes = 0;
      try {
        nodes = std::stoi(s.substr(colon + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigParse, "bad node count in measure '" + s + "'");
      }
      if (kind == "circle") return make_sphere_uniform(2, nodes);
      if (kind == "sphere") return make_sphere_uniform(3, nodes);
    }
    throw Error(ErrorCode::ConfigParse, "unknown measure '" + s + "'");
  }
  if (n.IsSequence()) {
    std::vector<Atom> atoms;
    for (const auto& a : n) atoms.push_back({a["point"].as<std::vector<double>>(), a["weight"].as<double>()});
    return SiteMeasure(std::move(atoms));
  }
  throw Error(ErrorCode::ConfigParse, "measure must be a name or a list of atoms");
}

inline ModelSpec parse_model(const YAML::Node& root) {
  ModelSpec spec;
  try {
    require(static_cast<bool>(root["dims"]), ErrorCode::ConfigParse, "missing key 'dims'");
    const auto dims = root["dims"].as<std::vector<int>>();
    const std::string b = root["boundary"] ? root["boundary"].as<std::string>() : "free";
    require(b == "free" || b == "periodic", ErrorCode::ConfigParse, "boundary must be 'free' or 'periodic'");
    spec.lattice = LatticeBox(dims, b == "free" ? Boundary::Free : Boundary::Periodic);
    spec.measure = parse_measure(root["measure"]);
    spec.beta = root["beta"] ? root["beta"].as<double>() : 1.0;
    spec.field = cplx(root["field_re"] ? root["field_re"].as<double>() : 0.0,
                      root["field_im"] ? root["field_im"].as<double>() : 0.0);
    spec.couplings.range = root["range"] ? root["range"].as<int>() : 2;
    if (const auto cs = root["couplings"]) {
      for (const auto& c : cs) {
        if (c["offset"]) {
          spec.couplings.offsets.push_back({c["offset"].as<std::vector<int>>(), c["J"].as<std::vector<double>>()});
        } else {
          spec.couplings.pairs.push_back(
              {c["a"].as<std::vector<int>>(), c["b"].as<std::vector<int>>(), c["J"].as<std::vector<double>>()});
        }
      }
    } else {
      spec.couplings = CouplingSet::nearest_neighbour(spec.lattice.dimension(),
                                                      std::vector<double>(spec.measure.components(), 0.0));
      spec.couplings.offsets.clear();
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigParse, e.what());
  }
  return spec;
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig rc;
  try {
    rc.root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigParse, e.what());
  }
  require(rc.root.IsMap(), ErrorCode::ConfigParse, "configuration must be a mapping");
  rc.model = parse_model(rc.root);
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::ConfigParse, "cannot read config file " + path);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigParse, e.what());
  }
  RunConfig rc;
  rc.root = root;
  require(rc.root.IsMap(), ErrorCode::ConfigParse, "configuration must be a mapping");
  rc.model = parse_model(rc.root);
  return rc;
}

}  // namespace lyspin
