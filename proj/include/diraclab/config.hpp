#ifndef DIRACLAB_CONFIG_HPP
#define DIRACLAB_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"

namespace diraclab::config {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error("config error at " + path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Typed view of one JSON object. Every key read is recorded with its effective value
/// (defaults included); finish() rejects keys nobody asked for.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, const T& def) {
    T v = has(key) ? convert<T>(j_.at(key), at(key)) : def;
    out_[key] = v;
    seen_.insert(key);
    return v;
  }

  template <class T>
  T need(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "required key missing");
    return get<T>(key, T{});
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    std::string v = get<std::string>(key, def);
    for (const auto& a : allowed)
      if (a == v) return v;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(at(key), "expected one of {" + list + "}, got \"" + v + "\"");
  }

  /// Marks a key as handled elsewhere; it is not copied into the effective object.
  void skip(const std::string& key) { seen_.insert(key); }

  Node& child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = children_.find(key);
    if (it == children_.end())
      it = children_.emplace(key, std::make_unique<Node>(has(key) ? j_.at(key) : empty, at(key))).first;
    return *it->second;
  }

  /// Effective object; throws on unknown keys anywhere below.
  json finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    json o = out_;
    for (auto& [k, c] : children_) o[k] = c->finish();
    return o;
  }

 private:
  template <class T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.get<long long>() < 0) throw ConfigError(path, "expected a nonnegative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& j_;
  std::string path_;
  json out_ = json::object();
  std::set<std::string> seen_;
  std::map<std::string, std::unique_ptr<Node>> children_;
};

/// Maps a "field: message" validation error onto a config path.
inline ConfigError field_error(const std::string& root, const std::exception& e) {
  std::string w = e.what();
  auto colon = w.find(':');
  if (colon == std::string::npos || w.find(' ') < colon) return ConfigError(root, w);
  return ConfigError(root + "." + w.substr(0, colon), w.substr(colon + 2));
}

inline ModelSpec read_model(Node& m, Formulation def_form = Formulation::UvForm) {
  ModelSpec s;
  s.n = m.get<int>("n", 2);
  s.model = m.choice("model", "soler", {"soler", "thirring"}) == "soler" ? Model::Soler : Model::Thirring;
  s.mass = m.get<double>("mass", 0.0);
  s.form = m.choice("form", def_form == Formulation::UvForm ? "uv" : "psi", {"uv", "psi"}) == "uv" ? Formulation::UvForm
                                                                                                  : Formulation::PsiForm;
  return s;
}

inline GridSpec read_grid(Node& g, const GridSpec& def) {
  GridSpec s;
  s.N = g.get<int>("N", def.N);
  s.L = g.get<double>("L", def.L);
  s.dt = g.get<double>("dt", def.dt);
  if (s.N < 8 || (s.N & (s.N - 1)) != 0) throw ConfigError(g.at("N"), "must be a power of two >= 8");
  if (!(s.L > 0.0)) throw ConfigError(g.at("L"), "must be positive");
  if (!(s.dt > 0.0)) throw ConfigError(g.at("dt"), "must be positive");
  return s;
}

inline DataSpec read_data(Node& d, const DataSpec& def) {
  DataSpec s;
  s.k_lo = d.get<double>("k_lo", def.k_lo);
  s.k_hi = d.get<double>("k_hi", def.k_hi);
  s.window = d.get<double>("window", def.window);
  return s;
}

// ---- simulate ----

struct SimulateConfig {
  ModelSpec model;
  GridSpec grid{64, 64.0, 0.05};
  std::string data_kind = "random";  // random | zero
  DataSpec data{0.1, 0.5, 8.0};
  double eps = 1.0;
  double T = 1.0;
  std::uint64_t seed = 1;
  int record_stride = 1;
  int checkpoint_stride = 0;
  double tail_threshold = 1e-4;
  bool equivalence = false;  // n = 3: run both formulations and report their divergence
};

// ---- campaign ----

struct CampaignConfig {
  std::string campaign;  // small-data | scattering | lipschitz | mass-horizon | null-gain
  Campaign c;
  NullGainParams ng;
};

// ---- verify ----

struct VerifyConfig {
  std::string id;
  json params = json::object();  // per-id parameters, read by the verifier itself
};

struct Parsed {
  std::string kind;
  json effective;  // defaults filled in; hashed for the manifest
  SimulateConfig simulate;
  CampaignConfig campaign;
  VerifyConfig verify;
};

inline void read_simulate(Node& root, SimulateConfig& s) {
  s.model = read_model(root.child("model"));
  s.grid = read_grid(root.child("grid"), s.grid);
  Node& d = root.child("data");
  s.data_kind = d.choice("kind", "random", {"random", "zero"});
  s.data = read_data(d, s.data);
  s.eps = root.get<double>("eps", s.eps);
  s.T = root.get<double>("T", s.T);
  s.seed = root.get<std::uint64_t>("seed", s.seed);
  s.record_stride = root.get<int>("record_stride", s.record_stride);
  s.checkpoint_stride = root.get<int>("checkpoint_stride", s.checkpoint_stride);
  s.tail_threshold = root.get<double>("tail_threshold", s.tail_threshold);
  s.equivalence = root.get<bool>("equivalence", s.equivalence);
  if (!(s.T >= 0.0)) throw ConfigError(root.at("T"), "must be >= 0");
  if (s.record_stride < 1) throw ConfigError(root.at("record_stride"), "must be >= 1");
  if (s.checkpoint_stride < 0) throw ConfigError(root.at("checkpoint_stride"), "must be >= 0");
  if (s.equivalence && s.model.n != 3) throw ConfigError(root.at("equivalence"), "needs model.n = 3");
  if (s.data_kind == "random" && !(s.data.k_lo > 0.0 && s.data.k_hi > s.data.k_lo))
    throw ConfigError(d.path(), "need 0 < k_lo < k_hi");
  ModelSpec m = s.model;
  m.eps = s.eps;
  try {
    m.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(root.at("model"), e.what());
  }
}

inline const std::vector<std::string>& campaign_names() {
  static const std::vector<std::string> v{"small-data", "scattering", "lipschitz", "mass-horizon", "null-gain"};
  return v;
}

/// `fixed` names the campaign when the caller already knows it (verify ids); the key is then not read.
inline void read_campaign(Node& root, CampaignConfig& cc, const std::string& fixed = "") {
  cc.campaign = fixed.empty() ? root.choice("campaign", "small-data", campaign_names()) : fixed;
  if (cc.campaign == "null-gain") {
    NullGainParams& p = cc.ng;
    p.n = root.get<int>("n", p.n);
    Node& g = root.child("grid");
    p.N = g.get<int>("N", p.N);
    p.L = g.get<double>("L", p.L);
    p.dt = g.get<double>("dt", p.dt);
    p.horizons = root.get<std::vector<double>>("horizons", p.horizons);
    p.width = root.get<double>("width", p.width);
    p.k0 = root.get<double>("k0", p.k0);
    p.refine = root.get<bool>("refine", p.refine);
    if (p.n < 1 || p.n > 3) throw ConfigError(root.at("n"), "must be 1, 2 or 3");
    if (p.N < 8 || (p.N & (p.N - 1)) != 0) throw ConfigError(g.at("N"), "must be a power of two >= 8");
    if (p.horizons.size() < 2) throw ConfigError(root.at("horizons"), "need at least two horizons");
    root.get<std::uint64_t>("seed", 0);
    return;
  }
  Campaign& c = cc.c;
  if (cc.campaign == "mass-horizon") c = default_mass_campaign();
  c.id = cc.campaign;
  c.model = read_model(root.child("model"), c.model.form);
  c.grid = read_grid(root.child("grid"), c.grid);
  c.data = read_data(root.child("data"), c.data);
  c.eps = root.get<std::vector<double>>("eps", c.eps);
  c.horizons = root.get<std::vector<double>>("horizons", c.horizons);
  c.masses = root.get<std::vector<double>>("masses", c.masses);
  c.deltas = root.get<std::vector<double>>("deltas", c.deltas);
  c.lipschitz_eps = root.get<double>("lipschitz_eps", c.lipschitz_eps);
  c.sample_dt = root.get<double>("sample_dt", c.sample_dt);
  c.scatter_levels = root.get<int>("scatter_levels", c.scatter_levels);
  c.tail_threshold = root.get<double>("tail_threshold", c.tail_threshold);
  c.charge_tol = root.get<double>("charge_tol", c.charge_tol);
  c.ratio_bound = root.get<double>("ratio_bound", c.ratio_bound);
  c.refine_tol = root.get<double>("refine_tol", c.refine_tol);
  c.refine = root.get<bool>("refine", c.refine);
  c.seed = root.get<std::uint64_t>("seed", c.seed);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw field_error(root.path(), e);
  }
}

inline Parsed parse(const json& j) {
  Parsed p;
  Node root(j, "$");
  p.kind = root.choice("kind", "", {"simulate", "campaign", "verify"});
  if (p.kind == "simulate") {
    read_simulate(root, p.simulate);
  } else if (p.kind == "campaign") {
    read_campaign(root, p.campaign);
  } else {
    p.verify.id = root.need<std::string>("id");
    root.skip("params");
    if (j.contains("params")) {
      if (!j.at("params").is_object()) throw ConfigError("$.params", "expected an object");
      p.verify.params = j.at("params");
    }
  }
  p.effective = root.finish();
  if (p.kind == "verify") p.effective["params"] = p.verify.params;
  return p;
}

inline Parsed load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, "cannot open file");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
  return parse(j);
}

}  // namespace diraclab::config

#endif  // DIRACLAB_CONFIG_HPP
