#pragma once

// INI experiment configs (Boost.PropertyTree). Every key is checked against
// the schema below before anything runs.

#include "certify.hpp"
#include "parabolic.hpp"
#include "presets.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <limits>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using ptree = boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"seed", "grid_refine"}},
      {"manifold", {"preset", "m", "delta"}},
      {"target", {"preset"}},
      {"initial_map", {"preset", "q1", "q2", "mu"}},
      {"grid", {"halvings", "R_max_log2", "log_R"}},
      {"solver", {"schedule_tol", "levels", "flow_level", "harmonic_tol", "newton_switch", "alpha", "mu"}},
      {"flow",
       {"T", "stationary_tol", "dt0", "growth", "theta", "dt_max", "dt_rel", "t_floor", "slab", "sample_t0",
        "fit_t_min", "fit_t_max", "max_steps"}},
      {"barriers",
       {"select", "power_n", "power_alpha", "log_n", "log_alpha", "poincare_mu_p", "twoends_mu_p", "twoends_delta",
        "weak_mu_p", "weak_eps"}},
      {"certify", {"battery", "energy", "contact_grid"}},
      {"resolvent", {"m", "angles", "radii", "datum_mu", "h", "R_max_log2"}},
      {"special_functions", {"a_min", "a_max", "a_step", "b", "z_min", "z_max", "z_step", "limit_z"}},
  };
  return s;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config: " + key + ": empty list entry");
    try {
      std::size_t used = 0;
      const std::string t = item.substr(b, e - b + 1);
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ConfigError("config: " + key + ": not a number list: '" + s + "'");
    }
  }
  return out;
}

inline std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

} // namespace detail

struct BarrierSelection {
  std::vector<std::string> select{"power", "log", "poincare", "twoends", "weak-twoends"};
  int power_n = 4;
  double power_alpha = 0.5;
  int log_n = 4;
  double log_alpha = 1;
  double poincare_mu_p = 1;
  double twoends_mu_p = 2, twoends_delta = 0.25;
  double weak_mu_p = 2, weak_eps = 1;
};

struct CertifySettings {
  std::string battery = "battery.ini";   // relative to the config file
  bool energy = true;
  int contact_grid = 6;
};

struct ResolventSettings {
  int m = 2;
  std::vector<double> angles{135, -135, 150, -150};  // degrees
  std::vector<double> radii{1, 3, 10, 30, 100};
  double datum_mu = 2;
  double h = 1.0 / 16;
  double R_max_log2 = 12;
};

struct SpecialSettings {
  double a_min = -3, a_max = 3, a_step = 0.5;
  std::vector<double> b{1.3, 3.5, 3, 2};
  double z_min = -20, z_max = 20, z_step = 2.5;
  std::vector<double> limit_z{50, 100, 200};
};

struct ExperimentConfig {
  std::string path;
  std::string text;  // raw bytes, hashed into the manifest
  unsigned seed = 1;
  int grid_refine = 0;
  std::string manifold = "two-ends", target = "poincare-ball", initial_map = "quotient-map";
  TwoEndsParams twoends;
  ConformalParams conformal;
  DecayParams decay;
  ExhaustionSchedule schedule_defaults;   // only tol is used
  HarmonicOptions harmonic;
  IntegrateOptions flow;
  BarrierSelection barriers;
  CertifySettings certify;
  ResolventSettings resolvent;
  SpecialSettings special;

  // which map experiment the three preset ids select
  std::string experiment() const {
    if (manifold == "two-ends" && target == "poincare-ball" && initial_map == "quotient-map") return "two-ends";
    if (manifold == "conformal-Cm" && target == "warped-planes" && initial_map == "z-over-1-plus-z2") return "conformal-Cm";
    if (manifold == "conformal-Cm" && target == "flat" && initial_map == "tabulated") return "conformal-decay";
    throw ConfigError("config: unsupported combination manifold=" + manifold + " target=" + target +
                      " initial_map=" + initial_map);
  }
  std::filesystem::path resolve(const std::string& rel) const {
    const std::filesystem::path p(rel);
    if (p.is_absolute() || path.empty()) return p;
    return std::filesystem::path(path).parent_path() / p;
  }
};

inline ExperimentConfig parse_config(const std::string& text, const std::string& path = "") {
  using detail::ptree;
  ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  const auto& schema = detail::config_schema();
  for (const auto& [sec, body] : pt) {
    const auto it = schema.find(sec);
    if (it == schema.end()) throw ConfigError("config: unknown section [" + sec + "]");
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + sec + "' outside a section");
    for (const auto& [key, v] : body)
      if (!it->second.count(key)) throw ConfigError("config: [" + sec + "] unknown key '" + key + "'");
  }
  ExperimentConfig c;
  c.path = path;
  c.text = text;
  auto num = [&](const std::string& key, double def) {
    const auto v = pt.get_optional<std::string>(key);
    if (!v) return def;
    try {
      std::size_t used = 0;
      const double x = std::stod(*v, &used);
      if (used != v->size() || !std::isfinite(x)) throw std::invalid_argument(*v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config: " + key + ": not a number: '" + *v + "'");
    }
  };
  auto integer = [&](const std::string& key, long def) {
    const double x = num(key, double(def));
    if (x != std::floor(x)) throw ConfigError("config: " + key + ": not an integer");
    return long(x);
  };
  auto str = [&](const std::string& key, const std::string& def) { return pt.get<std::string>(key, def); };
  auto list = [&](const std::string& key, const std::vector<double>& def) {
    const auto v = pt.get_optional<std::string>(key);
    return v ? detail::parse_list(key, *v) : def;
  };
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };

  c.seed = unsigned(integer("experiment.seed", 1));
  c.grid_refine = int(integer("experiment.grid_refine", 0));
  require(c.grid_refine >= 0 && c.grid_refine <= 4, "experiment.grid_refine must be in [0, 4]");

  c.manifold = str("manifold.preset", c.manifold);
  c.target = str("target.preset", c.target);
  c.initial_map = str("initial_map.preset", c.initial_map);
  const std::set<std::string> manifolds{"euclidean-Cm", "conformal-Cm", "two-ends", "poincare-ball"};
  const std::set<std::string> targets{"flat", "poincare-ball", "warped-planes"};
  const std::set<std::string> maps{"identity", "z-over-1-plus-z2", "quotient-map", "tabulated"};
  require(manifolds.count(c.manifold), "manifold.preset: unknown preset '" + c.manifold + "'");
  require(targets.count(c.target), "target.preset: unknown preset '" + c.target + "'");
  require(maps.count(c.initial_map), "initial_map.preset: unknown preset '" + c.initial_map + "'");

  // preset parameters; keys are shared, defaults and checks follow the manifold
  c.twoends.refine = c.conformal.refine = c.decay.refine = c.grid_refine;
  if (c.manifold == "two-ends") {
    TwoEndsParams& t = c.twoends;
    t.m = int(integer("manifold.m", t.m));
    t.delta = num("manifold.delta", t.delta);
    t.mu = num("solver.mu", t.mu);
    t.q1 = num("initial_map.q1", t.q1);
    t.q2 = num("initial_map.q2", t.q2);
    t.halvings = int(integer("grid.halvings", t.halvings));
    t.levels = int(integer("solver.levels", t.levels));
    t.flow_level = int(integer("solver.flow_level", t.flow_level));
    require(t.m >= 2, "manifold.m must be >= 2");
    require(t.delta > 0, "manifold.delta must be positive");
    require(t.mu > 2 && t.delta * (t.mu - 2) < 1, "solver.mu: need mu > 2 and delta (mu - 2) < 1");
    require(t.q1 * t.q1 + t.q2 * t.q2 < 1, "initial_map: image must stay inside the ball");
    require(t.levels >= 2 && t.levels <= t.halvings, "solver.levels must be in [2, grid.halvings]");
    require(t.flow_level >= 1 && t.flow_level < t.levels, "solver.flow_level must be in [1, solver.levels)");
  } else if (c.manifold == "conformal-Cm" && c.initial_map == "tabulated") {
    DecayParams& d = c.decay;
    d.m = int(integer("manifold.m", d.m));
    d.mu = num("initial_map.mu", d.mu);
    d.log_R = num("grid.log_R", d.log_R);
    require(d.m >= 1, "manifold.m must be >= 1");
    require(d.mu > 0, "initial_map.mu must be positive");
    require(d.log_R >= 5 && d.log_R <= 200, "grid.log_R must be in [5, 200]");
  } else if (c.manifold == "conformal-Cm") {
    ConformalParams& q = c.conformal;
    require(integer("manifold.m", 2) == 2, "manifold.m: the warped-planes preset is built for m = 2");
    const double lg = num("grid.R_max_log2", 24);
    require(lg >= 4 && lg <= 40, "grid.R_max_log2 must be in [4, 40]");
    q.R_max = std::exp2(lg);
    q.levels = int(integer("solver.levels", q.levels));
    q.flow_level = num("solver.flow_level", q.flow_level);
    q.alpha = num("solver.alpha", q.alpha);
    require(q.alpha > 0, "solver.alpha must be positive");
    require(q.levels >= 2, "solver.levels must be >= 2");
    require(q.flow_level >= 2 && q.flow_level < q.R_max, "solver.flow_level must be in [2, R_max)");
  }

  c.schedule_defaults.tol = num("solver.schedule_tol", 1e-6);
  require(c.schedule_defaults.tol > 0, "solver.schedule_tol must be positive");
  c.harmonic.tol = num("solver.harmonic_tol", 1e-8);
  c.harmonic.newton_switch = num("solver.newton_switch", 1e-4);
  require(c.harmonic.tol > 0, "solver.harmonic_tol must be positive");

  IntegrateOptions& f = c.flow;
  f.T = num("flow.T", 40);
  f.stationary_tol = num("flow.stationary_tol", 0);
  f.flow.dt0 = num("flow.dt0", 1e-3);
  f.flow.growth = num("flow.growth", 1.1);
  f.flow.theta = num("flow.theta", 0.5);
  f.flow.dt_max = num("flow.dt_max", std::numeric_limits<double>::infinity());
  f.flow.dt_rel = num("flow.dt_rel", std::numeric_limits<double>::infinity());
  f.flow.t_floor = num("flow.t_floor", 1);
  f.slab = num("flow.slab", 2);
  f.sample_t0 = num("flow.sample_t0", 1.0 / 64);
  f.fit_t_min = num("flow.fit_t_min", 1);
  f.fit_t_max = num("flow.fit_t_max", std::numeric_limits<double>::infinity());
  f.max_steps = integer("flow.max_steps", 1000000);
  require(f.T > 0 && f.flow.dt0 > 0 && f.flow.growth >= 1 && f.slab > 0 && f.sample_t0 > 0,
          "flow: T, dt0, slab, sample_t0 must be positive and growth >= 1");
  require(f.flow.theta > 0 && f.flow.theta <= 1, "flow.theta must be in (0, 1]");
  require(f.fit_t_max > f.fit_t_min, "flow.fit_t_max must exceed flow.fit_t_min");

  BarrierSelection& b = c.barriers;
  if (const auto s = pt.get_optional<std::string>("barriers.select")) b.select = detail::split_names(*s);
  const std::set<std::string> known{"power", "log", "poincare", "twoends", "weak-twoends"};
  for (const auto& s : b.select) require(known.count(s), "barriers.select: unknown barrier '" + s + "'");
  b.power_n = int(integer("barriers.power_n", b.power_n));
  b.power_alpha = num("barriers.power_alpha", b.power_alpha);
  b.log_n = int(integer("barriers.log_n", b.log_n));
  b.log_alpha = num("barriers.log_alpha", b.log_alpha);
  b.poincare_mu_p = num("barriers.poincare_mu_p", b.poincare_mu_p);
  b.twoends_mu_p = num("barriers.twoends_mu_p", b.twoends_mu_p);
  b.twoends_delta = num("barriers.twoends_delta", b.twoends_delta);
  b.weak_mu_p = num("barriers.weak_mu_p", b.weak_mu_p);
  b.weak_eps = num("barriers.weak_eps", b.weak_eps);
  require(b.power_n > 2 && b.power_alpha > 0 && b.power_alpha < 0.5 * b.power_n - 1,
          "barriers.power_alpha: need 0 < alpha < n/2 - 1 with n > 2");
  require(b.log_n > 2 && b.log_alpha > 0, "barriers.log: need n > 2, alpha > 0");
  require(b.poincare_mu_p > 0, "barriers.poincare_mu_p must be positive");
  require(b.twoends_delta > 0 && b.twoends_mu_p > 0 && b.twoends_delta * b.twoends_mu_p < 1,
          "barriers.twoends: need 0 < delta mu' < 1");
  require(b.weak_mu_p > 0 && b.twoends_delta * b.weak_mu_p < 1, "barriers.weak_mu_p: need 0 < delta mu' < 1");

  c.certify.battery = str("certify.battery", c.certify.battery);
  c.certify.energy = integer("certify.energy", 1) != 0;
  c.certify.contact_grid = int(integer("certify.contact_grid", 6));
  require(c.certify.contact_grid >= 3 && c.certify.contact_grid <= 8, "certify.contact_grid must be in [3, 8]");

  ResolventSettings& r = c.resolvent;
  r.m = int(integer("resolvent.m", r.m));
  r.angles = list("resolvent.angles", r.angles);
  r.radii = list("resolvent.radii", r.radii);
  r.datum_mu = num("resolvent.datum_mu", r.datum_mu);
  r.h = num("resolvent.h", r.h);
  r.R_max_log2 = num("resolvent.R_max_log2", r.R_max_log2);
  require(r.m >= 1 && !r.angles.empty() && !r.radii.empty(), "resolvent: need m >= 1 and nonempty angles, radii");
  for (double a : r.angles) require(std::abs(a) > 90 && std::abs(a) <= 180, "resolvent.angles: need 90 < |angle| <= 180 degrees");
  for (double x : r.radii) require(x > 0, "resolvent.radii must be positive");
  require(r.h > 0 && r.h <= 0.5 && r.R_max_log2 >= 2 && r.R_max_log2 <= 40, "resolvent: bad grid");

  SpecialSettings& sp = c.special;
  sp.a_min = num("special_functions.a_min", sp.a_min);
  sp.a_max = num("special_functions.a_max", sp.a_max);
  sp.a_step = num("special_functions.a_step", sp.a_step);
  sp.b = list("special_functions.b", sp.b);
  sp.z_min = num("special_functions.z_min", sp.z_min);
  sp.z_max = num("special_functions.z_max", sp.z_max);
  sp.z_step = num("special_functions.z_step", sp.z_step);
  sp.limit_z = list("special_functions.limit_z", sp.limit_z);
  require(sp.a_step > 0 && sp.z_step > 0 && sp.a_max >= sp.a_min && sp.z_max >= sp.z_min,
          "special_functions: bad ranges");
  for (double x : sp.b) require(!(x <= 0 && x == std::floor(x)), "special_functions.b: nonpositive integer");
  for (double z : sp.limit_z) require(z > 30, "special_functions.limit_z must exceed 30");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ------------------------------------------------------------ battery

inline std::vector<BatteryCase> load_battery(const std::string& path, const std::string& prefix) {
  using detail::ptree;
  ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("battery: " + e.message() + " (" + path + ")");
  }
  const int nx = pt.get<int>("battery.nx", 33), nt = pt.get<int>("battery.nt", 33);
  std::vector<BatteryCase> out;
  for (const auto& [sec, body] : pt) {
    if (sec.rfind(prefix, 0) != 0) continue;
    BatteryCase bc;
    bc.id = sec;
    auto g = [&](const char* k, double def) { return body.get<double>(k, def); };
    bc.A = g("A", 0);
    bc.omega = g("omega", 1);
    bc.beta = g("beta", 0);
    bc.s = g("s", 0);
    bc.G = g("G", 0);
    bc.D = g("D", 0);
    bc.a0 = g("a0", 1);
    bc.a1 = g("a1", 0);
    bc.b0 = g("b0", 0);
    bc.c0 = g("c0", 0);
    bc.R = g("R", 1);
    bc.T = g("T", 1);
    bc.p = g("p", 2);
    bc.rho = g("rho", 0.5);
    bc.nx = nx;
    bc.nt = nt;
    out.push_back(bc);
  }
  if (out.empty()) throw ConfigError("battery: no [" + prefix + "NN] sections in " + path);
  return out;
}

} // namespace hhm
