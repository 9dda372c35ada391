#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "chemofront/config.hpp"
#include "chemofront/dichotomy.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/spectral.hpp"

namespace chemofront {

/// Inputs of the `eigen` subcommand; every combination of the lists is evaluated.
struct EigenQuery {
  EigenProblem problem = EigenProblem::neumann_dirichlet;
  std::vector<double> d0{1.0};
  std::vector<double> c{0.0};
  std::vector<double> a0{1.0};
  std::vector<double> len{1.0};
};

/// Settings shared by all subcommands.
struct RunConfig {
  RunSpec spec;
  double sim_t_end = 50.0;  ///< simulate horizon
  double sim_h_stop = std::numeric_limits<double>::infinity();
  std::vector<double> snapshot_times;
  EigenQuery eigen;
  std::vector<SweepAxis> axes;
  std::string oracle_case;
  double oracle_t_end = 200.0;
  double oracle_dt = 1e-3;
};

namespace detail {

inline bool parse_bool(std::string_view s, std::string_view key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InputError("key '" + std::string(key) + "': expected a boolean, got '" + std::string(s) + "'");
}

inline std::size_t parse_count(std::string_view s, std::string_view key) {
  const long v = parse_integer(s, key);
  if (v < 0) throw InputError("key '" + std::string(key) + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline bool set_scheme_key(SchemeConfig& s, std::string_view name, const std::string& value, std::string_view key) {
  if (name == "grid_n") s.grid_n = parse_count(value, key);
  else if (name == "dt") s.dt = parse_double(value, key);
  else if (name == "cfl_safety") s.cfl_safety = parse_double(value, key);
  else if (name == "advection") s.advection = parse_advection(value);
  else if (name == "h_update") s.h_update = parse_front_update(value);
  else if (name == "straightening") s.straightening = parse_straightening(value);
  else if (name == "max_halvings") s.max_halvings = static_cast<int>(parse_integer(value, key));
  else if (name == "front_speed_cap") s.front_speed_cap = parse_double(value, key);
  else if (name == "bound_tol") s.bound_tol = parse_double(value, key);
  else return false;
  return true;
}

inline bool set_rule_key(ClassificationRule& r, std::string_view name, const std::string& value, std::string_view key) {
  double* f = nullptr;
  if (name == "T_max") f = &r.T_max;
  else if (name == "H_max") f = &r.H_max;
  else if (name == "eps_van") f = &r.eps_van;
  else if (name == "eps_front") f = &r.eps_front;
  else if (name == "delta_persist") f = &r.delta_persist;
  else if (name == "probe_m") f = &r.probe_m;
  else if (name == "tail_frac") f = &r.tail_frac;
  else if (name == "limit_tol") f = &r.limit_tol;
  else if (name == "front_tol") f = &r.front_tol;
  if (!f) return false;
  *f = parse_double(value, key);
  return true;
}

}  // namespace detail

/**
 * Applies one key. Top level: model parameters and h0. Sections: init,
 * scheme, rule, run, eigen, sweep (one list-valued key per axis), oracle.
 * Unknown keys throw.
 */
inline void apply_config_key(RunConfig& rc, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  const std::string_view section = dot == std::string::npos ? std::string_view{} : std::string_view(key).substr(0, dot);
  const std::string_view name = dot == std::string::npos ? std::string_view(key) : std::string_view(key).substr(dot + 1);
  auto& spec = rc.spec;

  if (section.empty()) {
    if (name == "h0") {
      spec.init.h0 = parse_double(value, key);
      return;
    }
    if (spec.params.set(name, parse_double(value, key))) return;
  } else if (section == "init") {
    if (name == "family") return void(spec.init.family = parse_profile_family(value));
    if (name == "amplitude") return void(spec.init.amplitude_u = spec.init.amplitude_v = parse_double(value, key));
    if (name == "amplitude_u") return void(spec.init.amplitude_u = parse_double(value, key));
    if (name == "amplitude_v") return void(spec.init.amplitude_v = parse_double(value, key));
  } else if (section == "scheme") {
    if (detail::set_scheme_key(spec.scheme, name, value, key)) return;
  } else if (section == "rule") {
    if (detail::set_rule_key(spec.rule, name, value, key)) return;
  } else if (section == "run") {
    if (name == "sample_dt") return void(spec.sample_dt = parse_double(value, key));
    if (name == "stop_at_h_max") return void(spec.stop_at_h_max = detail::parse_bool(value, key));
    if (name == "stop_on_vanishing") return void(spec.stop_on_vanishing = detail::parse_bool(value, key));
    if (name == "vanish_sup") return void(spec.vanish_sup = parse_double(value, key));
    if (name == "tail_snapshots") return void(spec.tail_snapshots = detail::parse_count(value, key));
    if (name == "t_end") return void(rc.sim_t_end = parse_double(value, key));
    if (name == "h_stop") return void(rc.sim_h_stop = parse_double(value, key));
    if (name == "snapshot_times") return void(rc.snapshot_times = parse_double_list(value, key));
  } else if (section == "eigen") {
    if (name == "problem") {
      if (value == "neumann_dirichlet") return void(rc.eigen.problem = EigenProblem::neumann_dirichlet);
      if (value == "dirichlet_dirichlet") return void(rc.eigen.problem = EigenProblem::dirichlet_dirichlet);
      throw InputError("key '" + key + "': unknown eigenvalue problem '" + value + "'");
    }
    if (name == "d0") return void(rc.eigen.d0 = parse_double_list(value, key));
    if (name == "c") return void(rc.eigen.c = parse_double_list(value, key));
    if (name == "a0") return void(rc.eigen.a0 = parse_double_list(value, key));
    if (name == "len") return void(rc.eigen.len = parse_double_list(value, key));
  } else if (section == "sweep") {
    RunSpec probe = spec;
    apply_axis(probe, std::string(name), 1.0);  // throws on unknown axis
    auto values = parse_double_list(value, key);
    for (auto& ax : rc.axes)
      if (ax.name == name) return void(ax.values = std::move(values));
    rc.axes.push_back({std::string(name), std::move(values)});
    return;
  } else if (section == "oracle") {
    if (name == "case") return void(rc.oracle_case = value);
    if (name == "t_end") return void(rc.oracle_t_end = parse_double(value, key));
    if (name == "dt") return void(rc.oracle_dt = parse_double(value, key));
  }
  throw InputError("unknown config key '" + key + "'");
}

inline RunConfig make_run_config(const KeyValueConfig& kv) {
  RunConfig rc;
  for (const auto& [k, v] : kv.entries()) apply_config_key(rc, k, v);
  return rc;
}

}  // namespace chemofront
