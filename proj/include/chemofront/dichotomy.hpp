#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "chemofront/errors.hpp"
#include "chemofront/model_params.hpp"
#include "chemofront/spectral.hpp"
#include "chemofront/stepper.hpp"

namespace chemofront {

/// Finite-horizon proxies for the asymptotic outcomes.
struct ClassificationRule {
  double T_max = 200.0;
  double H_max = 40.0;
  double eps_van = 1e-3;
  double eps_front = 1e-4;
  double delta_persist = 1e-2;
  double probe_m = 1.0;
  double tail_frac = 0.25;
  double limit_tol = 1e-2;  ///< max probe-window deviation accepted for a limit profile
  double front_tol = 0.05;  ///< slack on h_final <= l* for vanishing runs

  void validate() const {
    for (double x : {T_max, H_max, eps_van, eps_front, delta_persist, probe_m, limit_tol, front_tol})
      if (!(x > 0.0)) throw InputError("classification thresholds must be positive");
    if (!(tail_frac > 0.0 && tail_frac <= 0.5)) throw InputError("tail_frac must lie in (0, 0.5]");
  }
};

enum class Outcome { vanishing, spreading_generalized, spreading_coexist, spreading_u_wins, spreading_v_wins, indeterminate };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::vanishing: return "vanishing";
    case Outcome::spreading_generalized: return "spreading_generalized";
    case Outcome::spreading_coexist: return "spreading_coexist";
    case Outcome::spreading_u_wins: return "spreading_u_wins";
    case Outcome::spreading_v_wins: return "spreading_v_wins";
    case Outcome::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

inline Outcome parse_outcome(std::string_view s) {
  for (Outcome o : {Outcome::vanishing, Outcome::spreading_generalized, Outcome::spreading_coexist,
                    Outcome::spreading_u_wins, Outcome::spreading_v_wins, Outcome::indeterminate})
    if (to_string(o) == s) return o;
  throw InputError("unknown outcome '" + std::string(s) + "'");
}

inline bool is_spreading(Outcome o) {
  return o == Outcome::spreading_generalized || o == Outcome::spreading_coexist || o == Outcome::spreading_u_wins ||
         o == Outcome::spreading_v_wins;
}

/// Ordered name/value evidence; non-finite values serialize as null.
using Evidence = std::vector<std::pair<std::string, double>>;

inline double evidence_value(const Evidence& e, std::string_view name) {
  for (const auto& [k, v] : e)
    if (k == name) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

struct Classification {
  Outcome outcome = Outcome::indeterminate;
  Evidence evidence;
  std::string note;
};

namespace detail {

struct TailStats {
  double start = 0.0;
  double max_sup_sum = 0.0;
  double max_hprime = 0.0;
  double min_density = std::numeric_limits<double>::infinity();
  double dev_coexist = std::numeric_limits<double>::quiet_NaN();
  double dev_u_wins = 0.0;
  double dev_v_wins = 0.0;
  double dev_w_coexist = std::numeric_limits<double>::quiet_NaN();
  double dev_w_u_wins = 0.0;
  double dev_w_v_wins = 0.0;
};

// Largest distance of [lo, hi] from target.
inline double band_dev(double lo, double hi, double target) { return std::max(std::abs(lo - target), std::abs(hi - target)); }

inline TailStats tail_stats(const std::vector<DiagnosticSample>& samples, const ModelParams& p, double tail_frac) {
  TailStats ts;
  const double t_end = samples.back().t;
  ts.start = t_end * (1.0 - tail_frac);
  const auto coexist = coexistence_equilibrium(p.a, p.b);
  if (coexist) ts.dev_coexist = ts.dev_w_coexist = 0.0;
  for (const auto& d : samples) {
    if (d.t < ts.start) continue;
    ts.max_sup_sum = std::max(ts.max_sup_sum, d.sup_u + d.sup_v);
    ts.max_hprime = std::max(ts.max_hprime, d.hprime);
    ts.min_density = std::min(ts.min_density, d.min_density_probe);
    if (coexist) {
      ts.dev_coexist = std::max({ts.dev_coexist, band_dev(d.min_u_probe, d.max_u_probe, coexist->u),
                                 band_dev(d.min_v_probe, d.max_v_probe, coexist->v)});
      ts.dev_w_coexist = std::max(ts.dev_w_coexist, band_dev(d.min_w_probe, d.max_w_probe,
                                                             (p.k * coexist->u + p.l * coexist->v) / p.lambda));
    }
    ts.dev_u_wins = std::max({ts.dev_u_wins, band_dev(d.min_u_probe, d.max_u_probe, 1.0), d.max_v_probe});
    ts.dev_v_wins = std::max({ts.dev_v_wins, d.max_u_probe, band_dev(d.min_v_probe, d.max_v_probe, 1.0)});
    ts.dev_w_u_wins = std::max(ts.dev_w_u_wins, band_dev(d.min_w_probe, d.max_w_probe, p.k / p.lambda));
    ts.dev_w_v_wins = std::max(ts.dev_w_v_wins, band_dev(d.min_w_probe, d.max_w_probe, p.l / p.lambda));
  }
  return ts;
}

}  // namespace detail

/**
 * vanishing:             tail max (|u| + |v|) < eps_van and tail max h' < eps_front
 * spreading_generalized: h reached H_max and tail min of k u + l v on [0, m] > delta_persist,
 *                        refined to coexist / u_wins / v_wins when the tail probe
 *                        profiles sit within limit_tol of (u*, v*), (1, 0), (0, 1)
 * indeterminate:         anything else, including runs cut short by a scheme failure
 */
inline Classification classify(const std::vector<DiagnosticSample>& samples, const ModelParams& p,
                               const ClassificationRule& rule, const std::optional<std::string>& failure = std::nullopt) {
  rule.validate();
  if (samples.empty()) throw InputError("classify: empty trajectory");
  Classification c;
  const auto ts = detail::tail_stats(samples, p, rule.tail_frac);
  double lstar = std::numeric_limits<double>::quiet_NaN();
  try {
    lstar = dichotomy_threshold(p);
  } catch (const InputError&) {
  }
  const auto& last = samples.back();
  bool monotone = true;
  double min_hp = std::numeric_limits<double>::infinity(), max_hp = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && samples[i].h < samples[i - 1].h) monotone = false;
    min_hp = std::min(min_hp, samples[i].hprime);
    max_hp = std::max(max_hp, samples[i].hprime);
  }

  const bool vanishing = ts.max_sup_sum < rule.eps_van && ts.max_hprime < rule.eps_front;
  const bool spreading = last.h >= rule.H_max && ts.min_density > rule.delta_persist;

  if (failure) {
    c.outcome = Outcome::indeterminate;
    c.note = "scheme failure: " + *failure;
  } else if (vanishing && spreading) {
    throw SchemeFailure("classify: outcomes are not mutually exclusive");
  } else if (vanishing) {
    c.outcome = Outcome::vanishing;
  } else if (spreading) {
    c.outcome = Outcome::spreading_generalized;
    double best = rule.limit_tol;
    const std::pair<Outcome, double> refined[] = {{Outcome::spreading_coexist, ts.dev_coexist},
                                                  {Outcome::spreading_u_wins, ts.dev_u_wins},
                                                  {Outcome::spreading_v_wins, ts.dev_v_wins}};
    for (const auto& [o, dev] : refined)
      if (dev < best) {
        best = dev;
        c.outcome = o;
      }
  } else {
    c.outcome = Outcome::indeterminate;
    c.note = last.h >= rule.H_max ? "front reached H_max without interior persistence"
                                  : "no criterion met within the horizon";
  }

  c.evidence = {
      {"t_final", last.t},
      {"h_final", last.h},
      {"lstar", lstar},
      {"tail_start", ts.start},
      {"tail_max_sup_sum", ts.max_sup_sum},
      {"tail_max_hprime", ts.max_hprime},
      {"tail_min_density_probe", ts.min_density},
      {"tail_dev_coexist", ts.dev_coexist},
      {"tail_dev_u_wins", ts.dev_u_wins},
      {"tail_dev_v_wins", ts.dev_v_wins},
      {"min_hprime", min_hp},
      {"max_hprime", max_hp},
      {"h_nondecreasing", monotone ? 1.0 : 0.0},
      {"h_final_minus_lstar", last.h - lstar},
  };
  if (c.outcome == Outcome::vanishing) {
    const bool consistent = last.h <= lstar + rule.front_tol;
    c.evidence.emplace_back("vanishing_front_consistent", consistent ? 1.0 : 0.0);
    if (!consistent) c.note = "vanishing with h_final above l* + front_tol";
  }
  return c;
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

struct InitialSpec {
  ProfileFamily family = ProfileFamily::cosine;
  double amplitude_u = 0.5;
  double amplitude_v = 0.5;
  double h0 = 1.0;
};

/// Everything needed to reproduce one classified run.
struct RunSpec {
  ModelParams params;
  InitialSpec init;
  SchemeConfig scheme;
  ClassificationRule rule;
  double sample_dt = 0.5;
  bool stop_at_h_max = true;  ///< otherwise run to T_max
  bool stop_on_vanishing = true;
  double vanish_sup = 1e-8;
  std::size_t tail_snapshots = 4;
};

struct RunRecord {
  RunSpec spec;
  std::string stop_reason;
  std::optional<std::string> failure;
  Outcome outcome = Outcome::indeterminate;
  std::string note;
  Evidence evidence;
  std::vector<DiagnosticSample> diagnostics;
  std::vector<Snapshot> snapshots;  ///< tail profiles restricted to the probe window
};

namespace detail {

inline Snapshot restrict_to_probe(const Snapshot& s, double m) {
  Snapshot out{s.t, s.h, {}, {}, {}, {}};
  for (std::size_t j = 0; j < s.x.size(); ++j) {
    if (s.x[j] > m * (1.0 + 1e-12) && j > 0) break;
    out.x.push_back(s.x[j]);
    out.u.push_back(s.u[j]);
    out.v.push_back(s.v[j]);
    out.w.push_back(s.w[j]);
  }
  return out;
}

}  // namespace detail

inline RunOptions run_options(const RunSpec& spec) {
  RunOptions o;
  o.stop.t_end = spec.rule.T_max;
  if (spec.stop_at_h_max) o.stop.h_max = spec.rule.H_max;
  o.stop.stop_on_vanishing = spec.stop_on_vanishing;
  o.stop.vanish_sup = spec.vanish_sup;
  o.probe_m = spec.rule.probe_m;
  o.sample_dt = spec.sample_dt;
  o.capture_failure = true;
  for (std::size_t i = 0; i < spec.tail_snapshots; ++i)
    o.snapshot_times.push_back(spec.rule.T_max *
                               (1.0 - spec.rule.tail_frac * static_cast<double>(i) / static_cast<double>(spec.tail_snapshots)));
  return o;
}

inline InitialData build_initial_data(const RunSpec& spec) {
  return make_initial_profile(spec.init.family, spec.init.amplitude_u, spec.init.amplitude_v, spec.init.h0,
                              spec.scheme.grid_n);
}

inline RunRecord make_record(const RunSpec& spec, Trajectory traj) {
  RunRecord rec;
  rec.spec = spec;
  rec.stop_reason = traj.stop_reason;
  rec.failure = traj.failure;
  auto c = classify(traj.samples, spec.params, spec.rule, traj.failure);
  rec.outcome = c.outcome;
  rec.note = std::move(c.note);
  rec.evidence = std::move(c.evidence);
  rec.diagnostics = std::move(traj.samples);
  const double tail_start = evidence_value(rec.evidence, "tail_start");
  std::sort(traj.snapshots.begin(), traj.snapshots.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (const auto& s : traj.snapshots)
    if (s.t >= tail_start && s.t < traj.final_state.t) rec.snapshots.push_back(detail::restrict_to_probe(s, spec.rule.probe_m));
  rec.snapshots.push_back(
      detail::restrict_to_probe(take_snapshot(traj.final_state, spec.scheme.straightening), spec.rule.probe_m));
  return rec;
}

/// simulate + classify.
inline RunRecord run_and_classify(const RunSpec& spec) {
  spec.rule.validate();
  detail::require_h1(spec.params, "run_and_classify");
  return make_record(spec, run(build_initial_data(spec), spec.params, spec.scheme, run_options(spec)));
}

// ---------------------------------------------------------------------------
// Limit-profile verification
// ---------------------------------------------------------------------------

enum class LimitTarget { coexist, u_wins, v_wins };

inline std::string_view to_string(LimitTarget t) {
  return t == LimitTarget::coexist ? "coexist" : t == LimitTarget::u_wins ? "u_wins" : "v_wins";
}

inline LimitTarget parse_limit_target(std::string_view s) {
  if (s == "coexist") return LimitTarget::coexist;
  if (s == "u_wins") return LimitTarget::u_wins;
  if (s == "v_wins") return LimitTarget::v_wins;
  throw InputError("unknown limit target '" + std::string(s) + "'");
}

struct LimitReport {
  LimitTarget target = LimitTarget::coexist;
  bool sufficient = false;
  std::string message;
  double u_target = 0.0, v_target = 0.0, w_target = 0.0;
  double max_dev_u = 0.0, max_dev_v = 0.0, max_dev_w = 0.0;
  std::size_t profiles = 0;

  bool within(double tol) const { return sufficient && max_dev_u < tol && max_dev_v < tol && max_dev_w < tol; }
};

/// Target triples: (u*, v*, (k u* + l v*)/lambda), (1, 0, k/lambda), (0, 1, l/lambda).
inline LimitReport verify_limit_profile(const RunRecord& rec, LimitTarget target) {
  const auto& p = rec.spec.params;
  LimitReport r;
  r.target = target;
  if (target == LimitTarget::coexist) {
    const auto eq = coexistence_equilibrium(p.a, p.b);
    if (!eq) throw InputError("verify_limit_profile: no positive coexistence equilibrium for these a, b");
    r.u_target = eq->u;
    r.v_target = eq->v;
  } else {
    r.u_target = target == LimitTarget::u_wins ? 1.0 : 0.0;
    r.v_target = target == LimitTarget::u_wins ? 0.0 : 1.0;
  }
  r.w_target = (p.k * r.u_target + p.l * r.v_target) / p.lambda;
  if (!is_spreading(rec.outcome)) {
    r.message = "record outcome is " + std::string(to_string(rec.outcome)) + ", not a spreading variant";
    return r;
  }
  const double tail_start = evidence_value(rec.evidence, "tail_start");
  for (const auto& s : rec.snapshots) {
    if (s.t < tail_start) continue;
    ++r.profiles;
    for (std::size_t j = 0; j < s.u.size(); ++j) {
      r.max_dev_u = std::max(r.max_dev_u, std::abs(s.u[j] - r.u_target));
      r.max_dev_v = std::max(r.max_dev_v, std::abs(s.v[j] - r.v_target));
      r.max_dev_w = std::max(r.max_dev_w, std::abs(s.w[j] - r.w_target));
    }
  }
  if (r.profiles == 0) {
    r.message = "insufficient data: record has no tail snapshots";
    return r;
  }
  r.sufficient = true;
  r.message = "ok";
  return r;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json num(double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(); }
inline double num(const nlohmann::ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline const char* const kDiagnosticColumns[] = {"t",           "h",           "hprime",      "sup_u",
                                                 "sup_v",       "min_u_probe", "min_v_probe", "mass_u",
                                                 "mass_v",      "max_u_probe", "max_v_probe", "min_w_probe",
                                                 "max_w_probe", "min_density_probe"};

inline std::vector<double DiagnosticSample::*> diagnostic_members() {
  return {&DiagnosticSample::t,           &DiagnosticSample::h,           &DiagnosticSample::hprime,
          &DiagnosticSample::sup_u,       &DiagnosticSample::sup_v,       &DiagnosticSample::min_u_probe,
          &DiagnosticSample::min_v_probe, &DiagnosticSample::mass_u,      &DiagnosticSample::mass_v,
          &DiagnosticSample::max_u_probe, &DiagnosticSample::max_v_probe, &DiagnosticSample::min_w_probe,
          &DiagnosticSample::max_w_probe, &DiagnosticSample::min_density_probe};
}

}  // namespace detail

inline nlohmann::ordered_json scheme_to_json(const SchemeConfig& s) {
  return {{"grid_n", s.grid_n},
          {"dt", s.dt},
          {"cfl_safety", s.cfl_safety},
          {"advection", to_string(s.advection)},
          {"h_update", to_string(s.h_update)},
          {"straightening", to_string(s.straightening)},
          {"max_halvings", s.max_halvings},
          {"front_speed_cap", s.front_speed_cap},
          {"bound_tol", s.bound_tol}};
}

inline SchemeConfig scheme_from_json(const nlohmann::ordered_json& j) {
  SchemeConfig s;
  s.grid_n = j.at("grid_n").get<std::size_t>();
  s.dt = j.at("dt").get<double>();
  s.cfl_safety = j.at("cfl_safety").get<double>();
  s.advection = parse_advection(j.at("advection").get<std::string>());
  s.h_update = parse_front_update(j.at("h_update").get<std::string>());
  s.straightening = parse_straightening(j.at("straightening").get<std::string>());
  s.max_halvings = j.at("max_halvings").get<int>();
  s.front_speed_cap = j.at("front_speed_cap").get<double>();
  s.bound_tol = j.at("bound_tol").get<double>();
  return s;
}

inline nlohmann::ordered_json rule_to_json(const ClassificationRule& r) {
  return {{"T_max", r.T_max},         {"H_max", r.H_max},         {"eps_van", r.eps_van},
          {"eps_front", r.eps_front}, {"delta_persist", r.delta_persist}, {"probe_m", r.probe_m},
          {"tail_frac", r.tail_frac}, {"limit_tol", r.limit_tol}, {"front_tol", r.front_tol}};
}

inline ClassificationRule rule_from_json(const nlohmann::ordered_json& j) {
  ClassificationRule r;
  r.T_max = j.at("T_max").get<double>();
  r.H_max = j.at("H_max").get<double>();
  r.eps_van = j.at("eps_van").get<double>();
  r.eps_front = j.at("eps_front").get<double>();
  r.delta_persist = j.at("delta_persist").get<double>();
  r.probe_m = j.at("probe_m").get<double>();
  r.tail_frac = j.at("tail_frac").get<double>();
  r.limit_tol = j.at("limit_tol").get<double>();
  r.front_tol = j.at("front_tol").get<double>();
  return r;
}

inline nlohmann::ordered_json to_json(const RunRecord& rec) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["params"] = rec.spec.params;
  j["init"] = {{"family", to_string(rec.spec.init.family)},
               {"amplitude_u", rec.spec.init.amplitude_u},
               {"amplitude_v", rec.spec.init.amplitude_v},
               {"h0", rec.spec.init.h0},
               {"grid_n", rec.spec.scheme.grid_n}};
  j["scheme"] = scheme_to_json(rec.spec.scheme);
  j["rule"] = rule_to_json(rec.spec.rule);
  j["run"] = {{"sample_dt", rec.spec.sample_dt},
              {"stop_at_h_max", rec.spec.stop_at_h_max},
              {"stop_on_vanishing", rec.spec.stop_on_vanishing},
              {"vanish_sup", rec.spec.vanish_sup},
              {"tail_snapshots", rec.spec.tail_snapshots}};
  j["stop_reason"] = rec.stop_reason;
  j["failure"] = rec.failure ? ordered_json(*rec.failure) : ordered_json();
  j["outcome"] = to_string(rec.outcome);
  j["note"] = rec.note;
  ordered_json ev = ordered_json::object();
  for (const auto& [k, v] : rec.evidence) ev[k] = detail::num(v);
  j["evidence"] = ev;
  ordered_json cols = ordered_json::array();
  for (const char* c : detail::kDiagnosticColumns) cols.push_back(c);
  ordered_json rows = ordered_json::array();
  const auto members = detail::diagnostic_members();
  for (const auto& d : rec.diagnostics) {
    ordered_json row = ordered_json::array();
    for (auto m : members) row.push_back(detail::num(d.*m));
    rows.push_back(std::move(row));
  }
  j["diagnostics"] = {{"columns", cols}, {"rows", rows}};
  ordered_json snaps = ordered_json::array();
  for (const auto& s : rec.snapshots) snaps.push_back({{"t", s.t}, {"h", s.h}, {"x", s.x}, {"u", s.u}, {"v", s.v}, {"w", s.w}});
  j["snapshots"] = snaps;
  return j;
}

inline RunRecord record_from_json(const nlohmann::ordered_json& j) {
  RunRecord rec;
  rec.spec.params = j.at("params").get<ModelParams>();
  const auto& init = j.at("init");
  rec.spec.init.family = parse_profile_family(init.at("family").get<std::string>());
  rec.spec.init.amplitude_u = init.at("amplitude_u").get<double>();
  rec.spec.init.amplitude_v = init.at("amplitude_v").get<double>();
  rec.spec.init.h0 = init.at("h0").get<double>();
  rec.spec.scheme = scheme_from_json(j.at("scheme"));
  rec.spec.rule = rule_from_json(j.at("rule"));
  const auto& run = j.at("run");
  rec.spec.sample_dt = run.at("sample_dt").get<double>();
  rec.spec.stop_at_h_max = run.at("stop_at_h_max").get<bool>();
  rec.spec.stop_on_vanishing = run.at("stop_on_vanishing").get<bool>();
  rec.spec.vanish_sup = run.at("vanish_sup").get<double>();
  rec.spec.tail_snapshots = run.at("tail_snapshots").get<std::size_t>();
  rec.stop_reason = j.at("stop_reason").get<std::string>();
  if (!j.at("failure").is_null()) rec.failure = j.at("failure").get<std::string>();
  rec.outcome = parse_outcome(j.at("outcome").get<std::string>());
  rec.note = j.at("note").get<std::string>();
  for (const auto& [k, v] : j.at("evidence").items()) rec.evidence.emplace_back(k, detail::num(v));
  const auto members = detail::diagnostic_members();
  for (const auto& row : j.at("diagnostics").at("rows")) {
    DiagnosticSample d;
    for (std::size_t i = 0; i < members.size(); ++i) d.*members[i] = detail::num(row.at(i));
    rec.diagnostics.push_back(d);
  }
  for (const auto& s : j.at("snapshots"))
    rec.snapshots.push_back({s.at("t").get<double>(), s.at("h").get<double>(), s.at("x").get<std::vector<double>>(),
                             s.at("u").get<std::vector<double>>(), s.at("v").get<std::vector<double>>(),
                             s.at("w").get<std::vector<double>>()});
  return rec;
}

inline std::string record_json_text(const RunRecord& rec) { return to_json(rec).dump(1) + "\n"; }

/// Write to a sibling temporary file, then rename into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot write '" + tmp.string() + "'");
    os << text;
    os.flush();
    if (!os) throw InputError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline RunRecord load_record(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read record '" + path.string() + "'");
  try {
    return record_from_json(nlohmann::ordered_json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed record '" + path.string() + "': " + e.what());
  }
}

/// Evidence scalars and outcome, one per line.
inline void summarize(const RunRecord& rec, std::ostream& os) {
  const auto old = os.precision(12);
  os << "outcome " << to_string(rec.outcome) << '\n';
  os << "stop_reason " << rec.stop_reason << '\n';
  if (rec.failure) os << "failure " << *rec.failure << '\n';
  if (!rec.note.empty()) os << "note " << rec.note << '\n';
  for (const auto& [k, v] : rec.evidence) os << k << ' ' << v << '\n';
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepAxis {
  std::string name;  ///< a model parameter, mu (both), h0, amplitude (both), amplitude_u, amplitude_v
  std::vector<double> values;
};

struct SweepPoint {
  std::size_t index = 0;
  std::vector<double> coords;
  std::optional<RunRecord> record;
  std::string error;  ///< set when the point could not be run
};

inline void apply_axis(RunSpec& spec, const std::string& name, double value) {
  if (name == "mu") {
    spec.params.mu1 = spec.params.mu2 = value;
  } else if (name == "h0") {
    spec.init.h0 = value;
  } else if (name == "amplitude") {
    spec.init.amplitude_u = spec.init.amplitude_v = value;
  } else if (name == "amplitude_u") {
    spec.init.amplitude_u = value;
  } else if (name == "amplitude_v") {
    spec.init.amplitude_v = value;
  } else if (!spec.params.set(name, value)) {
    throw InputError("unknown sweep axis '" + name + "'");
  }
}

/// Row-major Cartesian product of the axes (last axis fastest).
inline std::vector<std::vector<double>> sweep_grid(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<double>> grid{{}};
  for (const auto& ax : axes) {
    if (ax.values.empty()) throw InputError("sweep axis '" + ax.name + "' has no values");
    std::vector<std::vector<double>> next;
    for (const auto& prefix : grid)
      for (double v : ax.values) {
        auto c = prefix;
        c.push_back(v);
        next.push_back(std::move(c));
      }
    grid = std::move(next);
  }
  return grid;
}

inline RunSpec sweep_point_spec(const RunSpec& base, const std::vector<SweepAxis>& axes, const std::vector<double>& coords) {
  RunSpec spec = base;
  for (std::size_t a = 0; a < axes.size(); ++a) apply_axis(spec, axes[a].name, coords[a]);
  return spec;
}

/**
 * Runs every grid point on `jobs` worker threads. Failures are recorded per
 * point. When `record_dir` is non-empty each record is persisted there as
 * run_NNNN.json.
 */
inline std::vector<SweepPoint> sweep(const RunSpec& base, const std::vector<SweepAxis>& axes, unsigned jobs,
                                     const std::filesystem::path& record_dir = {}) {
  for (const auto& ax : axes) {
    RunSpec probe = base;
    apply_axis(probe, ax.name, ax.values.empty() ? 0.0 : ax.values.front());
  }
  const auto grid = sweep_grid(axes);
  std::vector<SweepPoint> points(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) points[i] = {i, grid[i], std::nullopt, {}};
  if (!record_dir.empty()) std::filesystem::create_directories(record_dir);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      auto& pt = points[i];
      try {
        const RunSpec spec = sweep_point_spec(base, axes, pt.coords);
        spec.params.validate();
        if (!check_h1(spec.params).holds) throw InputError("grid point violates (H1)");
        pt.record = run_and_classify(spec);
        if (!record_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "run_%04zu.json", i);
          write_file_atomic(record_dir / name, record_json_text(*pt.record));
        }
      } catch (const std::exception& e) {
        pt.error = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(points.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return points;
}

inline void write_sweep_summary_csv(std::ostream& os, const std::vector<SweepAxis>& axes,
                                    const std::vector<SweepPoint>& points) {
  const auto old = os.precision(12);
  os << "index";
  for (const auto& ax : axes) os << ',' << ax.name;
  os << ",outcome,stop_reason,t_final,h_final,lstar,tail_max_sup_sum,tail_min_density_probe,error\n";
  for (const auto& pt : points) {
    os << pt.index;
    for (double c : pt.coords) os << ',' << c;
    if (pt.record) {
      const auto& e = pt.record->evidence;
      os << ',' << to_string(pt.record->outcome) << ',' << pt.record->stop_reason << ',' << evidence_value(e, "t_final")
         << ',' << evidence_value(e, "h_final") << ',' << evidence_value(e, "lstar") << ','
         << evidence_value(e, "tail_max_sup_sum") << ',' << evidence_value(e, "tail_min_density_probe") << ",\n";
    } else {
      std::string err = pt.error;
      std::replace(err.begin(), err.end(), ',', ';');
      os << ",error,,,,,,," << err << '\n';
    }
  }
  os.precision(old);
}

/// Advisory only: spreading followed by vanishing along increasing mu, mu1 or mu2 with other coordinates fixed.
inline std::vector<std::string> monotonicity_advisories(const std::vector<SweepAxis>& axes,
                                                        const std::vector<SweepPoint>& points) {
  std::vector<std::string> notes;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (axes[a].name != "mu" && axes[a].name != "mu1" && axes[a].name != "mu2") continue;
    std::map<std::vector<double>, std::vector<const SweepPoint*>> rays;
    for (const auto& pt : points) {
      auto key = pt.coords;
      key.erase(key.begin() + static_cast<std::ptrdiff_t>(a));
      rays[key].push_back(&pt);
    }
    for (auto& [key, ray] : rays) {
      std::sort(ray.begin(), ray.end(), [a](auto* x, auto* y) { return x->coords[a] < y->coords[a]; });
      bool seen_spreading = false;
      for (const auto* pt : ray) {
        if (!pt->record) continue;
        if (is_spreading(pt->record->outcome)) seen_spreading = true;
        if (seen_spreading && pt->record->outcome == Outcome::vanishing) {
          std::ostringstream msg;
          msg << "point " << pt->index << ": vanishing at " << axes[a].name << " = " << pt->coords[a]
              << " after spreading at a smaller value on the same ray";
          notes.push_back(msg.str());
        }
      }
    }
  }
  return notes;
}

}  // namespace chemofront
