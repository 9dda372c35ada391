#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chemofront/config.hpp"
#include "chemofront/errors.hpp"

namespace chemofront {

/**
 * Coefficients of the two-species chemotaxis competition system
 *
 *   u_t = u_xx - chi1 (u w_x)_x + u (1 - u - a v)
 *   v_t = d v_xx - chi2 (v w_x)_x + r v (1 - b u - v)
 *   0   = w_xx + k u + l v - lambda w
 *   h'  = -mu1 u_x(t, h) - mu2 v_x(t, h)
 *
 * on 0 < x < h(t). Defaults are the standard smoke case.
 */
struct ModelParams {
  double a = 0.5;
  double b = 0.5;
  double r = 1.0;
  double d = 1.0;
  double chi1 = 0.05;
  double chi2 = 0.05;
  double k = 1.0;
  double l = 1.0;
  double lambda = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;

  /// Throws InputError naming the first offending field.
  void validate() const {
    const auto positive = [](double x, const char* name) {
      if (!(x > 0.0) || !std::isfinite(x)) throw InputError(std::string("parameter '") + name + "' must be positive");
    };
    const auto nonnegative = [](double x, const char* name) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw InputError(std::string("parameter '") + name + "' must be nonnegative");
    };
    positive(a, "a");
    positive(b, "b");
    positive(r, "r");
    positive(d, "d");
    nonnegative(chi1, "chi1");
    nonnegative(chi2, "chi2");
    positive(k, "k");
    positive(l, "l");
    positive(lambda, "lambda");
    positive(mu1, "mu1");
    positive(mu2, "mu2");
  }

  /// Sets a field by its config name; returns false for unknown names.
  bool set(std::string_view name, double value) {
    if (double* f = field(name)) {
      *f = value;
      return true;
    }
    return false;
  }

  std::optional<double> get(std::string_view name) const {
    if (const double* f = const_cast<ModelParams*>(this)->field(name)) return *f;
    return std::nullopt;
  }

  static constexpr std::string_view field_names[] = {"a", "b", "r", "d", "chi1", "chi2",
                                                     "k", "l", "lambda", "mu1", "mu2"};

 private:
  double* field(std::string_view name) {
    if (name == "a") return &a;
    if (name == "b") return &b;
    if (name == "r") return &r;
    if (name == "d") return &d;
    if (name == "chi1") return &chi1;
    if (name == "chi2") return &chi2;
    if (name == "k") return &k;
    if (name == "l") return &l;
    if (name == "lambda") return &lambda;
    if (name == "mu1") return &mu1;
    if (name == "mu2") return &mu2;
    return nullptr;
  }
};

inline void to_json(nlohmann::ordered_json& j, const ModelParams& p) {
  j = nlohmann::ordered_json::object();
  for (auto name : ModelParams::field_names) j[std::string(name)] = *p.get(name);
}

inline void from_json(const nlohmann::ordered_json& j, ModelParams& p) {
  for (auto name : ModelParams::field_names) p.set(name, j.at(std::string(name)).get<double>());
}

// ---------------------------------------------------------------------------
// Hypotheses
// ---------------------------------------------------------------------------

struct Slack {
  std::string name;
  double value = 0.0;
};

/// One hypothesis evaluated literally: each inequality as a signed slack.
struct HypothesisFragment {
  bool holds = false;
  std::vector<Slack> slacks;
};

/// (H1): 1 > k chi1, a > l chi1, r b > k chi2, r > l chi2.
inline HypothesisFragment check_h1(const ModelParams& p) {
  HypothesisFragment f;
  f.slacks = {{"one_minus_k_chi1", 1.0 - p.k * p.chi1},
              {"a_minus_l_chi1", p.a - p.l * p.chi1},
              {"rb_minus_k_chi2", p.r * p.b - p.k * p.chi2},
              {"r_minus_l_chi2", p.r - p.l * p.chi2}};
  f.holds = std::all_of(f.slacks.begin(), f.slacks.end(), [](const Slack& s) { return s.value > 0.0; });
  return f;
}

struct EquilibriumConstants {
  double A1bar = 1.0;
  double A2bar = 1.0;
};

/// Positive equilibrium of u' = u(1 - (1 - k chi1) u), v' = v(r - (r - l chi2) v).
inline EquilibriumConstants equilibrium_constants(const ModelParams& p) {
  const double den1 = 1.0 - p.k * p.chi1;
  const double den2 = p.r - p.l * p.chi2;
  if (!(den1 > 0.0)) throw InputError("1 - k*chi1 must be positive for A1bar");
  if (!(den2 > 0.0)) throw InputError("r - l*chi2 must be positive for A2bar");
  return {1.0 / den1, p.r / den2};
}

namespace detail {

inline double weak_u_slack(const ModelParams& p, const EquilibriumConstants& e) {
  return 1.0 - p.a * e.A2bar - p.chi1 * p.k * e.A1bar;
}

inline double weak_v_slack(const ModelParams& p, const EquilibriumConstants& e) {
  return p.r - p.r * p.b * e.A1bar - p.chi2 * p.l * e.A2bar;
}

// chi_i < 4 sqrt(D lambda) (slack)^{1/2} / (A1 k + A2 l). A nonpositive
// inner slack contributes a zero square root, so the bound degenerates to
// chi_i < 0 and can never hold.
inline double chi_bound_slack(double chi, double diffusivity, double inner, const ModelParams& p,
                              const EquilibriumConstants& e) {
  const double denom = e.A1bar * p.k + e.A2bar * p.l;
  return 4.0 * std::sqrt(diffusivity * p.lambda) * std::sqrt(std::max(inner, 0.0)) / denom - chi;
}

inline void require_h1(const ModelParams& p, const char* which) {
  if (!check_h1(p).holds) throw InputError(std::string(which) + " requires (H1), which fails for these parameters");
}

inline bool all_positive(const std::vector<Slack>& s) {
  return std::all_of(s.begin(), s.end(), [](const Slack& x) { return x.value > 0.0; });
}

}  // namespace detail

/// (H2): weak competition with the chemotaxis corrections, both species.
inline HypothesisFragment check_h2(const ModelParams& p) {
  detail::require_h1(p, "check_h2");
  const auto e = equilibrium_constants(p);
  const double su = detail::weak_u_slack(p, e);
  const double sv = detail::weak_v_slack(p, e);
  HypothesisFragment f;
  f.slacks = {{"weak_u", su},
              {"weak_v", sv},
              {"chi1_bound", detail::chi_bound_slack(p.chi1, 1.0, su, p, e)},
              {"chi2_bound", detail::chi_bound_slack(p.chi2, p.d, sv, p, e)}};
  f.holds = detail::all_positive(f.slacks);
  return f;
}

/// (H3): u-side weak condition plus b >= 1. The b >= 1 slack is weak (>= 0).
inline HypothesisFragment check_h3(const ModelParams& p) {
  detail::require_h1(p, "check_h3");
  const auto e = equilibrium_constants(p);
  const double su = detail::weak_u_slack(p, e);
  HypothesisFragment f;
  f.slacks = {{"weak_u", su}, {"chi1_bound", detail::chi_bound_slack(p.chi1, 1.0, su, p, e)}, {"b_minus_one", p.b - 1.0}};
  f.holds = f.slacks[0].value > 0.0 && f.slacks[1].value > 0.0 && f.slacks[2].value >= 0.0;
  return f;
}

/// (H4): a >= 1 plus the v-side weak condition. The a >= 1 slack is weak (>= 0).
inline HypothesisFragment check_h4(const ModelParams& p) {
  detail::require_h1(p, "check_h4");
  const auto e = equilibrium_constants(p);
  const double sv = detail::weak_v_slack(p, e);
  HypothesisFragment f;
  f.slacks = {{"a_minus_one", p.a - 1.0}, {"weak_v", sv}, {"chi2_bound", detail::chi_bound_slack(p.chi2, p.d, sv, p, e)}};
  f.holds = f.slacks[0].value >= 0.0 && f.slacks[1].value > 0.0 && f.slacks[2].value > 0.0;
  return f;
}

struct Equilibrium {
  double u = 0.0;
  double v = 0.0;
};

/// ((1-a)/(1-ab), (1-b)/(1-ab)) when both components are positive.
inline std::optional<Equilibrium> coexistence_equilibrium(double a, double b) {
  const double den = 1.0 - a * b;
  if (den == 0.0) throw InputError("coexistence equilibrium is degenerate for a*b = 1");
  const Equilibrium e{(1.0 - a) / den, (1.0 - b) / den};
  if (e.u > 0.0 && e.v > 0.0) return e;
  return std::nullopt;
}

inline std::optional<Equilibrium> coexistence_equilibrium(const ModelParams& p) { return coexistence_equilibrium(p.a, p.b); }

/**
 * All four hypotheses at once. When (H1) fails, h2..h4 are false and only
 * the H1 slacks are meaningful; A1bar/A2bar are NaN if undefined.
 *
 * h3/h4 follow the weak b >= 1 / a >= 1 convention; h3_strict/h4_strict
 * require b > 1 / a > 1.
 */
struct HypothesisReport {
  bool h1 = false;
  bool h2 = false;
  bool h3 = false;
  bool h4 = false;
  bool h3_strict = false;
  bool h4_strict = false;
  std::vector<Slack> margins;
  double A1bar = std::numeric_limits<double>::quiet_NaN();
  double A2bar = std::numeric_limits<double>::quiet_NaN();
  std::optional<Equilibrium> coexistence;
};

inline HypothesisReport check_hypotheses(const ModelParams& p) {
  HypothesisReport rep;
  const auto f1 = check_h1(p);
  rep.h1 = f1.holds;
  rep.margins = f1.slacks;
  if (1.0 - p.k * p.chi1 > 0.0 && p.r - p.l * p.chi2 > 0.0) {
    const auto e = equilibrium_constants(p);
    rep.A1bar = e.A1bar;
    rep.A2bar = e.A2bar;
  }
  if (p.a * p.b != 1.0) rep.coexistence = coexistence_equilibrium(p);
  if (!rep.h1) return rep;

  const auto f2 = check_h2(p);
  const auto f3 = check_h3(p);
  const auto f4 = check_h4(p);
  rep.h2 = f2.holds;
  rep.h3 = f3.holds;
  rep.h4 = f4.holds;
  rep.h3_strict = f3.holds && p.b > 1.0;
  rep.h4_strict = f4.holds && p.a > 1.0;
  // weak_u/weak_v and the chi bounds are shared between H2 and H3/H4.
  for (const auto& s : f2.slacks) rep.margins.push_back(s);
  rep.margins.push_back(f3.slacks[2]);
  rep.margins.push_back(f4.slacks[0]);
  return rep;
}

inline void to_json(nlohmann::ordered_json& j, const HypothesisReport& r) {
  j = nlohmann::ordered_json::object();
  j["h1"] = r.h1;
  j["h2"] = r.h2;
  j["h3"] = r.h3;
  j["h4"] = r.h4;
  j["h3_strict"] = r.h3_strict;
  j["h4_strict"] = r.h4_strict;
  auto& m = j["margins"] = nlohmann::ordered_json::object();
  for (const auto& s : r.margins) m[s.name] = s.value;
  j["A1bar"] = std::isfinite(r.A1bar) ? nlohmann::ordered_json(r.A1bar) : nlohmann::ordered_json(nullptr);
  j["A2bar"] = std::isfinite(r.A2bar) ? nlohmann::ordered_json(r.A2bar) : nlohmann::ordered_json(nullptr);
  if (r.coexistence)
    j["coexistence"] = {{"u_star", r.coexistence->u}, {"v_star", r.coexistence->v}};
  else
    j["coexistence"] = nullptr;
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// u0, v0 sampled at x_j = j h0 / N, j = 0..N.
struct InitialData {
  double h0 = 1.0;
  std::vector<double> u0;
  std::vector<double> v0;

  std::size_t intervals() const { return u0.empty() ? 0 : u0.size() - 1; }
  double dx() const { return h0 / static_cast<double>(intervals()); }
};

namespace detail {

inline void validate_profile(const std::vector<double>& f, double dx, const char* name) {
  if (f.size() < 3) throw InputError(std::string(name) + ": profile needs at least 3 samples");
  const std::size_t n = f.size() - 1;
  double sup = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(f[j])) throw InputError(std::string(name) + ": non-finite sample at node " + std::to_string(j));
    if (!(f[j] > 0.0))
      throw InputError(std::string(name) + " must be positive on [0, h0): sample " + std::to_string(j) + " is " +
                       std::to_string(f[j]));
    sup = std::max(sup, f[j]);
  }
  if (std::abs(f[n]) > 1e-12 * std::max(1.0, sup))
    throw InputError(std::string(name) + "(h0) must be 0, got " + std::to_string(f[n]));
  const double slope0 = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
  if (std::abs(slope0) > 10.0 * dx * dx)
    throw InputError(std::string(name) + "'(0) must vanish, one-sided estimate is " + std::to_string(slope0));
}

}  // namespace detail

/// Checks positivity on [0, h0), zero at h0 and zero slope at x = 0.
inline void validate_initial_data(const InitialData& init) {
  if (!(init.h0 > 0.0)) throw InputError("h0 must be positive");
  if (init.u0.size() != init.v0.size()) throw InputError("u0 and v0 must have the same number of samples");
  const double dx = init.dx();
  detail::validate_profile(init.u0, dx, "u0");
  detail::validate_profile(init.v0, dx, "v0");
}

inline InitialData make_initial_data(double h0, std::vector<double> u0, std::vector<double> v0) {
  InitialData init{h0, std::move(u0), std::move(v0)};
  validate_initial_data(init);
  return init;
}

enum class ProfileFamily { cosine, parabola };

inline std::string_view to_string(ProfileFamily f) { return f == ProfileFamily::cosine ? "cosine" : "parabola"; }

inline ProfileFamily parse_profile_family(std::string_view s) {
  if (s == "cosine") return ProfileFamily::cosine;
  if (s == "parabola") return ProfileFamily::parabola;
  throw InputError("unknown profile family '" + std::string(s) + "' (expected cosine or parabola)");
}

namespace detail {

inline std::vector<double> sample_family(ProfileFamily family, double amplitude, std::size_t n) {
  std::vector<double> f(n + 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = static_cast<double>(j) / static_cast<double>(n);
    f[j] = family == ProfileFamily::cosine ? amplitude * std::cos(0.5 * std::numbers::pi * s) : amplitude * (1.0 - s * s);
  }
  f[n] = 0.0;
  return f;
}

}  // namespace detail

/// A cos(pi x / (2 h0)) (cosine) or A (1 - (x/h0)^2) (parabola), separate amplitudes for u0 and v0.
inline InitialData make_initial_profile(ProfileFamily family, double amplitude_u, double amplitude_v, double h0,
                                        std::size_t grid_n) {
  if (!(amplitude_u > 0.0) || !(amplitude_v > 0.0))
    throw InputError("initial amplitude must be positive (u0, v0 must be positive on [0, h0))");
  if (!(h0 > 0.0)) throw InputError("h0 must be positive");
  if (grid_n < 16) throw InputError("initial profile needs grid_n >= 16");
  return make_initial_data(h0, detail::sample_family(family, amplitude_u, grid_n),
                           detail::sample_family(family, amplitude_v, grid_n));
}

inline InitialData make_initial_profile(ProfileFamily family, double amplitude, double h0, std::size_t grid_n) {
  return make_initial_profile(family, amplitude, amplitude, h0, grid_n);
}

/// Samples user-supplied functions of x on [0, h0] and validates the result.
inline InitialData make_initial_profile(const std::function<double(double)>& u0, const std::function<double(double)>& v0,
                                        double h0, std::size_t grid_n) {
  if (!(h0 > 0.0)) throw InputError("h0 must be positive");
  if (grid_n < 16) throw InputError("initial profile needs grid_n >= 16");
  std::vector<double> us(grid_n + 1), vs(grid_n + 1);
  for (std::size_t j = 0; j <= grid_n; ++j) {
    const double x = h0 * static_cast<double>(j) / static_cast<double>(grid_n);
    us[j] = u0(x);
    vs[j] = v0(x);
  }
  return make_initial_data(h0, std::move(us), std::move(vs));
}

}  // namespace chemofront
