#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chemofront/elliptic.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/model_params.hpp"
#include "chemofront/tridiagonal.hpp"

namespace chemofront {

enum class AdvectionScheme { upwind, central };
enum class FrontUpdate { euler, heun };

/// global_rescale: xi = x / h(t) on [0, 1]. paper_zeta: x = y + zeta(y) (h - h0),
/// only valid while |h - h0| <= h0 / 8.
enum class Straightening { global_rescale, paper_zeta };

inline std::string_view to_string(AdvectionScheme s) { return s == AdvectionScheme::upwind ? "upwind" : "central"; }
inline std::string_view to_string(FrontUpdate s) { return s == FrontUpdate::euler ? "euler" : "heun"; }
inline std::string_view to_string(Straightening s) {
  return s == Straightening::global_rescale ? "global_rescale" : "paper_zeta";
}

inline AdvectionScheme parse_advection(std::string_view s) {
  if (s == "upwind") return AdvectionScheme::upwind;
  if (s == "central") return AdvectionScheme::central;
  throw InputError("unknown advection scheme '" + std::string(s) + "'");
}
inline FrontUpdate parse_front_update(std::string_view s) {
  if (s == "euler") return FrontUpdate::euler;
  if (s == "heun") return FrontUpdate::heun;
  throw InputError("unknown h update rule '" + std::string(s) + "'");
}
inline Straightening parse_straightening(std::string_view s) {
  if (s == "global_rescale") return Straightening::global_rescale;
  if (s == "paper_zeta") return Straightening::paper_zeta;
  throw InputError("unknown straightening '" + std::string(s) + "'");
}

struct SchemeConfig {
  std::size_t grid_n = 256;  ///< reference intervals, grid_n + 1 nodes
  double dt = 5e-4;
  double cfl_safety = 0.4;
  AdvectionScheme advection = AdvectionScheme::upwind;
  FrontUpdate h_update = FrontUpdate::heun;
  Straightening straightening = Straightening::global_rescale;
  int max_halvings = 10;
  double front_speed_cap = 0.0;  ///< 0 selects the a-priori estimate
  double bound_tol = 1e-6;

  void validate(std::size_t min_grid = 8) const {
    if (grid_n < min_grid) throw InputError("grid_n must be at least " + std::to_string(min_grid));
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InputError("cfl_safety must lie in (0, 1]");
    if (max_halvings < 0) throw InputError("max_halvings must be nonnegative");
    if (!(front_speed_cap >= 0.0)) throw InputError("front_speed_cap must be nonnegative");
  }
};

/// Profiles live on the reference grid; `h_ref` is the h0 anchoring paper_zeta.
struct State {
  double t = 0.0;
  double h = 1.0;
  double h_ref = 1.0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> w;
  double hprime = 0.0;
  std::size_t steps = 0;

  std::size_t intervals() const { return u.size() - 1; }
};

/// Caps enforced after every accepted step.
struct StepLimits {
  double u_cap = std::numeric_limits<double>::infinity();
  double v_cap = std::numeric_limits<double>::infinity();
  double hprime_cap = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Boundary straightening with a C^3 cutoff
// ---------------------------------------------------------------------------

struct CutoffValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

namespace detail {

// G(t) = s * int_0^t rho, rho a C^2 plateau with quintic-smoothstep ramps of
// width kRamp, so G is C^3, G(0) = 0, G(1) = 1 and max G' = s = 1/(1 - kRamp).
inline constexpr double kRamp = 0.25;

inline double smooth5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double smooth5_d(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
inline double smooth5_int(double t) { return t * t * t * t * (2.5 + t * (-3.0 + t)); }

inline CutoffValue unit_step(double t) {
  const double s = 1.0 / (1.0 - kRamp);
  const double e = kRamp;
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  if (t < e) {
    const double tau = t / e;
    return {s * e * smooth5_int(tau), s * smooth5(tau), s * smooth5_d(tau) / e};
  }
  if (t <= 1.0 - e) return {s * (0.5 * e + (t - e)), s, 0.0};
  const double tau = (1.0 - t) / e;
  return {1.0 - s * e * smooth5_int(tau), s * smooth5(tau), -s * smooth5_d(tau) / e};
}

}  // namespace detail

/// zeta = 1 for |y - h0| < h0/4, 0 for |y - h0| > h0/2, |zeta'| <= (16/3)/h0 < 6/h0.
inline CutoffValue cutoff_zeta(double y, double h0) {
  const double q = h0 / 4.0;
  if (y <= h0) {
    const auto g = detail::unit_step((y - 0.5 * h0) / q);
    return {g.value, g.d1 / q, g.d2 / (q * q)};
  }
  const auto g = detail::unit_step((1.5 * h0 - y) / q);
  return {g.value, -g.d1 / q, g.d2 / (q * q)};
}

struct StraightenCoeffs {
  double A = 1.0;  ///< (dy/dx)^2
  double B = 0.0;  ///< d^2 y / dx^2
  double C = 0.0;  ///< -(1/h') dy/dt
};

/**
 * Coefficients of the map x = y + zeta(y) (h - h0) at y. The second
 * derivative carries the zeta'' factor: B = -zeta'' (h - h0) / (1 + zeta' (h - h0))^3.
 */
inline StraightenCoeffs straighten_coeffs(double h, double h0, double y) {
  if (!(h0 > 0.0)) throw InputError("straighten_coeffs: h0 must be positive");
  if (std::abs(h - h0) > h0 / 8.0)
    throw InputError("straighten_coeffs: |h - h0| = " + std::to_string(std::abs(h - h0)) + " exceeds h0/8");
  const auto z = cutoff_zeta(y, h0);
  const double delta = h - h0;
  const double jac = 1.0 + z.d1 * delta;
  return {1.0 / (jac * jac), -z.d2 * delta / (jac * jac * jac), z.value / jac};
}

// ---------------------------------------------------------------------------
// Front speed and a-priori caps
// ---------------------------------------------------------------------------

/// One-sided three-point derivative at the last node, with f_N = 0, per unit reference length.
inline double end_slope(std::span<const double> f, double spacing) {
  const std::size_t n = f.size() - 1;
  return (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * spacing);
}

/// h' = -(mu1 u_x + mu2 v_x) at the front for the global rescale (x = xi h).
inline double stefan_speed(std::span<const double> u, std::span<const double> v, double h, const ModelParams& p) {
  const double dxi = 1.0 / static_cast<double>(u.size() - 1);
  return -(p.mu1 * end_slope(u, dxi) + p.mu2 * end_slope(v, dxi)) / h;
}

/**
 * Upper bound for h' from the barrier C0 [2 M1 (h - x) - M1^2 (h - x)^2]
 * near the front: M1 is the smallest value making the barrier a
 * supersolution for both species (using |w_x| <= max(ku + lv) / (2 sqrt(lambda)))
 * and dominating the initial data on [h0 - 1/M1, h0]. Returns
 * 2 (mu1 + mu2) C0 M1, or +inf when (H1) fails.
 */
inline double default_front_speed_cap(const ModelParams& p, double sup_u0, double sup_v0, double slope_u0,
                                      double slope_v0, double h0) {
  if (!check_h1(p).holds) return std::numeric_limits<double>::infinity();
  const auto e = equilibrium_constants(p);
  const double m1bar = std::max(sup_u0, e.A1bar);
  const double m2bar = std::max(sup_v0, e.A2bar);
  const double c0 = std::max(m1bar, m2bar);
  const double grad = (p.k * m1bar + p.l * m2bar) / (2.0 * std::sqrt(p.lambda));
  const double root_u = 0.5 * (p.chi1 * grad + std::sqrt(p.chi1 * p.chi1 * grad * grad + 2.0));
  const double root_v = (p.chi2 * grad + std::sqrt(p.chi2 * p.chi2 * grad * grad + 2.0 * p.d * p.r)) / (2.0 * p.d);
  const double m1 = std::max({root_u, root_v, slope_u0 / c0, slope_v0 / c0, 1.0 / h0});
  return 2.0 * (p.mu1 + p.mu2) * c0 * m1;
}

namespace detail {

inline double sup_norm(std::span<const double> f) {
  double s = 0.0;
  for (double x : f) s = std::max(s, std::abs(x));
  return s;
}

inline double max_abs_slope(std::span<const double> f, double dx) {
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < f.size(); ++j) s = std::max(s, std::abs(f[j + 1] - f[j]) / dx);
  return s;
}

}  // namespace detail

/// Caps implied by the initial state: u <= max(|u0|, A1bar), v <= max(|v0|, A2bar), 0 <= h' <= Mtilde.
inline StepLimits a_priori_limits(const ModelParams& p, const State& s, const SchemeConfig& cfg) {
  StepLimits lim;
  const double sup_u = detail::sup_norm(s.u);
  const double sup_v = detail::sup_norm(s.v);
  if (check_h1(p).holds) {
    const auto e = equilibrium_constants(p);
    lim.u_cap = std::max(sup_u, e.A1bar);
    lim.v_cap = std::max(sup_v, e.A2bar);
  }
  const double dx = cfg.straightening == Straightening::global_rescale ? s.h / static_cast<double>(s.intervals())
                                                                       : s.h_ref / static_cast<double>(s.intervals());
  lim.hprime_cap = cfg.front_speed_cap > 0.0
                       ? cfg.front_speed_cap
                       : default_front_speed_cap(p, sup_u, sup_v, detail::max_abs_slope(s.u, dx),
                                                 detail::max_abs_slope(s.v, dx), s.h);
  return lim;
}

// ---------------------------------------------------------------------------
// Stepper
// ---------------------------------------------------------------------------

namespace detail {

// Reaction X (g - cu U - cv V); chemotaxis sensitivity chi; diffusivity D.
struct Species {
  double diffusivity;
  double chi;
  double growth;
  double coef_u;
  double coef_v;
};

inline Species species_u(const ModelParams& p) { return {1.0, p.chi1, 1.0, 1.0, p.a}; }
inline Species species_v(const ModelParams& p) { return {p.d, p.chi2, p.r, p.r * p.b, p.r}; }

}  // namespace detail

/**
 * Advances the front-fixed system. Per substep: front speed from the
 * one-sided Stefan stencil, h by Euler or Heun, then u and v with implicit
 * diffusion and explicit mesh advection, chemotaxis flux and reaction;
 * finally w and h' are refreshed for the new state.
 *
 * A Stepper owns its workspace and serves one run at a time.
 */
class Stepper {
 public:
  Stepper(ModelParams p, SchemeConfig cfg, StepLimits limits) : p_(p), cfg_(cfg), limits_(limits) { cfg_.validate(3); }

  const SchemeConfig& config() const { return cfg_; }
  const ModelParams& params() const { return p_; }
  const StepLimits& limits() const { return limits_; }

  /// Recomputes w and h' from (u, v, h). Enforces u(1) = v(1) = 0.
  void refresh(State& s) {
    const std::size_t n = s.intervals();
    s.u[n] = 0.0;
    s.v[n] = 0.0;
    s.w.resize(n + 1);
    if (cfg_.straightening == Straightening::global_rescale) {
      chem_.solve(s.u, s.v, s.h, p_, s.w, false);
      s.hprime = clean_speed(stefan_speed(s.u, s.v, s.h, p_));
    } else {
      solve_chem_zeta(s.u, s.v, s.h, s.h_ref, s.w);
      s.hprime = clean_speed(zeta_speed(s.u, s.v, s.h_ref));
    }
  }

  /// Largest substep allowed by the advective CFL condition for the current state.
  double cfl_limit(const State& s) const {
    const std::size_t n = s.intervals();
    const double dxi = 1.0 / static_cast<double>(n);
    double vmax = 0.0;
    if (cfg_.straightening == Straightening::global_rescale) {
      const double inv_h2 = 1.0 / (s.h * s.h);
      for (std::size_t j = 0; j < n; ++j) {
        const double g = std::abs(s.w[j + 1] - s.w[j]) / dxi * inv_h2;
        vmax = std::max(vmax, std::max(p_.chi1, p_.chi2) * g);
      }
      vmax += std::abs(s.hprime) / s.h;
      if (vmax == 0.0) return std::numeric_limits<double>::infinity();
      return cfg_.cfl_safety * dxi / vmax;
    }
    const double dy = s.h_ref * dxi;
    for (std::size_t j = 1; j < n; ++j) {
      const auto c = straighten_coeffs(s.h, s.h_ref, static_cast<double>(j) * dy);
      const double wy = (s.w[j + 1] - s.w[j - 1]) / (2.0 * dy);
      for (const auto& sp : {detail::species_u(p_), detail::species_v(p_)})
        vmax = std::max(vmax, std::abs(sp.diffusivity * c.B + s.hprime * c.C - sp.chi * c.A * wy));
    }
    if (vmax == 0.0) return std::numeric_limits<double>::infinity();
    return cfg_.cfl_safety * dy / vmax;
  }

  /// Advances `s` by cfg.dt, subdividing for CFL and halving on positivity loss.
  void step(State& s) {
    const double t0 = s.t;
    const double limit = cfl_limit(s);
    const double substeps_d = std::ceil(cfg_.dt / limit);
    const std::size_t substeps = limit >= cfg_.dt ? 1 : static_cast<std::size_t>(std::min(substeps_d, 1e9));
    const double sub_dt = cfg_.dt / static_cast<double>(substeps);
    for (std::size_t i = 0; i < substeps; ++i) advance_with_retry(s, sub_dt, 0);
    s.t = t0 + cfg_.dt;
    ++s.steps;
  }

 private:
  double clean_speed(double hp) const {
    if (!std::isfinite(hp)) throw SchemeFailure("non-finite front speed");
    if (hp <= 0.0) {
      if (hp > -1e-12) return 0.0;
      throw SchemeFailure("negative front speed " + std::to_string(hp));
    }
    return hp;
  }

  void advance_with_retry(State& s, double dt, int depth) {
    try {
      advance(s, dt);
    } catch (const PositivityViolation&) {
      if (depth >= cfg_.max_halvings) throw;
      advance_with_retry(s, 0.5 * dt, depth + 1);
      advance_with_retry(s, 0.5 * dt, depth + 1);
    }
  }

  // Single attempt; leaves `s` untouched on failure.
  void advance(State& s, double dt) {
    const std::size_t n = s.intervals();
    u_new_.resize(n + 1);
    v_new_.resize(n + 1);
    const bool zeta = cfg_.straightening == Straightening::paper_zeta;

    const double hp0 = s.hprime;
    check_speed(hp0);
    double h_new = s.h + dt * hp0;
    if (cfg_.h_update == FrontUpdate::heun) {
      species_pass(s, h_new, dt, u_new_, v_new_);
      const double hp_pred = clean_speed(zeta ? zeta_speed(u_new_, v_new_, s.h_ref) : stefan_speed(u_new_, v_new_, h_new, p_));
      check_speed(hp_pred);
      h_new = s.h + 0.5 * dt * (hp0 + hp_pred);
    }
    species_pass(s, h_new, dt, u_new_, v_new_);
    check_state(u_new_, v_new_);

    State next = s;
    next.u.swap(u_new_);
    next.v.swap(v_new_);
    next.h = h_new;
    next.t = s.t + dt;
    refresh(next);
    check_speed(next.hprime);
    s = std::move(next);
  }

  void check_speed(double hp) const {
    if (hp > limits_.hprime_cap)
      throw SchemeFailure("front speed " + std::to_string(hp) + " exceeds cap " + std::to_string(limits_.hprime_cap));
  }

  void check_state(const std::vector<double>& u, const std::vector<double>& v) const {
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (!std::isfinite(u[j]) || !std::isfinite(v[j])) throw SchemeFailure("non-finite value at node " + std::to_string(j));
      if (u[j] < 0.0) throw PositivityViolation("u", j, u[j]);
      if (v[j] < 0.0) throw PositivityViolation("v", j, v[j]);
      if (u[j] > limits_.u_cap + cfg_.bound_tol)
        throw SchemeFailure("u = " + std::to_string(u[j]) + " exceeds a-priori cap " + std::to_string(limits_.u_cap));
      if (v[j] > limits_.v_cap + cfg_.bound_tol)
        throw SchemeFailure("v = " + std::to_string(v[j]) + " exceeds a-priori cap " + std::to_string(limits_.v_cap));
    }
  }

  void species_pass(const State& s, double h_new, double dt, std::vector<double>& u_out, std::vector<double>& v_out) {
    const double hp_used = (h_new - s.h) / dt;
    if (cfg_.straightening == Straightening::global_rescale) {
      const double kappa = h_new == s.h ? 0.0 : std::log(h_new / s.h) / dt;
      rescale_species(s.u, s.u, s.v, s.w, s.h, h_new, kappa, dt, detail::species_u(p_), u_out);
      rescale_species(s.v, s.u, s.v, s.w, s.h, h_new, kappa, dt, detail::species_v(p_), v_out);
    } else {
      if (std::abs(h_new - s.h_ref) > s.h_ref / 8.0)
        throw SchemeFailure("paper_zeta straightening left its validity window |h - h0| <= h0/8");
      zeta_species(s.u, s.u, s.v, s.w, s.h, h_new, s.h_ref, hp_used, dt, detail::species_u(p_), u_out);
      zeta_species(s.v, s.u, s.v, s.w, s.h, h_new, s.h_ref, hp_used, dt, detail::species_v(p_), v_out);
    }
  }

  // X_t = (D/h^2) X_xixi + kappa xi X_xi - (chi/h^2) (X W_xi)_xi + X (g - cu U - cv V)
  void rescale_species(std::span<const double> x, std::span<const double> u, std::span<const double> v,
                       std::span<const double> w, double h_old, double h_new, double kappa, double dt,
                       const detail::Species& sp, std::vector<double>& out) {
    const std::size_t n = x.size() - 1;
    const double dxi = 1.0 / static_cast<double>(n);
    const double inv_h2 = 1.0 / (h_old * h_old);
    const bool upwind = cfg_.advection == AdvectionScheme::upwind;

    flux_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double vel = sp.chi * (w[j + 1] - w[j]) / dxi * inv_h2;
      const double face = upwind ? (vel > 0.0 ? x[j] : x[j + 1]) : 0.5 * (x[j] + x[j + 1]);
      flux_[j] = vel * face;
    }

    rhs_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double left_flux = j == 0 ? -flux_[0] : flux_[j - 1];
      const double chemo = -(flux_[j] - left_flux) / dxi;
      const double s_mesh = kappa * static_cast<double>(j) * dxi;
      double mesh = 0.0;
      if (j > 0) {
        if (upwind)
          mesh = s_mesh >= 0.0 ? s_mesh * (x[j + 1] - x[j]) / dxi : s_mesh * (x[j] - x[j - 1]) / dxi;
        else
          mesh = s_mesh * (x[j + 1] - x[j - 1]) / (2.0 * dxi);
      }
      const double reaction = x[j] * (sp.growth - sp.coef_u * u[j] - sp.coef_v * v[j]);
      rhs_[j] = x[j] + dt * (chemo + mesh + reaction);
    }

    const double c = dt * sp.diffusivity / (h_new * h_new * dxi * dxi);
    system_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      system_.sub[j] = -c;
      system_.diag[j] = 1.0 + 2.0 * c;
      system_.sup[j] = -c;
    }
    system_.sup[0] = -2.0 * c;
    scratch_.resize(n);
    solve_tridiagonal<double>(system_, rhs_, scratch_);
    out.resize(n + 1);
    std::copy(rhs_.begin(), rhs_.end(), out.begin());
    out[n] = 0.0;
  }

  // X_t = D A X_yy + (D B + h' C - chi A W_y) X_y + X (g - lambda chi W + (chi k - cu) U + (chi l - cv) V)
  void zeta_species(std::span<const double> x, std::span<const double> u, std::span<const double> v,
                    std::span<const double> w, double h_old, double h_new, double h_ref, double hp, double dt,
                    const detail::Species& sp, std::vector<double>& out) {
    const std::size_t n = x.size() - 1;
    const double dy = h_ref / static_cast<double>(n);
    const bool upwind = cfg_.advection == AdvectionScheme::upwind;

    rhs_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double y = static_cast<double>(j) * dy;
      const auto c = straighten_coeffs(h_old, h_ref, y);
      double adv = 0.0;
      if (j > 0) {
        const double wy = (w[j + 1] - w[j - 1]) / (2.0 * dy);
        const double q = sp.diffusivity * c.B + hp * c.C - sp.chi * c.A * wy;
        if (upwind)
          adv = q >= 0.0 ? q * (x[j + 1] - x[j]) / dy : q * (x[j] - x[j - 1]) / dy;
        else
          adv = q * (x[j + 1] - x[j - 1]) / (2.0 * dy);
      }
      const double reaction = x[j] * (sp.growth - p_.lambda * sp.chi * w[j] + (sp.chi * p_.k - sp.coef_u) * u[j] +
                                      (sp.chi * p_.l - sp.coef_v) * v[j]);
      rhs_[j] = x[j] + dt * (adv + reaction);
    }

    system_.resize(n);
    const double base = dt * sp.diffusivity / (dy * dy);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = straighten_coeffs(h_new, h_ref, static_cast<double>(j) * dy).A;
      system_.sub[j] = -base * a;
      system_.diag[j] = 1.0 + 2.0 * base * a;
      system_.sup[j] = -base * a;
    }
    system_.sup[0] *= 2.0;
    scratch_.resize(n);
    solve_tridiagonal<double>(system_, rhs_, scratch_);
    out.resize(n + 1);
    std::copy(rhs_.begin(), rhs_.end(), out.begin());
    out[n] = 0.0;
  }

  // A W_yy + B W_y - lambda W + k U + l V = 0 with W_y = 0 at y = 0 and y = h0.
  void solve_chem_zeta(std::span<const double> u, std::span<const double> v, double h, double h_ref,
                       std::vector<double>& w) {
    const std::size_t n = u.size() - 1;
    const double dy = h_ref / static_cast<double>(n);
    zsystem_.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      const auto c = straighten_coeffs(h, h_ref, static_cast<double>(j) * dy);
      const double diff = c.A / (dy * dy);
      const double adv = c.B / (2.0 * dy);
      zsystem_.sub[j] = -(diff - adv);
      zsystem_.diag[j] = 2.0 * diff + p_.lambda;
      zsystem_.sup[j] = -(diff + adv);
      w[j] = p_.k * u[j] + p_.l * v[j];
    }
    // Ghost reflection at both ends; B vanishes there because zeta is flat.
    zsystem_.sup[0] = zsystem_.sub[0] + zsystem_.sup[0];
    zsystem_.sub[n] = zsystem_.sub[n] + zsystem_.sup[n];
    scratch_.resize(n + 1);
    solve_tridiagonal<double>(zsystem_, w, scratch_);
  }

  double zeta_speed(std::span<const double> u, std::span<const double> v, double h_ref) const {
    const double dy = h_ref / static_cast<double>(u.size() - 1);
    return -(p_.mu1 * end_slope(u, dy) + p_.mu2 * end_slope(v, dy));
  }

  ModelParams p_;
  SchemeConfig cfg_;
  StepLimits limits_;
  ChemSolver chem_;
  TridiagonalSystem<double> system_;
  TridiagonalSystem<double> zsystem_;
  std::vector<double> flux_, rhs_, scratch_, u_new_, v_new_;
};

/// Builds a State from raw reference-grid profiles (no admissibility check) and fills w, h'.
inline State make_state(double h0, std::vector<double> u, std::vector<double> v, const ModelParams& p,
                        const SchemeConfig& cfg) {
  if (u.size() != v.size() || u.size() < 4) throw InputError("make_state: profiles must share a grid of >= 4 nodes");
  if (!(h0 > 0.0)) throw InputError("make_state: h0 must be positive");
  State s;
  s.h = h0;
  s.h_ref = h0;
  s.u = std::move(u);
  s.v = std::move(v);
  SchemeConfig c = cfg;
  c.grid_n = s.intervals();
  Stepper(p, c, StepLimits{}).refresh(s);
  return s;
}

inline State make_state(const InitialData& init, const ModelParams& p, const SchemeConfig& cfg) {
  validate_initial_data(init);
  if (init.intervals() != cfg.grid_n)
    throw InputError("initial data has " + std::to_string(init.intervals()) + " intervals, scheme expects " +
                     std::to_string(cfg.grid_n));
  return make_state(init.h0, init.u0, init.v0, p, cfg);
}

/// One step with caps derived from `s` itself.
inline State step(const State& s, const ModelParams& p, const SchemeConfig& cfg) {
  State next = s;
  SchemeConfig c = cfg;
  c.grid_n = s.intervals();
  Stepper stepper(p, c, a_priori_limits(p, s, c));
  stepper.step(next);
  return next;
}

/// Physical positions of the reference nodes.
inline std::vector<double> physical_positions(const State& s, Straightening mode) {
  const std::size_t n = s.intervals();
  std::vector<double> x(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const double xi = static_cast<double>(j) / static_cast<double>(n);
    if (mode == Straightening::global_rescale) {
      x[j] = xi * s.h;
    } else {
      const double y = xi * s.h_ref;
      x[j] = y + cutoff_zeta(y, s.h_ref).value * (s.h - s.h_ref);
    }
  }
  x[n] = s.h;
  return x;
}

// ---------------------------------------------------------------------------
// Runs and diagnostics
// ---------------------------------------------------------------------------

struct DiagnosticSample {
  double t = 0.0;
  double h = 0.0;
  double hprime = 0.0;
  double sup_u = 0.0;
  double sup_v = 0.0;
  double min_u_probe = 0.0;
  double min_v_probe = 0.0;
  double mass_u = 0.0;
  double mass_v = 0.0;
  // Probe-window extrema used by the classifier.
  double max_u_probe = 0.0;
  double max_v_probe = 0.0;
  double min_w_probe = 0.0;
  double max_w_probe = 0.0;
  double min_density_probe = 0.0;  ///< min of k u + l v on the probe window
};

struct Snapshot {
  double t = 0.0;
  double h = 0.0;
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> w;
};

struct StopRule {
  double t_end = 50.0;
  double h_max = std::numeric_limits<double>::infinity();
  bool stop_on_vanishing = false;
  double vanish_sup = 1e-8;  ///< sup u + sup v below this ...
  double vanish_speed = 1e-8;  ///< ... and h' below this
};

struct RunOptions {
  StopRule stop;
  double probe_m = 1.0;
  double sample_dt = 0.1;
  std::vector<double> snapshot_times;
  bool capture_failure = false;  ///< record a scheme failure in the trajectory instead of throwing
};

struct Trajectory {
  std::vector<DiagnosticSample> samples;
  std::vector<Snapshot> snapshots;
  State final_state;
  StepLimits limits;
  std::string stop_reason;
  std::optional<std::string> failure;
};

inline DiagnosticSample diagnose(const State& s, const ModelParams& p, Straightening mode, double probe_m) {
  const auto x = physical_positions(s, mode);
  DiagnosticSample d;
  d.t = s.t;
  d.h = s.h;
  d.hprime = s.hprime;
  d.sup_u = detail::sup_norm(s.u);
  d.sup_v = detail::sup_norm(s.v);
  d.min_u_probe = d.min_v_probe = d.min_w_probe = d.min_density_probe = std::numeric_limits<double>::infinity();
  d.max_u_probe = d.max_v_probe = d.max_w_probe = -std::numeric_limits<double>::infinity();
  const double window = std::min(probe_m, s.h);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j > 0) {
      const double dx = x[j] - x[j - 1];
      d.mass_u += 0.5 * dx * (s.u[j] + s.u[j - 1]);
      d.mass_v += 0.5 * dx * (s.v[j] + s.v[j - 1]);
    }
    if (x[j] <= window * (1.0 + 1e-12) || j == 0) {
      d.min_u_probe = std::min(d.min_u_probe, s.u[j]);
      d.min_v_probe = std::min(d.min_v_probe, s.v[j]);
      d.max_u_probe = std::max(d.max_u_probe, s.u[j]);
      d.max_v_probe = std::max(d.max_v_probe, s.v[j]);
      d.min_w_probe = std::min(d.min_w_probe, s.w[j]);
      d.max_w_probe = std::max(d.max_w_probe, s.w[j]);
      d.min_density_probe = std::min(d.min_density_probe, p.k * s.u[j] + p.l * s.v[j]);
    }
  }
  return d;
}

inline Snapshot take_snapshot(const State& s, Straightening mode) {
  return {s.t, s.h, physical_positions(s, mode), s.u, s.v, s.w};
}

/**
 * Iterates step() from admissible initial data until the stop rule fires:
 * t >= t_end, h >= h_max, or (optionally) the vanishing proxy. Samples are
 * taken every sample_dt (rounded to whole steps), at the start and at the end.
 */
inline Trajectory run(const InitialData& init, const ModelParams& p, const SchemeConfig& cfg, const RunOptions& opt) {
  p.validate();
  cfg.validate();
  if (!(opt.stop.t_end >= 0.0)) throw InputError("t_end must be nonnegative");
  if (!(opt.probe_m > 0.0)) throw InputError("probe window must be positive");

  Trajectory traj;
  State s = make_state(init, p, cfg);
  traj.limits = a_priori_limits(p, s, cfg);
  Stepper stepper(p, cfg, traj.limits);

  const auto total_steps = static_cast<std::size_t>(std::llround(opt.stop.t_end / cfg.dt));
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.sample_dt / cfg.dt)));
  std::vector<std::size_t> snap_steps;
  for (double ts : opt.snapshot_times) snap_steps.push_back(static_cast<std::size_t>(std::llround(ts / cfg.dt)));

  const auto take = [&](std::size_t n) {
    if (std::find(snap_steps.begin(), snap_steps.end(), n) != snap_steps.end())
      traj.snapshots.push_back(take_snapshot(s, cfg.straightening));
  };

  traj.samples.push_back(diagnose(s, p, cfg.straightening, opt.probe_m));
  take(0);
  std::size_t n = 0;
  traj.stop_reason = "t_end";
  while (n < total_steps) {
    if (s.h >= opt.stop.h_max) {
      traj.stop_reason = "h_max";
      break;
    }
    try {
      stepper.step(s);
    } catch (const SchemeFailure& e) {
      if (!opt.capture_failure) throw;
      traj.failure = e.what();
      traj.stop_reason = "scheme_failure";
      break;
    }
    ++n;
    s.t = static_cast<double>(n) * cfg.dt;
    take(n);
    const bool last = n == total_steps;
    const bool vanished = opt.stop.stop_on_vanishing && detail::sup_norm(s.u) + detail::sup_norm(s.v) < opt.stop.vanish_sup &&
                          s.hprime < opt.stop.vanish_speed;
    if (n % stride == 0 || last || vanished || s.h >= opt.stop.h_max)
      traj.samples.push_back(diagnose(s, p, cfg.straightening, opt.probe_m));
    if (vanished) {
      traj.stop_reason = "vanishing";
      break;
    }
  }
  if (traj.stop_reason == "t_end" && s.h >= opt.stop.h_max) traj.stop_reason = "h_max";
  traj.final_state = std::move(s);
  return traj;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticSample>& samples) {
  const auto old = os.precision(17);
  os << "t,h,hprime,sup_u,sup_v,min_u_probe,min_v_probe,mass_u,mass_v\n";
  for (const auto& d : samples)
    os << d.t << ',' << d.h << ',' << d.hprime << ',' << d.sup_u << ',' << d.sup_v << ',' << d.min_u_probe << ','
       << d.min_v_probe << ',' << d.mass_u << ',' << d.mass_v << '\n';
  os.precision(old);
}

/// xi,u,v,w rows of one snapshot.
inline void write_snapshot_csv(std::ostream& os, const Snapshot& snap) {
  const auto old = os.precision(17);
  const std::size_t n = snap.u.size() - 1;
  os << "xi,u,v,w\n";
  for (std::size_t j = 0; j <= n; ++j)
    os << static_cast<double>(j) / static_cast<double>(n) << ',' << snap.u[j] << ',' << snap.v[j] << ',' << snap.w[j]
       << '\n';
  os.precision(old);
}

}  // namespace chemofront
