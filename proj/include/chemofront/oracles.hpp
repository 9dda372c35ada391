#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "chemofront/elliptic.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/model_params.hpp"
#include "chemofront/spectral.hpp"
#include "chemofront/stepper.hpp"
#include "chemofront/tridiagonal.hpp"

namespace chemofront {

struct OdeState {
  double u = 0.0;
  double v = 0.0;
  double t = 0.0;
};

namespace detail {

template <class Rhs>
OdeState rk4_integrate(double u0, double v0, double t_end, double dt, Rhs rhs) {
  if (!(dt > 0.0)) throw InputError("ode: dt must be positive");
  if (!(t_end >= 0.0)) throw InputError("ode: T must be nonnegative");
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = steps == 0 ? 0.0 : t_end / static_cast<double>(steps);
  double u = u0, v = v0;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto [k1u, k1v] = rhs(u, v);
    const auto [k2u, k2v] = rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v);
    const auto [k3u, k3v] = rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v);
    const auto [k4u, k4v] = rhs(u + h * k3u, v + h * k3v);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return {u, v, t_end};
}

}  // namespace detail

/// RK4 for u' = u(1 - u - a v), v' = r v(1 - b u - v).
inline OdeState lv_ode_integrate(double u0, double v0, double a, double b, double r, double t_end, double dt) {
  if (u0 < 0.0 || v0 < 0.0) throw InputError("lv_ode_integrate: initial densities must be nonnegative");
  return detail::rk4_integrate(u0, v0, t_end, dt, [=](double u, double v) {
    return std::pair{u * (1.0 - u - a * v), r * v * (1.0 - b * u - v)};
  });
}

/// RK4 for u' = u(1 - (1 - k chi1) u), v' = v(r - (r - l chi2) v); limits (A1bar, A2bar).
inline OdeState decoupled_logistic(double u0, double v0, const ModelParams& p, double t_end, double dt) {
  detail::require_h1(p, "decoupled_logistic");
  const double su = 1.0 - p.k * p.chi1;
  const double sv = p.r - p.l * p.chi2;
  return detail::rk4_integrate(u0, v0, t_end, dt, [=](double u, double v) {
    return std::pair{u * (1.0 - su * u), v * (p.r - sv * v)};
  });
}

// ---------------------------------------------------------------------------
// Fixed-domain scalar Fisher-KPP
// ---------------------------------------------------------------------------

/// u_t = d0 u_xx + beta u_x + u (a - b u) on a fixed interval.
struct FisherKppCase {
  std::function<double(double)> initial;  ///< positive in the interior
  double d0 = 1.0;
  double beta = 0.0;  ///< constant drift
  double a = 1.0;
  double b = 1.0;
  double length = 1.0;  ///< [0, len] or (-len, len)
  EigenProblem bc = EigenProblem::neumann_dirichlet;
  double t_end = 100.0;
  double dt = 1e-2;
  std::size_t grid_n = 256;
};

struct FisherKppResult {
  std::vector<double> x;
  std::vector<double> u;

  double sup() const { return detail::sup_norm(u); }

  /// min of u over lo <= x <= hi.
  double min_over(double lo, double hi) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] >= lo - 1e-12 && x[j] <= hi + 1e-12) m = std::min(m, u[j]);
    return m;
  }
};

/// Implicit diffusion, explicit upwind drift and reaction, as in the stepper.
inline FisherKppResult fixed_fisher_kpp(const FisherKppCase& c) {
  if (!(c.d0 > 0.0) || !(c.length > 0.0)) throw InputError("fixed_fisher_kpp: d0 and len must be positive");
  if (!(c.dt > 0.0) || c.grid_n < 8) throw InputError("fixed_fisher_kpp: need dt > 0 and grid_n >= 8");
  if (!c.initial) throw InputError("fixed_fisher_kpp: missing initial profile");
  const std::size_t n = c.grid_n;
  const bool nd = c.bc == EigenProblem::neumann_dirichlet;
  const double x0 = nd ? 0.0 : -c.length;
  const double dx = (nd ? c.length : 2.0 * c.length) / static_cast<double>(n);

  FisherKppResult res;
  res.x.resize(n + 1);
  res.u.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    res.x[j] = x0 + dx * static_cast<double>(j);
    res.u[j] = c.initial(res.x[j]);
  }
  res.u[n] = 0.0;
  if (!nd) res.u[0] = 0.0;

  // Unknowns: j = 0..n-1 (Neumann-Dirichlet) or j = 1..n-1 (Dirichlet-Dirichlet).
  const std::size_t first = nd ? 0 : 1;
  const std::size_t m = n - first;
  double dt = c.dt;
  if (c.beta != 0.0) dt = std::min(dt, 0.5 * dx / std::abs(c.beta));
  const auto steps = static_cast<std::size_t>(std::ceil(c.t_end / dt - 1e-9));
  if (steps > 0) dt = c.t_end / static_cast<double>(steps);

  TridiagonalSystem<double> sys(m);
  const double k = dt * c.d0 / (dx * dx);
  for (std::size_t i = 0; i < m; ++i) {
    sys.sub[i] = -k;
    sys.diag[i] = 1.0 + 2.0 * k;
    sys.sup[i] = -k;
  }
  if (nd) sys.sup[0] = -2.0 * k;
  std::vector<double> rhs(m), scratch(m);

  auto& u = res.u;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = first + i;
      const double right = u[j + 1];
      const double left = j == 0 ? u[1] : u[j - 1];
      const double drift = c.beta >= 0.0 ? c.beta * (right - u[j]) / dx : c.beta * (u[j] - left) / dx;
      rhs[i] = u[j] + dt * (drift + u[j] * (c.a - c.b * u[j]));
    }
    solve_tridiagonal<double>(sys, rhs, scratch);
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::isfinite(rhs[i])) throw SchemeFailure("fixed_fisher_kpp: non-finite value");
      if (rhs[i] < 0.0) throw PositivityViolation("u", first + i, rhs[i]);
      u[first + i] = rhs[i];
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Discrete principal eigenvalue
// ---------------------------------------------------------------------------

/**
 * Largest eigenvalue of the centered finite-difference discretization of
 * d0 phi'' + c phi' + a0 phi with N intervals, by inverse iteration with the
 * shift a0 + 1 (every eigenvalue of the discrete operator lies below a0).
 */
inline double discrete_principal_eigenvalue(double d0, double c, double a0, double len, EigenProblem bc,
                                            std::size_t grid_n, int max_iter = 500, double tol = 1e-13) {
  if (grid_n < 64) throw InputError("discrete_principal_eigenvalue: need N >= 64");
  detail::check_spectral_inputs(d0, len);
  const bool nd = bc == EigenProblem::neumann_dirichlet;
  const double dx = (nd ? len : 2.0 * len) / static_cast<double>(grid_n);
  const std::size_t first = nd ? 0 : 1;
  const std::size_t m = grid_n - first;
  const double shift = a0 + 1.0;
  const double diff = d0 / (dx * dx);
  const double adv = c / (2.0 * dx);

  // (shift - L) in tridiagonal form.
  TridiagonalSystem<double> sys(m);
  for (std::size_t i = 0; i < m; ++i) {
    sys.sub[i] = -(diff - adv);
    sys.diag[i] = shift - a0 + 2.0 * diff;
    sys.sup[i] = -(diff + adv);
  }
  if (nd) sys.sup[0] = -2.0 * diff;  // ghost phi_{-1} = phi_1 cancels the advective part

  std::vector<double> x(m, 1.0), y(m), scratch(m);
  double estimate = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < max_iter; ++it) {
    std::copy(x.begin(), x.end(), y.begin());
    solve_tridiagonal<double>(sys, y, scratch);
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      xy += x[i] * y[i];
      xx += x[i] * x[i];
      yy += y[i] * y[i];
    }
    const double next = shift - xx / xy;
    const double norm = std::sqrt(yy);
    for (std::size_t i = 0; i < m; ++i) x[i] = y[i] / norm;
    if (std::abs(next - estimate) <= tol * std::max(1.0, std::abs(next))) return next;
    estimate = next;
  }
  throw SchemeFailure("discrete_principal_eigenvalue: inverse iteration did not converge");
}

// ---------------------------------------------------------------------------
// Fully explicit reference stepper
// ---------------------------------------------------------------------------

struct ReferenceConfig {
  std::size_t grid_n = 512;
  double dt = 0.0;  ///< 0 selects 0.25 (dxi h0)^2 / max(1, d)
  double t_end = 0.5;
  double sample_dt = 0.1;
  double probe_m = 1.0;
};

inline double reference_stable_dt(const ModelParams& p, double h_min, std::size_t grid_n) {
  const double dxi = 1.0 / static_cast<double>(grid_n);
  return 0.25 * (dxi * h_min) * (dxi * h_min) / std::max(1.0, p.d);
}

/**
 * Forward Euler on every term of the front-fixed system with central
 * chemotaxis fluxes and central mesh advection, Euler for h. Independent of
 * the Stepper class; only the chemical solve is shared. Intended on a grid
 * twice as fine as the scheme under test.
 */
inline Trajectory reference_explicit_run(const InitialData& init, const ModelParams& p, const ReferenceConfig& cfg) {
  p.validate();
  if (init.u0.size() != init.v0.size() || init.u0.back() != 0.0 || init.v0.back() != 0.0)
    throw InputError("reference_explicit_run: profiles must share a grid and vanish at the front");
  if (init.intervals() != cfg.grid_n) throw InputError("reference_explicit_run: initial data grid mismatch");
  const std::size_t n = cfg.grid_n;
  const double dxi = 1.0 / static_cast<double>(n);
  const double stable = reference_stable_dt(p, init.h0, n);
  double dt = cfg.dt > 0.0 ? cfg.dt : stable;
  if (dt > stable * (1.0 + 1e-12)) throw InputError("reference_explicit_run: dt above the explicit stability bound");
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt - 1e-9));
  if (steps > 0) dt = cfg.t_end / static_cast<double>(steps);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample_dt / dt)));

  State s;
  s.h = s.h_ref = init.h0;
  s.u = init.u0;
  s.v = init.v0;
  s.w.assign(n + 1, 0.0);
  ChemSolver chem;
  const auto front_speed = [&](const State& st) { return stefan_speed(st.u, st.v, st.h, p); };
  chem.solve(s.u, s.v, s.h, p, s.w, false);
  s.hprime = front_speed(s);

  Trajectory traj;
  traj.samples.push_back(diagnose(s, p, Straightening::global_rescale, cfg.probe_m));
  traj.stop_reason = "t_end";
  std::vector<double> un(n + 1, 0.0), vn(n + 1, 0.0);

  const auto update = [&](const std::vector<double>& x, double diffusivity, double chi, double growth, double cu,
                          double cv, std::vector<double>& out) {
    const double inv_h2 = 1.0 / (s.h * s.h);
    const double mesh_rate = s.hprime / s.h;
    for (std::size_t j = 0; j < n; ++j) {
      const double xl = j == 0 ? x[1] : x[j - 1];
      const double wl = j == 0 ? s.w[1] : s.w[j - 1];
      const double diff = diffusivity * inv_h2 * (x[j + 1] - 2.0 * x[j] + xl) / (dxi * dxi);
      const double f_right = chi * inv_h2 * 0.5 * (x[j] + x[j + 1]) * (s.w[j + 1] - s.w[j]) / dxi;
      const double f_left = chi * inv_h2 * 0.5 * (x[j] + xl) * (s.w[j] - wl) / dxi;
      const double chemo = -(f_right - f_left) / dxi;
      const double mesh = mesh_rate * static_cast<double>(j) * dxi * (x[j + 1] - xl) / (2.0 * dxi);
      const double react = x[j] * (growth - cu * s.u[j] - cv * s.v[j]);
      out[j] = x[j] + dt * (diff + chemo + mesh + react);
      if (!std::isfinite(out[j])) throw SchemeFailure("reference_explicit_run: non-finite value");
      if (out[j] < 0.0) throw SchemeFailure("reference_explicit_run: positivity lost (unstable step)");
    }
    out[n] = 0.0;
  };

  for (std::size_t i = 1; i <= steps; ++i) {
    update(s.u, 1.0, p.chi1, 1.0, 1.0, p.a, un);
    update(s.v, p.d, p.chi2, p.r, p.r * p.b, p.r, vn);
    s.h += dt * s.hprime;
    s.u.swap(un);
    s.v.swap(vn);
    chem.solve(s.u, s.v, s.h, p, s.w, false);
    s.hprime = front_speed(s);
    if (!std::isfinite(s.hprime)) throw SchemeFailure("reference_explicit_run: non-finite front speed");
    s.t = static_cast<double>(i) * dt;
    ++s.steps;
    if (i % stride == 0 || i == steps) traj.samples.push_back(diagnose(s, p, Straightening::global_rescale, cfg.probe_m));
  }
  traj.final_state = std::move(s);
  return traj;
}

}  // namespace chemofront
