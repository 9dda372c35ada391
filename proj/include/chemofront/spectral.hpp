#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>

#include "chemofront/errors.hpp"
#include "chemofront/model_params.hpp"

namespace chemofront {

/**
 * Principal eigenvalues of d0 phi'' + c phi' + a0 phi = lambda phi.
 *
 *  - neumann_dirichlet:   0 < x < len,    phi'(0) = phi(len) = 0
 *  - dirichlet_dirichlet: -len < x < len, phi(-len) = phi(len) = 0
 *
 * Both share the closed form a0 - pi^2 d0 / (4 len^2) - c^2 / (4 d0). For
 * the Dirichlet-Dirichlet problem it is exact for every c; for the
 * Neumann-Dirichlet problem it is exact only at c = 0 (the Neumann end turns
 * into a Robin end under the exp(-c x / 2 d0) substitution).
 */
enum class EigenProblem { neumann_dirichlet, dirichlet_dirichlet };

inline std::string_view to_string(EigenProblem k) {
  return k == EigenProblem::neumann_dirichlet ? "neumann_dirichlet" : "dirichlet_dirichlet";
}

struct SpectralResult {
  EigenProblem kind = EigenProblem::neumann_dirichlet;
  double d0 = 1.0;
  double c = 0.0;
  double a0 = 1.0;
  double length = 1.0;
  double value = 0.0;
};

namespace detail {

inline void check_spectral_inputs(double d0, double len) {
  if (!(d0 > 0.0)) throw InputError("diffusivity d0 must be positive");
  if (!(len > 0.0)) throw InputError("length must be positive");
}

inline double closed_form_eigenvalue(double d0, double c, double a0, double len) {
  check_spectral_inputs(d0, len);
  return a0 - std::numbers::pi * std::numbers::pi * d0 / (4.0 * len * len) - c * c / (4.0 * d0);
}

}  // namespace detail

/// Neumann-Dirichlet eigenvalue without advection. `len` may be +inf.
inline double lambda_p(double d0, double a0, double len) { return detail::closed_form_eigenvalue(d0, 0.0, a0, len); }

inline double lambda_p1(double d0, double c, double a0, double len) {
  return detail::closed_form_eigenvalue(d0, c, a0, len);
}

/// Dirichlet-Dirichlet eigenvalue on (-len, len).
inline double lambda_p2(double d0, double c, double a0, double len) {
  return detail::closed_form_eigenvalue(d0, c, a0, len);
}

inline SpectralResult evaluate_eigenvalue(EigenProblem kind, double d0, double c, double a0, double len) {
  const double value = kind == EigenProblem::neumann_dirichlet ? lambda_p1(d0, c, a0, len) : lambda_p2(d0, c, a0, len);
  return {kind, d0, c, a0, len, value};
}

/// Unique length at which the eigenvalue crosses zero. Throws NeverPositive
/// when a0 <= c^2 / (4 d0).
inline double critical_length(double d0, double c, double a0,
                              EigenProblem variant = EigenProblem::neumann_dirichlet) {
  (void)variant;  // identical closed form for both problems
  if (!(d0 > 0.0)) throw InputError("diffusivity d0 must be positive");
  const double limit = a0 - c * c / (4.0 * d0);
  if (!(limit > 0.0)) throw NeverPositive("never positive: a0 <= c^2/(4 d0), no finite critical length");
  return 0.5 * std::numbers::pi * std::sqrt(d0 / limit);
}

/// Bisection on the sign of the closed-form eigenvalue; cross-check for critical_length.
inline double critical_length_bisect(double d0, double c, double a0, double tol = 1e-15) {
  if (!(d0 > 0.0)) throw InputError("diffusivity d0 must be positive");
  if (!(a0 - c * c / (4.0 * d0) > 0.0)) throw NeverPositive("never positive: a0 <= c^2/(4 d0), no finite critical length");
  double hi = 1.0;
  while (lambda_p1(d0, c, a0, hi) <= 0.0) hi *= 2.0;
  double lo = hi;
  while (lambda_p1(d0, c, a0, lo) > 0.0) lo *= 0.5;
  for (int it = 0; it < 400 && hi - lo > tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lambda_p1(d0, c, a0, mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// l* = min(l*_{1,1}, l*_{d,r}): vanishing can only happen with h_inf <= l*.
inline double dichotomy_threshold(const ModelParams& p) {
  return std::min(critical_length(1.0, 0.0, 1.0), critical_length(p.d, 0.0, p.r));
}

}  // namespace chemofront
