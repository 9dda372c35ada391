#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <vector>

#include "chemofront/errors.hpp"
#include "chemofront/model_params.hpp"
#include "chemofront/tridiagonal.hpp"

namespace chemofront {

/// Chemical concentration on the reference grid xi_j = j/N of the physical domain [0, h].
struct ChemField {
  std::vector<double> w;
  double h = 1.0;

  std::size_t intervals() const { return w.size() - 1; }
};

/**
 * Solves (1/h^2) w_xixi - lambda w + k u + l v = 0 on xi in [0, 1] with
 * w_xi = 0 at both ends (ghost nodes), by Thomas elimination.
 *
 * One instance owns its scratch buffers and may be reused by a single
 * stepper; it is not shareable between threads.
 */
class ChemSolver {
 public:
  /// Writes w into `w` (size N+1). Returns the max-norm residual of the discrete equations when `check` is set.
  double solve(std::span<const double> u, std::span<const double> v, double h, const ModelParams& p,
               std::span<double> w, bool check = true) {
    const std::size_t nodes = u.size();
    if (nodes < 3 || v.size() != nodes || w.size() != nodes) throw InputError("solve_chem: inconsistent grid sizes");
    if (!(h > 0.0) || !std::isfinite(h)) throw InputError("solve_chem: domain length must be positive and finite");
    const std::size_t n = nodes - 1;
    const double dxi = 1.0 / static_cast<double>(n);
    const double c = 1.0 / (h * h * dxi * dxi);

    if (system_.size() != nodes) {
      system_.resize(nodes);
      scratch_.assign(nodes, 0.0);
    }
    for (std::size_t j = 0; j < nodes; ++j) {
      const double f = p.k * u[j] + p.l * v[j];
      if (!std::isfinite(f)) throw InputError("solve_chem: non-finite source at node " + std::to_string(j));
      w[j] = f;
      system_.diag[j] = 2.0 * c + p.lambda;
      system_.sub[j] = -c;
      system_.sup[j] = -c;
    }
    system_.sup[0] = -2.0 * c;
    system_.sub[n] = -2.0 * c;
    solve_tridiagonal<double>(system_, w, scratch_);

    if (!check) return 0.0;
    double residual = 0.0;
    double scale = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const double f = p.k * u[j] + p.l * v[j];
      double lhs = system_.diag[j] * w[j];
      if (j > 0) lhs += system_.sub[j] * w[j - 1];
      if (j < n) lhs += system_.sup[j] * w[j + 1];
      residual = std::max(residual, std::abs(lhs - f));
      scale = std::max(scale, std::abs(f) + (4.0 * c + p.lambda) * std::abs(w[j]));
    }
    if (residual > 1e-12 * std::max(scale, 1e-300) && residual > 0.0)
      throw SchemeFailure("solve_chem: residual " + std::to_string(residual) + " above tolerance");
    return residual;
  }

 private:
  TridiagonalSystem<double> system_;
  std::vector<double> scratch_;
};

inline ChemField solve_chem(std::span<const double> u, std::span<const double> v, double h, const ModelParams& p) {
  ChemField cf;
  cf.h = h;
  cf.w.assign(u.size(), 0.0);
  ChemSolver solver;
  solver.solve(u, v, h, p, cf.w);
  return cf;
}

/// Physical derivative w_x = w_xi / h: centered inside, second-order one-sided at the ends.
inline std::vector<double> chem_gradient(const ChemField& cf) {
  const std::size_t n = cf.intervals();
  const auto& w = cf.w;
  const double scale = static_cast<double>(n) / cf.h;
  std::vector<double> g(n + 1);
  g[0] = 0.5 * scale * (-3.0 * w[0] + 4.0 * w[1] - w[2]);
  for (std::size_t j = 1; j < n; ++j) g[j] = 0.5 * scale * (w[j + 1] - w[j - 1]);
  g[n] = 0.5 * scale * (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]);
  return g;
}

/// Debug dump: xi,u,v,w rows.
inline void write_chem_csv(std::ostream& os, std::span<const double> u, std::span<const double> v, const ChemField& cf) {
  const std::size_t n = cf.intervals();
  const auto old = os.precision(17);
  os << "xi,u,v,w\n";
  for (std::size_t j = 0; j <= n; ++j)
    os << static_cast<double>(j) / static_cast<double>(n) << ',' << u[j] << ',' << v[j] << ',' << cf.w[j] << '\n';
  os.precision(old);
}

}  // namespace chemofront
