#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "chemofront/errors.hpp"

namespace chemofront {

/// Tridiagonal system in three-band storage. sub[0] and sup[n-1] are unused.
template <class T>
struct TridiagonalSystem {
  std::vector<T> sub;
  std::vector<T> diag;
  std::vector<T> sup;

  explicit TridiagonalSystem(std::size_t n = 0) : sub(n, T{}), diag(n, T{}), sup(n, T{}) {}

  std::size_t size() const { return diag.size(); }

  void resize(std::size_t n) {
    sub.assign(n, T{});
    diag.assign(n, T{});
    sup.assign(n, T{});
  }

  /// y = M x
  void apply(std::span<const T> x, std::span<T> y) const {
    const std::size_t n = size();
    assert(x.size() == n && y.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      T acc = diag[i] * x[i];
      if (i > 0) acc += sub[i] * x[i - 1];
      if (i + 1 < n) acc += sup[i] * x[i + 1];
      y[i] = acc;
    }
  }
};

/**
 * Thomas elimination, overwriting `rhs` with the solution. No pivoting:
 * intended for diagonally dominant M-matrices, for which it also preserves
 * the sign of a nonnegative right-hand side. `scratch` must hold n values.
 */
template <class T>
void solve_tridiagonal(const TridiagonalSystem<T>& m, std::span<T> rhs, std::span<T> scratch) {
  const std::size_t n = m.size();
  assert(rhs.size() == n && scratch.size() >= n);
  if (n == 0) return;
  T pivot = m.diag[0];
  if (pivot == T{}) throw SchemeFailure("singular tridiagonal system");
  rhs[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    scratch[i - 1] = m.sup[i - 1] / pivot;
    pivot = m.diag[i] - m.sub[i] * scratch[i - 1];
    if (pivot == T{}) throw SchemeFailure("singular tridiagonal system");
    rhs[i] = (rhs[i] - m.sub[i] * rhs[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

template <class T>
std::vector<T> solve_tridiagonal(const TridiagonalSystem<T>& m, std::vector<T> rhs) {
  std::vector<T> scratch(m.size());
  solve_tridiagonal<T>(m, std::span<T>(rhs), std::span<T>(scratch));
  return rhs;
}

}  // namespace chemofront
