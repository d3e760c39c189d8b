#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace hypcomp {

/// Dense real symmetric matrix stored as the packed lower triangle.
struct SymmetricMatrix {
  int n = 0;
  std::vector<double> a;  // a[i(i+1)/2 + j] = M_ij for j <= i

  static SymmetricMatrix zeros(int n) {
    SymmetricMatrix m;
    m.n = n;
    m.a.assign(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0);
    return m;
  }
  double& at(int i, int j) {
    if (j > i) std::swap(i, j);
    return a[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
  double get(int i, int j) const {
    if (j > i) std::swap(i, j);
    return a[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += get(i, i);
    return t;
  }
  double frobenius() const {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        double v = get(i, j);
        s += (i == j ? 1.0 : 2.0) * v * v;
      }
    return std::sqrt(s);
  }
};

/// Eigenvalue result of the cyclic Jacobi iteration.
struct Spectrum {
  std::vector<double> eigenvalues;  // sorted ascending
  long rotations = 0;
  double offdiag_residual = 0.0;  // final off-diagonal Frobenius norm

  double min_eig() const { return eigenvalues.front(); }
  double max_eig() const { return eigenvalues.back(); }
};

namespace detail {

/// Cyclic Jacobi on a full working copy. If V is non-null it accumulates the
/// rotations so that columns of V are the eigenvectors (V row-major n x n,
/// column k = eigenvector of eigenvalues[k] after the final sort).
inline Spectrum jacobi_impl(const SymmetricMatrix& M, std::vector<double>* V) {
  const int n = M.n;
  if (n < 1) throw ValidationError("eigensolver needs a nonempty matrix");
  std::vector<double> A(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A[static_cast<std::size_t>(i) * n + j] = M.get(i, j);
  if (V) {
    V->assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) (*V)[static_cast<std::size_t>(i) * n + i] = 1.0;
  }
  const double normF = M.frobenius();
  const double target = 1e-12 * normF;
  // Rotations on entries below this threshold cannot lift the residual above
  // the target, so skipping them is lossless and speeds up late sweeps.
  const double skip = normF > 0.0 ? 1e-14 * normF / n : 0.0;

  auto offdiag = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        double v = A[static_cast<std::size_t>(i) * n + j];
        s += 2.0 * v * v;
      }
    return std::sqrt(s);
  };

  Spectrum spec;
  double off = offdiag();
  int sweep = 0;
  while (off > target) {
    if (sweep >= 30)
      throw NoConvergence("Jacobi did not reach residual " +
                          std::to_string(target) + " in 30 sweeps (residual " +
                          std::to_string(off) + ")");
    ++sweep;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = A[static_cast<std::size_t>(p) * n + q];
        if (std::abs(apq) <= skip) continue;
        double app = A[static_cast<std::size_t>(p) * n + p];
        double aqq = A[static_cast<std::size_t>(q) * n + q];
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double aip = A[static_cast<std::size_t>(i) * n + p];
          double aiq = A[static_cast<std::size_t>(i) * n + q];
          A[static_cast<std::size_t>(i) * n + p] = c * aip - s * aiq;
          A[static_cast<std::size_t>(i) * n + q] = s * aip + c * aiq;
        }
        for (int j = 0; j < n; ++j) {
          double apj = A[static_cast<std::size_t>(p) * n + j];
          double aqj = A[static_cast<std::size_t>(q) * n + j];
          A[static_cast<std::size_t>(p) * n + j] = c * apj - s * aqj;
          A[static_cast<std::size_t>(q) * n + j] = s * apj + c * aqj;
        }
        if (V) {
          for (int i = 0; i < n; ++i) {
            double vip = (*V)[static_cast<std::size_t>(i) * n + p];
            double viq = (*V)[static_cast<std::size_t>(i) * n + q];
            (*V)[static_cast<std::size_t>(i) * n + p] = c * vip - s * viq;
            (*V)[static_cast<std::size_t>(i) * n + q] = s * vip + c * viq;
          }
        }
        ++spec.rotations;
      }
    }
    off = offdiag();
  }
  spec.offdiag_residual = off;
  spec.eigenvalues.resize(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return A[static_cast<std::size_t>(x) * n + x] < A[static_cast<std::size_t>(y) * n + y];
  });
  for (int k = 0; k < n; ++k)
    spec.eigenvalues[static_cast<std::size_t>(k)] =
        A[static_cast<std::size_t>(order[k]) * n + order[k]];
  if (V) {
    std::vector<double> W(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        W[static_cast<std::size_t>(i) * n + k] =
            (*V)[static_cast<std::size_t>(i) * n + order[k]];
    V->swap(W);
  }
  return spec;
}

}  // namespace detail

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// sorted ascending. Stops when the off-diagonal Frobenius norm is at most
/// 1e-12 times the Frobenius norm of the input; throws NoConvergence after
/// 30 sweeps.
inline Spectrum sym_eigs(const SymmetricMatrix& M) {
  return detail::jacobi_impl(M, nullptr);
}

/// Same as sym_eigs but also accumulates eigenvectors: on return column k of
/// the row-major n x n matrix V is a unit eigenvector for eigenvalues[k].
inline Spectrum sym_eigs_vectors(const SymmetricMatrix& M,
                                 std::vector<double>& V) {
  return detail::jacobi_impl(M, &V);
}

}  // namespace hypcomp
