#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace hypcomp {

/// Number of worker threads to use for batch work. Controlled by the
/// HYPCOMP_THREADS environment variable (values below 1 mean 1); defaults to
/// the hardware concurrency capped at 8.
inline int thread_budget() {
  if (const char* env = std::getenv("HYPCOMP_THREADS")) {
    int n = std::atoi(env);
    return n < 1 ? 1 : n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  return static_cast<int>(hw > 8 ? 8 : hw);
}

/// Run fn(i) for i in [0, n). Work items must be independent and write only
/// to their own slots; the partition of indices over threads never affects
/// results, so output is identical for any thread count.
template <typename F>
inline void parallel_for(std::size_t n, F&& fn) {
  int threads = thread_budget();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t t = static_cast<std::size_t>(threads);
  if (t > n) t = n;
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::size_t chunk = (n + t - 1) / t;
  for (std::size_t w = 0; w < t; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn]() {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Solve the dense linear system A x = b (A row-major n x n) by Gaussian
/// elimination with partial pivoting. Throws NoConvergence if A is
/// numerically singular. Intended for tiny systems (n <= 8 here).
inline std::vector<double> solve_linear(std::vector<double> A,
                                        std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(A[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double v = std::abs(A[r * n + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-300)
      throw NoConvergence("linear solve: pivot " + std::to_string(col) +
                          " is numerically zero");
    if (piv != col) {
      for (std::size_t c = col; c < n; ++c)
        std::swap(A[piv * n + c], A[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    double d = A[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double acc = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) acc -= A[ri * n + c] * x[c];
    x[ri] = acc / A[ri * n + ri];
  }
  return x;
}

/// Format a double with 9 significant digits (the CSV convention used by all
/// emitted reports; chosen for byte-stable output across runs).
inline std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace hypcomp
