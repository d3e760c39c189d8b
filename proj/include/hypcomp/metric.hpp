#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "jacobi.hpp"
#include "model.hpp"
#include "word.hpp"

namespace hypcomp {

/// A finite set of orbit points together with a symmetric, zero-diagonal
/// kernel on them (typically the tree metric). The validation rules are
/// enforced on construction helpers and rechecked by the tests below.
struct MetricSample {
  std::vector<ReducedWord> points;
  std::vector<double> kernel;  // row-major |points| x |points|

  int size() const { return static_cast<int>(points.size()); }
  double at(int i, int j) const {
    return kernel[static_cast<std::size_t>(i) * points.size() + j];
  }
};

namespace detail {

inline void validate_kernel(const MetricSample& s) {
  const int n = s.size();
  if (static_cast<std::size_t>(n) * n != s.kernel.size())
    throw ValidationError("kernel matrix is not square over the point list");
  for (int i = 0; i < n; ++i) {
    if (s.at(i, i) != 0.0)
      throw NonzeroDiagonal("kernel diagonal entry " + std::to_string(i) +
                            " is " + std::to_string(s.at(i, i)));
    for (int j = 0; j < i; ++j)
      if (s.at(i, j) != s.at(j, i))
        throw AsymmetricKernel("kernel entries (" + std::to_string(i) + "," +
                               std::to_string(j) + ") differ across the diagonal");
  }
}

}  // namespace detail

/// Sample whose kernel is the tree metric on the given orbit points.
inline MetricSample metric_sample_from_words(std::vector<ReducedWord> points,
                                             const TreeModel& m) {
  MetricSample s;
  s.points = std::move(points);
  const int n = s.size();
  s.kernel.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      double d = distance(s.points[static_cast<std::size_t>(i)],
                          s.points[static_cast<std::size_t>(j)], m);
      s.kernel[static_cast<std::size_t>(i) * n + j] = d;
      s.kernel[static_cast<std::size_t>(j) * n + i] = d;
    }
  return s;
}

/// Parse a metric sample from CSV: a header row of word labels ("e" or the
/// empty string denote the identity) followed by the square kernel matrix.
/// Throws ParseError on malformed input and the kernel validation errors on
/// asymmetric or nonzero-diagonal data.
inline MetricSample metric_sample_from_csv(const std::string& text, int k) {
  std::vector<std::vector<std::string>> cells;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) row.push_back(field);
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw ParseError("metric CSV is empty");
  MetricSample s;
  for (const std::string& label : cells.front())
    s.points.push_back(parse_word(label, k));
  const std::size_t n = s.points.size();
  if (cells.size() != n + 1)
    throw ParseError("metric CSV needs " + std::to_string(n) +
                     " data rows, found " + std::to_string(cells.size() - 1));
  s.kernel.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (cells[i + 1].size() != n)
      throw ParseError("metric CSV row " + std::to_string(i + 1) +
                       " has wrong width");
    for (std::size_t j = 0; j < n; ++j) {
      try {
        s.kernel[i * n + j] = std::stod(cells[i + 1][j]);
      } catch (const std::exception&) {
        throw ParseError("metric CSV entry '" + cells[i + 1][j] +
                         "' is not a number");
      }
    }
  }
  detail::validate_kernel(s);
  return s;
}

/// Result of the conditional-negativity test: the kernel matrix is projected
/// onto the mean-zero subspace (P = I - ones/n on both sides) and the largest
/// eigenvalue of the projected matrix is reported; the kernel is accepted as
/// conditionally negative when that eigenvalue is at most 1e-10.
struct ConditionalNegativityReport {
  double max_centered_eigenvalue = 0.0;
  bool pass = false;
};

inline ConditionalNegativityReport check_conditionally_negative(
    const MetricSample& sample) {
  if (sample.size() < 2)
    throw ValidationError("conditional negativity needs at least 2 points");
  detail::validate_kernel(sample);
  const int n = sample.size();
  // Centered matrix PKP with P = I - (1/n) ones.
  std::vector<double> rowmean(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) rowmean[static_cast<std::size_t>(i)] += sample.at(i, j);
    rowmean[static_cast<std::size_t>(i)] /= n;
    total += rowmean[static_cast<std::size_t>(i)];
  }
  total /= n;
  SymmetricMatrix M = SymmetricMatrix::zeros(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      M.at(i, j) = sample.at(i, j) - rowmean[static_cast<std::size_t>(i)] -
                   rowmean[static_cast<std::size_t>(j)] + total;
  Spectrum spec = sym_eigs(M);
  ConditionalNegativityReport r;
  r.max_centered_eigenvalue = spec.max_eig();
  r.pass = r.max_centered_eigenvalue <= 1e-10;
  return r;
}

/// Positive-definiteness of the exponentiated kernels e^{-t k}: for each t in
/// the grid, reports the minimum eigenvalue of [e^{-t k(x_i, x_j)}]; pass
/// means it is at least -1e-10. Requires the sample to pass the
/// conditional-negativity test first (ValidationError otherwise).
struct SchoenbergRow {
  double t = 0.0;
  double min_eigenvalue = 0.0;
  bool pass = false;
};

inline std::vector<SchoenbergRow> check_schoenberg(
    const MetricSample& sample, const std::vector<double>& t_grid) {
  ConditionalNegativityReport cn = check_conditionally_negative(sample);
  if (!cn.pass)
    throw ValidationError(
        "sample kernel is not conditionally negative (centered eigenvalue " +
        std::to_string(cn.max_centered_eigenvalue) + ")");
  const int n = sample.size();
  std::vector<SchoenbergRow> rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) {
    if (!(t >= 0.0))
      throw ValidationError("Schoenberg grid values must be nonnegative");
    SymmetricMatrix M = SymmetricMatrix::zeros(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) M.at(i, j) = std::exp(-t * sample.at(i, j));
    Spectrum spec = sym_eigs(M);
    SchoenbergRow r;
    r.t = t;
    r.min_eigenvalue = spec.min_eig();
    r.pass = r.min_eigenvalue >= -1e-10;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hypcomp
