#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "cylfun.hpp"
#include "density.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "jacobi.hpp"
#include "model.hpp"
#include "util.hpp"
#include "word.hpp"

namespace hypcomp {

namespace detail {

/// Shared data for the pair-energy kernel e^{beta <xi,eta>} at parameter s:
/// beta = 2 (1-s) delta, the per-letter self-energy factors sigma solving
/// (I - B) sigma = kappa with B[a][b] = e^{beta l(b)} rho(a,b)^2 and
/// kappa(a) = 1 - sum_b rho(a,b)^2, and the total boundary self-energy.
struct EnergyContext {
  const TreeModel* m = nullptr;
  double s = 0.0;
  double beta = 0.0;
  std::vector<double> sigma;
  double e_bb = 0.0;  // E(whole boundary, whole boundary)
};

inline EnergyContext make_energy_context(double s, const Density& d) {
  if (!(s > 0.5) || !(s <= 1.0))
    throw ParameterOutOfRange("pair energies need s in (1/2, 1], got " +
                              std::to_string(s));
  const TreeModel& m = d.model;
  EnergyContext ctx;
  ctx.m = &m;
  ctx.s = s;
  ctx.beta = 2.0 * (1.0 - s) * m.delta;
  const int n = m.letters();
  std::vector<double> lhs(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a) {
    lhs[static_cast<std::size_t>(a) * n + a] = 1.0;
    double sq = 0.0;
    for (int b = 0; b < n; ++b) {
      double r = m.rho_at(static_cast<LetterCode>(a), static_cast<LetterCode>(b));
      sq += r * r;
      lhs[static_cast<std::size_t>(a) * n + b] -=
          std::exp(ctx.beta * m.ell(static_cast<LetterCode>(b))) * r * r;
    }
    rhs[static_cast<std::size_t>(a)] = 1.0 - sq;
  }
  ctx.sigma = solve_linear(lhs, rhs);
  double sq1 = 0.0;
  ctx.e_bb = 0.0;
  for (int b = 0; b < n; ++b) {
    double pb = m.mass1[static_cast<std::size_t>(b)];
    sq1 += pb * pb;
    ctx.e_bb += std::exp(ctx.beta * m.ell(static_cast<LetterCode>(b))) * pb *
                pb * ctx.sigma[static_cast<std::size_t>(b)];
  }
  ctx.e_bb += 1.0 - sq1;
  return ctx;
}

/// Cumulative weighted lengths L_j and cylinder masses M_j of the prefixes
/// w[0..j) for j = 0..|w| (L_0 = 0, M_0 = 1).
inline void prefix_profile(const ReducedWord& w, const TreeModel& m,
                           std::vector<double>& L, std::vector<double>& M) {
  L.assign(w.size() + 1, 0.0);
  M.assign(w.size() + 1, 1.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    L[j + 1] = L[j] + m.ell(w.letters[j]);
    M[j + 1] = M[j] * (j == 0 ? m.mass1[w.letters[0]]
                              : m.rho_at(w.letters[j - 1], w.letters[j]));
  }
}

/// Self energy E(C_u, C_u) = int int over C_u x C_u of e^{beta <xi,eta>}.
inline double energy_self(const EnergyContext& ctx, const ReducedWord& u) {
  if (u.empty()) return ctx.e_bb;
  std::vector<double> L, M;
  prefix_profile(u, *ctx.m, L, M);
  return std::exp(ctx.beta * L.back()) * M.back() * M.back() *
         ctx.sigma[u.back()];
}

/// General pair energy over two cylinders (equal, disjoint, or nested).
inline double energy_pair(const EnergyContext& ctx, const ReducedWord& a,
                          const ReducedWord& b) {
  if (a == b) return energy_self(ctx, a);
  std::size_t c = common_prefix_letters(a, b);
  if (c < a.size() && c < b.size()) {  // disjoint: constant Gromov product
    std::vector<double> La, Ma, Lb, Mb;
    prefix_profile(a, *ctx.m, La, Ma);
    prefix_profile(b, *ctx.m, Lb, Mb);
    return std::exp(ctx.beta * La[c]) * Ma.back() * Mb.back();
  }
  // Nested: let w be the shorter prefix, v the longer cylinder.
  const ReducedWord& v = a.size() > b.size() ? a : b;
  const std::size_t base = std::min(a.size(), b.size());
  std::vector<double> L, M;
  prefix_profile(v, *ctx.m, L, M);
  double acc = 0.0;
  for (std::size_t j = base; j < v.size(); ++j)
    acc += std::exp(ctx.beta * L[j]) * (M[j] - M[j + 1]);
  return M.back() * acc + energy_self(ctx, v);
}

}  // namespace detail

/// Pair energy E(v, w) = int_v int_w e^{beta <xi,eta>} dmu dmu at parameter
/// s in (1/2, 1] (beta = 2 (1-s) delta). Defined for every pair of
/// cylinders, including equal and nested ones and the whole boundary.
inline double pair_energy(const Cylinder& v, const Cylinder& w, double s,
                          const Density& d) {
  detail::EnergyContext ctx = detail::make_energy_context(s, d);
  return detail::energy_pair(ctx, v.prefix, w.prefix);
}

/// The positive-definite pairing Q_s(phi, psi) = int int phi(xi)
/// conj(psi(eta)) e^{beta <xi,eta>} dmu(xi) dmu(eta).
inline std::complex<double> qs_pair(const CylinderFunction& phi,
                                    const CylinderFunction& psi, double s,
                                    const Density& d) {
  detail::EnergyContext ctx = detail::make_energy_context(s, d);
  std::vector<CommonCell> cells = common_cells(phi, psi);
  const std::size_t n = cells.size();
  // Per-cell profile data so cross energies are O(common prefix).
  std::vector<double> mass(n), len(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> L, M;
    detail::prefix_profile(cells[i].prefix, d.model, L, M);
    mass[i] = M.back();
    len[i] = L.back();
  }
  std::complex<double> total{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double E;
      if (i == j) {
        E = detail::energy_self(ctx, cells[i].prefix);
      } else {
        std::size_t c = common_prefix_letters(cells[i].prefix, cells[j].prefix);
        double Lc = 0.0;
        for (std::size_t l = 0; l < c; ++l)
          Lc += d.model.ell(cells[i].prefix.letters[l]);
        E = std::exp(ctx.beta * Lc) * mass[i] * mass[j];
      }
      total += cells[i].a * std::conj(cells[j].b) * E;
    }
  }
  return total;
}

/// Gram matrix of the depth-n cylinder indicators under Q_s, basis in
/// lexicographic order of the prefixes. Depth is capped at 6 (and the
/// resulting dimension at 4000) to keep the dense eigensolve feasible.
inline SymmetricMatrix gram_matrix(int n, double s, const Density& d) {
  if (n < 1) throw ValidationError("gram matrix needs depth >= 1");
  if (n > 6)
    throw DimensionCap("gram depth capped at 6, got " + std::to_string(n));
  detail::EnergyContext ctx = detail::make_energy_context(s, d);
  std::vector<ReducedWord> basis = words_of_length(d.model.k, n);
  const std::size_t dim = basis.size();
  if (dim > 4000)
    throw DimensionCap("gram dimension " + std::to_string(dim) +
                       " exceeds the 4000 cap");
  std::vector<double> mass(dim), len(dim), diag(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    std::vector<double> L, M;
    detail::prefix_profile(basis[i], d.model, L, M);
    mass[i] = M.back();
    len[i] = L.back();
    diag[i] = std::exp(ctx.beta * len[i]) * mass[i] * mass[i] *
              ctx.sigma[basis[i].back()];
  }
  SymmetricMatrix G = SymmetricMatrix::zeros(static_cast<int>(dim));
  parallel_for(dim, [&](std::size_t i) {
    G.at(static_cast<int>(i), static_cast<int>(i)) = diag[i];
    for (std::size_t j = 0; j < i; ++j) {
      std::size_t c = common_prefix_letters(basis[i], basis[j]);
      double Lc = 0.0;
      for (std::size_t l = 0; l < c; ++l)
        Lc += d.model.ell(basis[i].letters[l]);
      G.at(static_cast<int>(i), static_cast<int>(j)) =
          std::exp(ctx.beta * Lc) * mass[i] * mass[j];
    }
  });
  return G;
}

/// Eigenvalue summary of the Q_s Gram matrices over a grid of parameters.
struct PositivityRow {
  double s = 0.0;
  int n = 0;
  int dim = 0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  double trace = 0.0;
  bool pass = false;  // min_eig >= -1e-9 * trace / dim
};

struct PositivityReport {
  std::vector<PositivityRow> rows;
  bool all_pass = true;
};

inline PositivityReport positivity_report(int n,
                                          const std::vector<double>& s_grid,
                                          const Density& d) {
  PositivityReport rep;
  rep.rows.resize(s_grid.size());
  parallel_for(s_grid.size(), [&](std::size_t i) {
    SymmetricMatrix G = gram_matrix(n, s_grid[i], d);
    Spectrum spec = sym_eigs(G);
    PositivityRow& r = rep.rows[i];
    r.s = s_grid[i];
    r.n = n;
    r.dim = G.n;
    r.min_eig = spec.min_eig();
    r.max_eig = spec.max_eig();
    r.trace = G.trace();
    r.pass = r.min_eig >= -1e-9 * r.trace / r.dim;
  });
  for (const PositivityRow& r : rep.rows) rep.all_pass = rep.all_pass && r.pass;
  return rep;
}

/// Enclosure of the transform of the constant function: lo <= (I_s 1)(xi) <=
/// hi for every xi in the cylinder (the whole boundary when the prefix is
/// empty). On uniform models the function is constant and lo == hi.
struct IsOneInterval {
  double lo = 0.0;
  double hi = 0.0;
};

inline IsOneInterval i_s_one(const Cylinder& w, double s, const Density& d) {
  detail::EnergyContext ctx = detail::make_energy_context(s, d);
  const TreeModel& m = d.model;
  const int n = m.letters();
  // rel(a) encloses the normalized tail integral over rays continuing after a
  // letter a: rel(a) = opt_b [ (1 - rho(a,b)) + e^{beta l(b)} rho(a,b) rel(b) ]
  // with opt = max for the upper end, min for the lower end.
  std::vector<double> sup(static_cast<std::size_t>(n), 1.0), inf = sup, nx(static_cast<std::size_t>(n));
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double>& rel = pass == 0 ? sup : inf;
    bool upper = pass == 0;
    for (int iter = 0; iter < 20000; ++iter) {
      double drift = 0.0;
      for (int a = 0; a < n; ++a) {
        double best = upper ? -1e300 : 1e300;
        for (int b = 0; b < n; ++b) {
          double r = m.rho_at(static_cast<LetterCode>(a),
                              static_cast<LetterCode>(b));
          if (r == 0.0) continue;
          double v = (1.0 - r) +
                     std::exp(ctx.beta * m.ell(static_cast<LetterCode>(b))) *
                         r * rel[static_cast<std::size_t>(b)];
          best = upper ? std::max(best, v) : std::min(best, v);
        }
        nx[static_cast<std::size_t>(a)] = best;
        drift = std::max(drift,
                         std::abs(best - rel[static_cast<std::size_t>(a)]));
      }
      rel = nx;
      if (drift <= 1e-15) break;
      if (iter == 19999)
        throw NoConvergence("tail enclosure iteration did not settle");
    }
  }
  IsOneInterval out;
  if (w.prefix.empty()) {
    out.lo = 1e300;
    out.hi = -1e300;
    for (int b = 0; b < n; ++b) {
      double pb = m.mass1[static_cast<std::size_t>(b)];
      double eb = std::exp(ctx.beta * m.ell(static_cast<LetterCode>(b)));
      out.lo = std::min(out.lo,
                        (1.0 - pb) + eb * pb * inf[static_cast<std::size_t>(b)]);
      out.hi = std::max(out.hi,
                        (1.0 - pb) + eb * pb * sup[static_cast<std::size_t>(b)]);
    }
    return out;
  }
  std::vector<double> L, M;
  detail::prefix_profile(w.prefix, m, L, M);
  double head = 0.0;
  for (std::size_t j = 0; j < w.prefix.size(); ++j)
    head += std::exp(ctx.beta * L[j]) * (M[j] - M[j + 1]);
  double scale = std::exp(ctx.beta * L.back()) * M.back();
  out.lo = head + scale * inf[w.prefix.back()];
  out.hi = head + scale * sup[w.prefix.back()];
  return out;
}

/// Boundary-to-orbit transform: Theta_s[phi](g.o) = int phi(xi)
/// e^{-delta (1-s) b_xi(g.o, o)} dmu(xi), evaluated exactly by splitting the
/// cells that straddle the geodesic to g.o.
inline std::complex<double> theta_eval(const CylinderFunction& phi,
                                       const ReducedWord& g, double s,
                                       const Density& d) {
  const TreeModel& m = d.model;
  const double e = (1.0 - s) * m.delta;
  const double Lg = m.word_length(g);
  std::complex<double> total{0.0, 0.0};
  for (const CommonCell& cell : cells_full(phi)) {
    if (cell.a == std::complex<double>(0.0, 0.0)) continue;
    double gp = 0.0;
    if (detail::gromov_cylinder_point(Cylinder{cell.prefix}, g, m, &gp)) {
      total += cell.a * std::exp(-e * (Lg - 2.0 * gp)) *
               cylinder_mass(d, cell.prefix);
      continue;
    }
    // cell.prefix is a strict prefix of word(g): walk the remaining geodesic,
    // peeling the side branches (constant horocycle value on each).
    std::vector<double> L, M;
    detail::prefix_profile(g, m, L, M);
    for (std::size_t j = cell.prefix.size(); j < g.size(); ++j) {
      ReducedWord side;
      side.letters.assign(g.letters.begin(),
                          g.letters.begin() + static_cast<std::ptrdiff_t>(j));
      for (int b = 0; b < m.letters(); ++b) {
        LetterCode lb = static_cast<LetterCode>(b);
        if (lb == g.letters[j]) continue;
        if (j > 0 && lb == letter_inverse(g.letters[j - 1], m.k)) continue;
        side.letters.push_back(lb);
        total += cell.a * std::exp(-e * (Lg - 2.0 * L[j])) *
                 cylinder_mass(d, side);
        side.letters.pop_back();
      }
    }
    total += cell.a * std::exp(-e * (-Lg)) * cylinder_mass(d, g);
  }
  return total;
}

/// Orbit matrix-coefficient transform: Xi_s[phi](g.o) = Q_s(phi, pi_s(g) 1).
inline std::complex<double> xi_eval(const CylinderFunction& phi,
                                    const ReducedWord& g, double s,
                                    const Density& d) {
  return qs_pair(phi, apply_pi(s, g, cf_one(phi.k), d), s, d);
}

/// Mass part of the decomposition of Q_s(phi, phi): sum over the level cells
/// of |value|^2 E(cell, whole boundary).
inline double ms_form(const CylinderFunction& phi, double s,
                      const Density& d) {
  detail::EnergyContext ctx = detail::make_energy_context(s, d);
  double total = 0.0;
  for (const CommonCell& c : cells_full(phi))
    total += std::norm(c.a) * detail::energy_pair(ctx, c.prefix, ReducedWord{});
  return total;
}

/// Dirichlet part: (1/2) sum over ordered pairs of distinct cells of
/// |v_i - v_j|^2 E(cell_i, cell_j).
inline double ds_form(const CylinderFunction& phi, double s,
                      const Density& d) {
  detail::EnergyContext ctx = detail::make_energy_context(s, d);
  std::vector<CommonCell> cells = cells_full(phi);
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (i == j) continue;
      double E = detail::energy_pair(ctx, cells[i].prefix, cells[j].prefix);
      total += 0.5 * std::norm(cells[i].a - cells[j].a) * E;
    }
  return total;
}

/// | Q_s(phi, phi) - (ms - ds) |: the two forms decompose the pairing
/// exactly, so this is at rounding level.
inline double decomposition_defect(const CylinderFunction& phi, double s,
                                   const Density& d) {
  std::complex<double> q = qs_pair(phi, phi, s, d);
  return std::abs(q - std::complex<double>(ms_form(phi, s, d) -
                                           ds_form(phi, s, d)));
}

/// Two independent computations of the optimal constant c with
/// Q_s <= c ||.||_mu^2 on the span of the depth-n indicators:
/// c_upper = lambda_max(D^{-1/2} G D^{-1/2}) directly, and
/// c_lower = lambda_max(G^{1/2} D^{-1} G^{1/2}) through the matrix square
/// root. The two matrices share their nonzero spectrum, so agreement of the
/// results validates both eigensolves.
struct SandwichConstants {
  double c_upper = 0.0;
  double c_lower = 0.0;
};

inline SandwichConstants sandwich_check(int n, double s, const Density& d) {
  SymmetricMatrix G = gram_matrix(n, s, d);
  const int dim = G.n;
  std::vector<ReducedWord> basis = words_of_length(d.model.k, n);
  std::vector<double> mass(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i)
    mass[static_cast<std::size_t>(i)] = cylinder_mass(d, basis[static_cast<std::size_t>(i)]);
  SymmetricMatrix S = SymmetricMatrix::zeros(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j)
      S.at(i, j) = G.get(i, j) / std::sqrt(mass[static_cast<std::size_t>(i)] *
                                           mass[static_cast<std::size_t>(j)]);
  SandwichConstants out;
  out.c_upper = sym_eigs(S).max_eig();

  std::vector<double> V;
  Spectrum gs = sym_eigs_vectors(G, V);
  std::vector<double> root(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int l = 0; l < dim; ++l) {
        double lam = gs.eigenvalues[static_cast<std::size_t>(l)];
        if (lam <= 0.0) continue;  // clamp rounding negatives
        acc += V[static_cast<std::size_t>(i) * dim + l] * std::sqrt(lam) *
               V[static_cast<std::size_t>(j) * dim + l];
      }
      root[static_cast<std::size_t>(i) * dim + j] = acc;
      root[static_cast<std::size_t>(j) * dim + i] = acc;
    }
  SymmetricMatrix B = SymmetricMatrix::zeros(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int l = 0; l < dim; ++l)
        acc += root[static_cast<std::size_t>(i) * dim + l] *
               root[static_cast<std::size_t>(l) * dim + j] /
               mass[static_cast<std::size_t>(l)];
      B.at(i, j) = acc;
    }
  out.c_lower = sym_eigs(B).max_eig();
  return out;
}

}  // namespace hypcomp
