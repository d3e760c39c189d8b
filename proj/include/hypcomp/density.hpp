#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "model.hpp"
#include "util.hpp"
#include "word.hpp"

namespace hypcomp {

/// Boundary measure of dimension delta: the unique measure whose cylinder
/// masses follow the first-letter weights and letter-to-letter transition
/// weights of the model. Masses are exact products, so conformality defects
/// below are at rounding level.
struct Density {
  TreeModel model;
};

inline Density make_density(const TreeModel& m) { return Density{m}; }

/// Finitely supported orbital measure at inverse temperature t > delta:
/// each group element g gets weight e^{-t d(o, g.o)} / W(t), where W(t) is
/// the full orbital sum (identity included).
struct FiniteDensity {
  TreeModel model;
  double t = 0.0;
  std::vector<double> cone_tail;  // per last letter: sum over continuations
  double total = 0.0;             // W(t)
};

inline FiniteDensity make_finite_density(const TreeModel& m, double t) {
  if (!(t > m.delta))
    throw ParameterAtOrBelowDelta("orbital series needs t > " +
                                  std::to_string(m.delta) + ", got " +
                                  std::to_string(t));
  const int q = 2 * m.k;
  // tail(a) = sum over nonempty reduced continuations after a letter a of
  // e^{-t L(w)}; linear system tail = A (1 + tail), A[a][b] = e^{-t l(b)}
  // for b != a^{-1}.
  std::vector<double> lhs(static_cast<std::size_t>(q) * q, 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(q), 0.0);
  for (int a = 0; a < q; ++a) {
    lhs[static_cast<std::size_t>(a) * q + a] = 1.0;
    for (int b = 0; b < q; ++b) {
      if (b == letter_inverse(static_cast<LetterCode>(a), m.k)) continue;
      double w = std::exp(-t * m.ell(static_cast<LetterCode>(b)));
      lhs[static_cast<std::size_t>(a) * q + b] -= w;
      rhs[static_cast<std::size_t>(a)] += w;
    }
  }
  FiniteDensity f;
  f.model = m;
  f.t = t;
  f.cone_tail = solve_linear(lhs, rhs);
  f.total = 1.0;
  for (int b = 0; b < q; ++b)
    f.total += std::exp(-t * m.ell(static_cast<LetterCode>(b))) *
               (1.0 + f.cone_tail[static_cast<std::size_t>(b)]);
  return f;
}

/// Mass of the boundary cylinder C_w under the conformal density.
inline double cylinder_mass(const Density& d, const ReducedWord& w) {
  if (w.letters.empty()) return 1.0;
  double mass = d.model.mass1[w.letters.front()];
  for (std::size_t i = 1; i < w.letters.size(); ++i)
    mass *= d.model.rho_at(w.letters[i - 1], w.letters[i]);
  return mass;
}

/// Mass of the orbit cone {g : word(g) has prefix w} under the normalized
/// orbital measure of the finite density.
inline double cone_mass_t(const FiniteDensity& f, const ReducedWord& w) {
  if (w.letters.empty()) return 1.0;
  double L = f.model.word_length(w);
  return std::exp(-f.t * L) * (1.0 + f.cone_tail[w.letters.back()]) / f.total;
}

inline double cylinder_mass(const Density& d, const Cylinder& w) {
  return cylinder_mass(d, w.prefix);
}

inline double cone_mass_t(const FiniteDensity& f, const Cylinder& w) {
  return cone_mass_t(f, w.prefix);
}

/// Radon-Nikodym derivative d(g_* mu)/d mu on the cylinder C_w, i.e.
/// e^{-delta * busemann}, defined when the horocycle value is constant on the
/// cylinder (depth(w) >= |word(g)|, else DepthTooShallow).
inline double rn_derivative(const Density& d, const ReducedWord& g,
                            const Cylinder& w) {
  double b = busemann_on_cylinder(w, g, d.model);
  return std::exp(-d.model.delta * b);
}

/// Exhaustive check of the conformal transformation rule at a fixed cell
/// depth: for every cell C_w of the given letter depth, the push-forward mass
/// mu(g^{-1} C_w) must equal rn(g, C_w) * mu(C_w), and the derivative must
/// integrate to one.
struct ConformalityReport {
  double max_cell_defect = 0.0;
  double total_mass_defect = 0.0;
  int cells = 0;
  bool pass = false;
};

inline ConformalityReport verify_conformality(const Density& d,
                                              const ReducedWord& g,
                                              int depth) {
  const int glen = static_cast<int>(g.letters.size());
  if (depth < glen + 1)
    throw DepthTooShallow("conformality check needs cell depth >= " +
                          std::to_string(glen + 1) + ", got " +
                          std::to_string(depth));
  ReducedWord ginv = inverse(g, d.model.k);
  ConformalityReport rep;
  double total = 0.0;
  for (const ReducedWord& w : words_of_length(d.model.k, depth)) {
    Cylinder cw{w};
    double rn = rn_derivative(d, g, cw);
    double mass = cylinder_mass(d, w);
    double image_mass = 0.0;
    for (const Cylinder& piece : map_cylinder(ginv, cw, d.model.k))
      image_mass += cylinder_mass(d, piece.prefix);
    rep.max_cell_defect =
        std::max(rep.max_cell_defect, std::abs(image_mass - rn * mass));
    total += rn * mass;
    ++rep.cells;
  }
  rep.total_mass_defect = std::abs(total - 1.0);
  rep.pass = rep.max_cell_defect <= 1e-12 && rep.total_mass_defect <= 1e-12;
  return rep;
}

/// Shadow-versus-ball-mass comparison: ratios
/// mu(shadow(g, rho)) / (e^{delta rho} e^{-delta d(o, g.o)}) over all group
/// elements with 1 <= |word(g)| <= Lmax.
struct ShadowLemmaReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  int count = 0;
  std::vector<double> distinct_ratios;  // sorted, deduplicated at 1e-12
};

inline ShadowLemmaReport shadow_lemma_ratio(const Density& d, double rho,
                                            int Lmax) {
  if (Lmax < 1) throw ValidationError("shadow comparison needs Lmax >= 1");
  ShadowLemmaReport rep;
  std::vector<double> ratios;
  for (int L = 1; L <= Lmax; ++L)
    for (const ReducedWord& g : words_of_length(d.model.k, L)) {
      double mass = 0.0;
      for (const Cylinder& c : shadow(g, rho, d.model))
        mass += cylinder_mass(d, c.prefix);
      double ratio = mass / (std::exp(d.model.delta * rho) *
                             std::exp(-d.model.delta * d.model.word_length(g)));
      ratios.push_back(ratio);
    }
  rep.count = static_cast<int>(ratios.size());
  std::sort(ratios.begin(), ratios.end());
  rep.min_ratio = ratios.front();
  rep.max_ratio = ratios.back();
  for (double r : ratios)
    if (rep.distinct_ratios.empty() ||
        r - rep.distinct_ratios.back() > 1e-12)
      rep.distinct_ratios.push_back(r);
  return rep;
}

}  // namespace hypcomp
