#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "word.hpp"

namespace hypcomp {

/// Tree distance between the orbit points g.o and h.o: the weighted length of
/// the reduced form of g^{-1} h.
inline double distance(const ReducedWord& g, const ReducedWord& h,
                       const TreeModel& m) {
  std::size_t c = common_prefix_letters(g, h);
  double L = 0.0;
  for (std::size_t i = c; i < g.size(); ++i) L += m.ell(g.letters[i]);
  for (std::size_t i = c; i < h.size(); ++i) L += m.ell(h.letters[i]);
  return L;
}

/// Gromov product <g, h>_o = (d(g,o) + d(h,o) - d(g,h)) / 2. On the tree this
/// is exactly the weighted length of the longest common prefix of the two
/// words.
inline double gromov_product(const ReducedWord& g, const ReducedWord& h,
                             const TreeModel& m) {
  std::size_t c = common_prefix_letters(g, h);
  double L = 0.0;
  for (std::size_t i = 0; i < c; ++i) L += m.ell(g.letters[i]);
  return L;
}

/// Constant value of the boundary Gromov product <xi, eta>_o over xi in v,
/// eta in w. Defined only for disjoint cylinders: if one prefix extends the
/// other the product is not constant and NestedCylinders is thrown.
inline double cylinder_gromov(const Cylinder& v, const Cylinder& w,
                              const TreeModel& m) {
  if (!cylinders_disjoint(v, w))
    throw NestedCylinders("boundary Gromov product is not constant on nested cylinders '" +
                          v.prefix.to_string(m.k) + "', '" + w.prefix.to_string(m.k) + "'");
  return gromov_product(v.prefix, w.prefix, m);
}

namespace detail {

/// Gromov product <xi, g.o>_o for xi in C_w, when it is decided by the prefix
/// alone (i.e. constant over the cylinder). Returns false if the prefix is a
/// strict prefix of word(g), in which case the product still depends on how
/// the ray continues.
inline bool gromov_cylinder_point(const Cylinder& w, const ReducedWord& g,
                                  const TreeModel& m, double* value) {
  std::size_t c = common_prefix_letters(w.prefix, g);
  if (c == g.size()) {  // word(g) lies on every ray of the cylinder
    *value = m.word_length(g);
    return true;
  }
  if (c < w.prefix.size()) {  // rays branch off g's geodesic inside the prefix
    double L = 0.0;
    for (std::size_t i = 0; i < c; ++i) L += m.ell(w.prefix.letters[i]);
    *value = L;
    return true;
  }
  return false;  // prefix is a strict prefix of word(g): undecided
}

}  // namespace detail

/// Busemann cocycle b_xi(g.o, o) = d(g.o, o) - 2 <xi, g.o>_o, constant over
/// xi in C_w once the letter-depth of w is at least the letter-length of g.
/// Throws DepthTooShallow below that depth.
inline double busemann_on_cylinder(const Cylinder& w, const ReducedWord& g,
                                   const TreeModel& m) {
  if (w.depth() < g.size())
    throw DepthTooShallow("cylinder depth " + std::to_string(w.depth()) +
                          " < word length " + std::to_string(g.size()));
  double gp = 0.0;
  detail::gromov_cylinder_point(w, g, m, &gp);  // always decided at this depth
  return m.word_length(g) - 2.0 * gp;
}

namespace detail {

inline void map_cylinder_rec(const ReducedWord& g, const ReducedWord& u, int k,
                             std::vector<Cylinder>& out) {
  if (g.empty()) {
    out.push_back(Cylinder{u});
    return;
  }
  const ReducedWord ginv = inverse(g, k);
  const std::size_t c = common_prefix_letters(ginv, u);
  if (c < ginv.size() && c < u.size()) {
    // Cancellation stops inside both words: single image cylinder
    // C_{g[0..|g|-c) u[c..)}.
    ReducedWord w;
    w.letters.assign(g.letters.begin(),
                     g.letters.end() - static_cast<std::ptrdiff_t>(c));
    w.letters.insert(w.letters.end(),
                     u.letters.begin() + static_cast<std::ptrdiff_t>(c),
                     u.letters.end());
    out.push_back(Cylinder{w});
    return;
  }
  if (c == ginv.size()) {
    if (c < u.size()) {
      // g^{-1} is a strict prefix of u: the action shifts the cylinder.
      ReducedWord w;
      w.letters.assign(u.letters.begin() + static_cast<std::ptrdiff_t>(c),
                       u.letters.end());
      out.push_back(Cylinder{w});
      return;
    }
    // g = u^{-1}: the image is every depth-1 cylinder except the one whose
    // letter would unreduce the rays of C_u, i.e. all C_b with b != g_1.
    for (int b = 0; b < 2 * k; ++b) {
      if (static_cast<LetterCode>(b) == g.letters.front()) continue;
      ReducedWord w;
      w.letters.push_back(static_cast<LetterCode>(b));
      out.push_back(Cylinder{w});
    }
    return;
  }
  // c == |u| < |g|: u cancels completely; peel the remaining head of g over
  // the continuations of u.
  ReducedWord grem = reduce_concat(g, u, k);  // length |g| - c >= 1
  const bool has_bad = !u.empty();
  const LetterCode bad_first =
      has_bad ? letter_inverse(u.letters.back(), k) : LetterCode{0};
  const LetterCode recurse_on = letter_inverse(grem.letters.back(), k);
  for (int b = 0; b < 2 * k; ++b) {
    LetterCode lb = static_cast<LetterCode>(b);
    if (has_bad && lb == bad_first) continue;  // not a continuation of C_u
    if (lb != recurse_on) {
      ReducedWord w = grem;
      w.letters.push_back(lb);
      out.push_back(Cylinder{w});
    } else {
      ReducedWord unit;
      unit.letters.push_back(lb);
      map_cylinder_rec(grem, unit, k, out);
    }
  }
}

}  // namespace detail

/// Image of the boundary cylinder C_w under the homeomorphism induced by g,
/// returned as a minimal list of pairwise-disjoint cylinders whose union is
/// exactly g . C_w. Every returned cylinder additionally has a constant
/// Gromov product with g.o, so Radon-Nikodym data is constant on each piece.
inline std::vector<Cylinder> map_cylinder(const ReducedWord& g,
                                          const Cylinder& w, int k) {
  std::vector<Cylinder> out;
  detail::map_cylinder_rec(g, w.prefix, k, out);
  return out;
}

/// The depth-`depth` cylinder around the canonical boundary extension of g:
/// extend the word by repeating its last letter (the identity extends along
/// the fixed ray of the first generator). The extension satisfies
/// <ray, g.o>_o = d(o, g.o), so this retraction has zero defect.
inline Cylinder boundary_retract(const ReducedWord& g, int depth) {
  if (depth < 1) throw ValidationError("boundary_retract needs depth >= 1");
  ReducedWord w;
  w.letters.reserve(static_cast<std::size_t>(depth));
  LetterCode fill = g.empty() ? LetterCode{0} : g.letters.back();
  for (int i = 0; i < depth; ++i)
    w.letters.push_back(i < static_cast<int>(g.size()) ? g.letters[i] : fill);
  return Cylinder{w};
}

/// Shadow of the orbit point g.o of radius rho: the boundary points whose
/// geodesic from o stays within rho of g.o, i.e. whose Gromov product with
/// g.o is at least d(o, g.o) - rho. On the tree this is the single cylinder
/// over the shortest prefix of word(g) whose weighted length reaches the
/// threshold (the whole boundary when the threshold is not positive).
inline std::vector<Cylinder> shadow(const ReducedWord& g, double rho,
                                    const TreeModel& m) {
  if (rho < 0.0) throw ValidationError("shadow radius must be nonnegative");
  const double threshold = m.word_length(g) - rho;
  if (threshold <= 0.0) return {Cylinder{}};
  ReducedWord prefix;
  double L = 0.0;
  for (LetterCode c : g.letters) {
    prefix.letters.push_back(c);
    L += m.ell(c);
    if (L >= threshold) break;
  }
  return {Cylinder{prefix}};
}

}  // namespace hypcomp
