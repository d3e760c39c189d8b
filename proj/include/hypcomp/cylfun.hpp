#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "model.hpp"
#include "word.hpp"

namespace hypcomp {

/// One piece of a locally constant boundary function: the value taken on the
/// cylinder below `prefix`.
struct CFTerm {
  ReducedWord prefix;
  std::complex<double> value;
};

/// Locally constant function on the boundary. Terms may overlap on input
/// (values add where cylinders nest); `canonicalize` converts to the unique
/// representation with pairwise disjoint prefixes, lexicographic order, no
/// zero values, and no complete sibling set sharing one value.
struct CylinderFunction {
  int k = 2;
  std::vector<CFTerm> terms;
};

namespace detail {

struct CFTrieNode {
  std::complex<double> a{0.0, 0.0};
  std::complex<double> b{0.0, 0.0};
  std::map<LetterCode, int> children;
};

class CFTrie {
 public:
  explicit CFTrie(int k) : k_(k) { nodes_.emplace_back(); }

  void insert(const ReducedWord& prefix, std::complex<double> value,
              bool second_slot) {
    int node = 0;
    for (LetterCode c : prefix.letters) {
      auto it = nodes_[static_cast<std::size_t>(node)].children.find(c);
      if (it == nodes_[static_cast<std::size_t>(node)].children.end()) {
        nodes_.emplace_back();
        int fresh = static_cast<int>(nodes_.size()) - 1;
        nodes_[static_cast<std::size_t>(node)].children[c] = fresh;
        node = fresh;
      } else {
        node = it->second;
      }
    }
    if (second_slot)
      nodes_[static_cast<std::size_t>(node)].b += value;
    else
      nodes_[static_cast<std::size_t>(node)].a += value;
  }

  /// Ensure every node that has at least one child has the full allowed
  /// child set, so that the leaf set partitions the boundary.
  void complete() { complete_rec(0, -1); }

  /// Push values at internal nodes down to the leaves (after complete()).
  void push_down() { push_down_rec(0); }

  /// Collect the leaves in lexicographic order with both value slots.
  template <typename Fn>
  void visit_leaves(Fn&& fn) const {
    ReducedWord path;
    visit_rec(0, path, fn);
  }

 private:
  std::vector<LetterCode> allowed(int last) const {
    std::vector<LetterCode> out;
    for (int c = 0; c < 2 * k_; ++c)
      if (last < 0 ||
          static_cast<LetterCode>(c) !=
              letter_inverse(static_cast<LetterCode>(last), k_))
        out.push_back(static_cast<LetterCode>(c));
    return out;
  }

  void complete_rec(int node, int last) {
    if (nodes_[static_cast<std::size_t>(node)].children.empty()) return;
    for (LetterCode c : allowed(last)) {
      auto& ch = nodes_[static_cast<std::size_t>(node)].children;
      if (ch.find(c) == ch.end()) {
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(node)].children[c] =
            static_cast<int>(nodes_.size()) - 1;
      }
    }
    // Copy the child list: recursion may grow the node vector.
    std::vector<std::pair<LetterCode, int>> kids(
        nodes_[static_cast<std::size_t>(node)].children.begin(),
        nodes_[static_cast<std::size_t>(node)].children.end());
    for (auto [c, child] : kids) complete_rec(child, c);
  }

  void push_down_rec(int node) {
    auto kids = nodes_[static_cast<std::size_t>(node)].children;
    if (kids.empty()) return;
    std::complex<double> va = nodes_[static_cast<std::size_t>(node)].a;
    std::complex<double> vb = nodes_[static_cast<std::size_t>(node)].b;
    nodes_[static_cast<std::size_t>(node)].a = {0.0, 0.0};
    nodes_[static_cast<std::size_t>(node)].b = {0.0, 0.0};
    for (auto [c, child] : kids) {
      nodes_[static_cast<std::size_t>(child)].a += va;
      nodes_[static_cast<std::size_t>(child)].b += vb;
      push_down_rec(child);
    }
  }

  template <typename Fn>
  void visit_rec(int node, ReducedWord& path, Fn&& fn) const {
    const CFTrieNode& nd = nodes_[static_cast<std::size_t>(node)];
    if (nd.children.empty()) {
      fn(path, nd.a, nd.b);
      return;
    }
    for (auto [c, child] : nd.children) {
      path.letters.push_back(c);
      visit_rec(child, path, fn);
      path.letters.pop_back();
    }
  }

  int k_;
  std::vector<CFTrieNode> nodes_;
};

}  // namespace detail

/// Rewrite the term list as a disjoint, lexicographically sorted antichain:
/// overlapping terms have their values added where they nest, values are
/// pushed to the finest cells involved, complete sibling sets with one shared
/// value are merged back up, and zero values are dropped.
inline CylinderFunction canonicalize(const CylinderFunction& phi) {
  detail::CFTrie trie(phi.k);
  for (const CFTerm& t : phi.terms) trie.insert(t.prefix, t.value, false);
  trie.complete();
  trie.push_down();
  // Collect leaves, then merge complete equal-valued sibling sets bottom-up.
  // The trie's leaf order is lexicographic, so a complete sibling set is
  // contiguous; iterate merge passes until stable.
  std::vector<CFTerm> leaves;
  trie.visit_leaves([&](const ReducedWord& w, std::complex<double> a,
                        std::complex<double>) {
    leaves.push_back(CFTerm{w, a});
  });
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<ReducedWord, std::vector<std::size_t>> by_parent;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i].prefix.letters.empty()) continue;
      ReducedWord parent = leaves[i].prefix;
      parent.letters.pop_back();
      by_parent[parent].push_back(i);
    }
    std::vector<bool> drop(leaves.size(), false);
    std::vector<CFTerm> added;
    for (const auto& [parent, idxs] : by_parent) {
      std::size_t fanout =
          parent.letters.empty() ? 2u * phi.k : 2u * phi.k - 1u;
      if (idxs.size() != fanout) continue;
      std::complex<double> v = leaves[idxs.front()].value;
      bool all_equal = true;
      for (std::size_t i : idxs)
        if (!(leaves[i].value == v)) {
          all_equal = false;
          break;
        }
      if (!all_equal) continue;
      for (std::size_t i : idxs) drop[i] = true;
      added.push_back(CFTerm{parent, v});
      changed = true;
    }
    if (changed) {
      std::vector<CFTerm> next;
      for (std::size_t i = 0; i < leaves.size(); ++i)
        if (!drop[i]) next.push_back(leaves[i]);
      next.insert(next.end(), added.begin(), added.end());
      leaves = std::move(next);
    }
  }
  CylinderFunction out;
  out.k = phi.k;
  for (CFTerm& t : leaves)
    if (t.value != std::complex<double>(0.0, 0.0)) out.terms.push_back(t);
  std::sort(out.terms.begin(), out.terms.end(),
            [](const CFTerm& x, const CFTerm& y) { return x.prefix < y.prefix; });
  return out;
}

/// Constant function 1 on the whole boundary.
inline CylinderFunction cf_one(int k) {
  CylinderFunction f;
  f.k = k;
  f.terms.push_back(CFTerm{ReducedWord{}, {1.0, 0.0}});
  return f;
}

/// Indicator of the cylinder below w.
inline CylinderFunction cf_indicator(const ReducedWord& w, int k) {
  CylinderFunction f;
  f.k = k;
  f.terms.push_back(CFTerm{w, {1.0, 0.0}});
  return f;
}

inline CylinderFunction cf_scale(const CylinderFunction& phi,
                                 std::complex<double> c) {
  CylinderFunction out = phi;
  for (CFTerm& t : out.terms) t.value *= c;
  return canonicalize(out);
}

/// Pointwise sum: term lists concatenate because overlapping values add.
inline CylinderFunction cf_add(const CylinderFunction& phi,
                               const CylinderFunction& psi) {
  CylinderFunction out = phi;
  out.terms.insert(out.terms.end(), psi.terms.begin(), psi.terms.end());
  return canonicalize(out);
}

inline CylinderFunction cf_sub(const CylinderFunction& phi,
                               const CylinderFunction& psi) {
  return cf_add(phi, cf_scale(psi, {-1.0, 0.0}));
}

/// Subdivide so that every piece has letter depth at least `depth`; pieces
/// already deeper are kept as they are. The result is a valid disjoint
/// representation and is intentionally not merged back up.
inline CylinderFunction refine(const CylinderFunction& phi, int depth) {
  if (depth < 0) throw ValidationError("refinement depth must be >= 0");
  CylinderFunction canon = canonicalize(phi);
  CylinderFunction out;
  out.k = phi.k;
  for (const CFTerm& t : canon.terms) {
    if (static_cast<int>(t.prefix.letters.size()) >= depth) {
      out.terms.push_back(t);
      continue;
    }
    // Expand to all reduced extensions of exactly `depth` letters.
    std::vector<ReducedWord> frontier{t.prefix};
    while (!frontier.empty() &&
           static_cast<int>(frontier.front().letters.size()) < depth) {
      std::vector<ReducedWord> next;
      for (const ReducedWord& u : frontier)
        for (int c = 0; c < 2 * phi.k; ++c) {
          if (!u.letters.empty() &&
              static_cast<LetterCode>(c) ==
                  letter_inverse(u.letters.back(), phi.k))
            continue;
          ReducedWord v = u;
          v.letters.push_back(static_cast<LetterCode>(c));
          next.push_back(std::move(v));
        }
      frontier = std::move(next);
    }
    for (ReducedWord& u : frontier)
      out.terms.push_back(CFTerm{std::move(u), t.value});
  }
  std::sort(out.terms.begin(), out.terms.end(),
            [](const CFTerm& x, const CFTerm& y) { return x.prefix < y.prefix; });
  return out;
}

/// Value of phi at the boundary ray obtained by repeating the last letter of
/// w forever (the ray a a a ... when w is the identity).
inline std::complex<double> value_at_ray(const CylinderFunction& phi,
                                         const ReducedWord& w) {
  std::complex<double> total{0.0, 0.0};
  LetterCode fill = w.letters.empty() ? LetterCode{0} : w.letters.back();
  for (const CFTerm& t : phi.terms) {
    bool contains = true;
    for (std::size_t i = 0; i < t.prefix.letters.size(); ++i) {
      LetterCode ray_i = i < w.letters.size() ? w.letters[i] : fill;
      if (t.prefix.letters[i] != ray_i) {
        contains = false;
        break;
      }
    }
    if (contains) total += t.value;
  }
  return total;
}

/// One cell of the common refinement of two functions, with both values.
struct CommonCell {
  ReducedWord prefix;
  std::complex<double> a{0.0, 0.0};
  std::complex<double> b{0.0, 0.0};
};

/// Common refinement: a partition of the boundary into cylinders on each of
/// which both functions are constant; zero-value cells are included.
inline std::vector<CommonCell> common_cells(const CylinderFunction& phi,
                                            const CylinderFunction& psi) {
  if (phi.k != psi.k)
    throw ValidationError("cylinder functions live over different ranks");
  detail::CFTrie trie(phi.k);
  for (const CFTerm& t : phi.terms) trie.insert(t.prefix, t.value, false);
  for (const CFTerm& t : psi.terms) trie.insert(t.prefix, t.value, true);
  trie.complete();
  trie.push_down();
  std::vector<CommonCell> cells;
  trie.visit_leaves([&](const ReducedWord& w, std::complex<double> a,
                        std::complex<double> b) {
    cells.push_back(CommonCell{w, a, b});
  });
  return cells;
}

/// Partition of the boundary into cylinders on which phi is constant,
/// including the cells where it vanishes.
inline std::vector<CommonCell> cells_full(const CylinderFunction& phi) {
  return common_cells(phi, phi);
}

/// Integral pairing <phi, psi> = integral of phi * conj(psi) against the
/// conformal density.
inline std::complex<double> pair_mu(const CylinderFunction& phi,
                                    const CylinderFunction& psi,
                                    const Density& d) {
  std::complex<double> total{0.0, 0.0};
  for (const CommonCell& c : common_cells(phi, psi))
    total += c.a * std::conj(c.b) * cylinder_mass(d, c.prefix);
  return total;
}

/// Action of the group element g in the boundary representation with
/// parameter s: the function is pushed forward by g and multiplied by the
/// s-th power of the derivative of the push-forward measure, evaluated on
/// each image piece.
inline CylinderFunction apply_pi(std::complex<double> s, const ReducedWord& g,
                                 const CylinderFunction& phi,
                                 const Density& d) {
  const TreeModel& m = d.model;
  CylinderFunction out;
  out.k = phi.k;
  for (const CFTerm& t : phi.terms) {
    std::vector<Cylinder> work = map_cylinder(g, Cylinder{t.prefix}, m.k);
    while (!work.empty()) {
      Cylinder piece = work.back();
      work.pop_back();
      double gp = 0.0;
      if (!detail::gromov_cylinder_point(piece, g, m, &gp)) {
        // The image pieces always have a constant horocycle value; splitting
        // one level is a safety net, not an expected path.
        for (int c = 0; c < 2 * m.k; ++c) {
          if (!piece.prefix.letters.empty() &&
              static_cast<LetterCode>(c) ==
                  letter_inverse(piece.prefix.letters.back(), m.k))
            continue;
          Cylinder child = piece;
          child.prefix.letters.push_back(static_cast<LetterCode>(c));
          work.push_back(child);
        }
        continue;
      }
      double buse = m.word_length(g) - 2.0 * gp;
      std::complex<double> coeff = t.value * std::exp(-m.delta * buse * s);
      out.terms.push_back(CFTerm{piece.prefix, coeff});
    }
  }
  return canonicalize(out);
}

/// Defect of the duality relation between the actions at s and at the
/// reflected conjugate parameter: |<pi_s(g) phi, psi> - <phi, pi_s'(g^{-1})
/// psi>| with s' = conj(1 - s).
inline double duality_defect(std::complex<double> s, const ReducedWord& g,
                             const CylinderFunction& phi,
                             const CylinderFunction& psi, const Density& d) {
  std::complex<double> lhs = pair_mu(apply_pi(s, g, phi, d), psi, d);
  std::complex<double> sd(1.0 - s.real(), s.imag());
  std::complex<double> rhs =
      pair_mu(phi, apply_pi(sd, inverse(g, d.model.k), psi, d), d);
  return std::abs(lhs - rhs);
}

/// Supremum distance between two locally constant functions.
inline double cf_sup_distance(const CylinderFunction& phi,
                              const CylinderFunction& psi) {
  double worst = 0.0;
  for (const CommonCell& c : common_cells(phi, psi))
    worst = std::max(worst, std::abs(c.a - c.b));
  return worst;
}

/// Conditional expectation onto cells of the given letter depth: on each
/// depth cell the result takes the density average of phi over that cell.
inline CylinderFunction project_depth(const CylinderFunction& phi, int depth,
                                      const Density& d) {
  if (depth < 0) throw ValidationError("projection depth must be >= 0");
  std::map<ReducedWord, std::complex<double>> bucket;  // cell -> integral
  for (const CommonCell& c : cells_full(phi)) {
    if (c.a == std::complex<double>(0.0, 0.0)) continue;
    if (static_cast<int>(c.prefix.letters.size()) >= depth) {
      ReducedWord w = c.prefix;
      w.letters.resize(static_cast<std::size_t>(depth));
      bucket[w] += c.a * cylinder_mass(d, c.prefix);
    } else {
      CylinderFunction piece = refine(cf_indicator(c.prefix, phi.k), depth);
      for (const CFTerm& t : piece.terms)
        bucket[t.prefix] += c.a * cylinder_mass(d, t.prefix);
    }
  }
  CylinderFunction out;
  out.k = phi.k;
  for (const auto& [w, integral] : bucket) {
    std::complex<double> v = integral / cylinder_mass(d, w);
    if (v != std::complex<double>(0.0, 0.0)) out.terms.push_back(CFTerm{w, v});
  }
  return canonicalize(out);
}

}  // namespace hypcomp
