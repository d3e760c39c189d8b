#pragma once

// Independent reference computations ("oracles") used by the test suite.
// Everything here is deliberately implemented by a different route than the
// library: strings instead of letter codes, explicit series instead of
// linear solves, brute-force enumeration instead of recursion — so agreement
// is evidence, not tautology.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <hypcomp/hypcomp.hpp>

namespace oracle {

// ---------------------------------------------------------------------------
// Deterministic random source. std::mt19937 output is pinned by the standard;
// the distributions are not, so draws go through explicit modulo.
struct Rng {
  std::mt19937 eng;
  explicit Rng(std::uint32_t seed) : eng(seed) {}
  std::size_t next(std::size_t n) {
    return static_cast<std::size_t>(eng()) % n;
  }
  double pick(const std::vector<double>& vals) { return vals[next(vals.size())]; }
};

// ---------------------------------------------------------------------------
// String-level free-group arithmetic. Letters are chars: 'a'+i generator i,
// 'A'+i its inverse.

inline bool chars_cancel(char x, char y) {
  return x != y && std::toupper(static_cast<unsigned char>(x)) ==
                       std::toupper(static_cast<unsigned char>(y)) &&
         std::tolower(static_cast<unsigned char>(x)) ==
             std::tolower(static_cast<unsigned char>(y));
}

/// Free reduction by repeated scanning (quadratic, obviously correct).
inline std::string reduce_string(std::string s) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (chars_cancel(s[i], s[i + 1])) {
        s.erase(i, 2);
        changed = true;
        break;
      }
    }
  }
  return s;
}

inline char invert_char(char c) {
  return std::isupper(static_cast<unsigned char>(c))
             ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
             : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

inline std::string invert_string(const std::string& s) {
  std::string out(s.rbegin(), s.rend());
  for (char& c : out) c = invert_char(c);
  return out;
}

inline std::size_t common_prefix_chars(const std::string& a,
                                       const std::string& b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

inline double char_length(char c, const hypcomp::TreeModel& m) {
  int idx = std::islower(static_cast<unsigned char>(c)) ? c - 'a' : c - 'A';
  return m.lengths[static_cast<std::size_t>(idx)];
}

inline double string_length(const std::string& s,
                            const hypcomp::TreeModel& m) {
  double L = 0.0;
  for (char c : s) L += char_length(c, m);
  return L;
}

/// All reduced words of exactly n letters, as strings, lexicographic in the
/// letter-code order a < b < ... < A < B < ...
inline void enumerate_strings(int k, int n, std::vector<std::string>* out,
                              std::string prefix = "") {
  if (n == 0) {
    out->push_back(prefix);
    return;
  }
  std::string alphabet;
  for (int i = 0; i < k; ++i) alphabet.push_back(static_cast<char>('a' + i));
  for (int i = 0; i < k; ++i) alphabet.push_back(static_cast<char>('A' + i));
  for (char c : alphabet) {
    if (!prefix.empty() && chars_cancel(prefix.back(), c)) continue;
    enumerate_strings(k, n - 1, out, prefix + c);
  }
}

// ---------------------------------------------------------------------------
// Random test data.

inline hypcomp::ReducedWord random_word(Rng& rng, int k, std::size_t len) {
  hypcomp::ReducedWord w;
  for (std::size_t i = 0; i < len; ++i) {
    while (true) {
      hypcomp::LetterCode c =
          static_cast<hypcomp::LetterCode>(rng.next(2 * static_cast<std::size_t>(k)));
      if (!w.letters.empty() &&
          c == hypcomp::letter_inverse(w.letters.back(), k))
        continue;
      w.letters.push_back(c);
      break;
    }
  }
  return w;
}

/// A random step function: a few random cylinders with coefficients from a
/// small fixed set (sums may overlap; canonicalization handles that).
inline hypcomp::CylinderFunction random_function(Rng& rng, int k,
                                                 std::size_t max_depth,
                                                 bool complex_coeffs) {
  static const std::vector<double> coeffs = {-1.0, -0.5, 0.25, 0.5, 1.0, 2.0};
  hypcomp::CylinderFunction f;
  f.k = k;
  std::size_t terms = 1 + rng.next(4);
  for (std::size_t i = 0; i < terms; ++i) {
    std::size_t depth = rng.next(max_depth + 1);
    double re = rng.pick(coeffs);
    double im = complex_coeffs ? rng.pick(coeffs) : 0.0;
    f.terms.push_back(
        hypcomp::CFTerm{random_word(rng, k, depth), {re, im}});
  }
  return hypcomp::canonicalize(f);
}

// ---------------------------------------------------------------------------
// Small symmetric eigenproblems by characteristic polynomial.

inline std::vector<double> eig2(double a, double b, double c) {
  // [[a, b], [b, c]]
  double mean = 0.5 * (a + c);
  double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {mean - disc, mean + disc};
}

// ---------------------------------------------------------------------------
// Closed-form spherical transform on the uniform rank-2 tree.
// For g at letter distance t >= 1 and exponent e = (1-s)*delta (delta=log 3):
//   Theta_s[1](g.o) = sum_{j=0..t} 3^{e'(2j-t)} m_j,  e' = e / log 3,
// where m_0 = 3/4 is the mass of the cells at Gromov product 0, m_j =
// (1/2) 3^{-j} for 0 < j < t, and m_t = (1/4) 3^{1-t} (the cell around the
// endpoint). Derived by splitting the boundary by the Gromov product with g.
inline double theta_uniform_k2(int t, double s) {
  const double ep = 1.0 - s;  // exponent in units of delta = log 3
  auto pw = [&](double x) { return std::pow(3.0, ep * x); };
  double total = pw(-t) * 0.75;
  for (int j = 1; j < t; ++j)
    total += pw(2.0 * j - t) * 0.5 * std::pow(3.0, -j);
  total += pw(t) * 0.25 * std::pow(3.0, 1.0 - t);
  return total;
}

// ---------------------------------------------------------------------------
// Self-energy by explicit level-series summation with a certified tail.
// E(C_u, C_u) = sum over tree nodes v >= u of e^{beta L(v)} (m_v^2 -
// sum_children m_vc^2). The per-level sums S_j(a) = sum of e^{beta L(v)} m_v^2
// over level-j nodes ending in letter a satisfy a one-step recursion; the tail
// after truncation is bounded by a geometric ratio computed from the model.
// For the whole boundary (empty u) the level-0 node is the root itself.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double slack) const {
    return x >= lo - slack && x <= hi + slack;
  }
};

inline Bracket self_energy_series(const hypcomp::ReducedWord& u, double s,
                                  const hypcomp::Density& d) {
  const hypcomp::TreeModel& m = d.model;
  const int q = m.letters();
  const double beta = 2.0 * (1.0 - s) * m.delta;
  // kappa(a) = 1 - sum_b rho(a,b)^2 : the mass-square lost when splitting a
  // node ending in a into its children.
  std::vector<double> kappa(static_cast<std::size_t>(q), 1.0);
  double ratio = 0.0;  // max_a sum_b e^{beta l(b)} rho(a,b)^2
  for (int a = 0; a < q; ++a) {
    double row = 0.0;
    for (int b = 0; b < q; ++b) {
      double rho = m.rho_at(static_cast<hypcomp::LetterCode>(a),
                            static_cast<hypcomp::LetterCode>(b));
      kappa[static_cast<std::size_t>(a)] -= rho * rho;
      row += std::exp(beta * m.ell(static_cast<hypcomp::LetterCode>(b))) *
             rho * rho;
    }
    ratio = std::max(ratio, row);
  }
  if (!(ratio < 1.0)) throw std::runtime_error("series oracle: divergent");
  // Level state: S[a] = sum e^{beta L} m^2 over current-level nodes ending
  // in a. Root handling: the empty word has no "last letter"; its split loses
  // 1 - sum_b mass1(b)^2 and its children seed the state.
  std::vector<double> S(static_cast<std::size_t>(q), 0.0);
  double acc = 0.0;
  if (u.empty()) {
    double lost = 1.0;
    for (int b = 0; b < q; ++b) {
      double mb = m.mass1[static_cast<std::size_t>(b)];
      lost -= mb * mb;
      S[static_cast<std::size_t>(b)] =
          std::exp(beta * m.ell(static_cast<hypcomp::LetterCode>(b))) * mb *
          mb;
    }
    acc += lost;  // e^{beta * 0} at the root
  } else {
    double mu = hypcomp::cylinder_mass(d, u);
    double Lu = m.word_length(u);
    S[u.letters.back()] = std::exp(beta * Lu) * mu * mu;
  }
  double level = 0.0;
  for (int iter = 0; iter < 100000; ++iter) {
    level = 0.0;
    for (int a = 0; a < q; ++a)
      level += S[static_cast<std::size_t>(a)] * kappa[static_cast<std::size_t>(a)];
    acc += level;
    // advance one level
    std::vector<double> T(static_cast<std::size_t>(q), 0.0);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        double rho = m.rho_at(static_cast<hypcomp::LetterCode>(a),
                              static_cast<hypcomp::LetterCode>(b));
        T[static_cast<std::size_t>(b)] +=
            S[static_cast<std::size_t>(a)] *
            std::exp(beta * m.ell(static_cast<hypcomp::LetterCode>(b))) *
            rho * rho;
      }
    S = T;
    double remaining = 0.0;
    for (double v : S) remaining += v;
    if (remaining < 1e-18 * std::max(acc, 1e-300)) {
      // everything left, summed over all future levels
      return Bracket{acc, acc + remaining / (1.0 - ratio)};
    }
  }
  double remaining = 0.0;
  for (double v : S) remaining += v;
  return Bracket{acc, acc + remaining / (1.0 - ratio)};
}

/// Pair-energy bracket by refining both cylinders to a fixed letter depth:
/// cross-cell terms are exact (distinct cells of a partition are disjoint
/// cylinders), diagonal terms are bracketed by the series oracle.
inline Bracket pair_energy_bracket(const hypcomp::ReducedWord& v,
                                   const hypcomp::ReducedWord& w, double s,
                                   const hypcomp::Density& d, int depth) {
  const hypcomp::TreeModel& m = d.model;
  const double beta = 2.0 * (1.0 - s) * m.delta;
  // cells of depth exactly `depth` below a prefix
  auto cells_below = [&](const hypcomp::ReducedWord& p) {
    std::vector<hypcomp::ReducedWord> out;
    std::vector<hypcomp::ReducedWord> stack = {p};
    while (!stack.empty()) {
      hypcomp::ReducedWord cur = stack.back();
      stack.pop_back();
      if (static_cast<int>(cur.size()) >= depth) {
        out.push_back(cur);
        continue;
      }
      for (int c = 0; c < m.letters(); ++c) {
        hypcomp::LetterCode lc = static_cast<hypcomp::LetterCode>(c);
        if (!cur.letters.empty() &&
            lc == hypcomp::letter_inverse(cur.letters.back(), m.k))
          continue;
        hypcomp::ReducedWord nxt = cur;
        nxt.letters.push_back(lc);
        stack.push_back(nxt);
      }
    }
    return out;
  };
  std::vector<hypcomp::ReducedWord> A = cells_below(v), B = cells_below(w);
  Bracket total;
  for (const hypcomp::ReducedWord& x : A)
    for (const hypcomp::ReducedWord& y : B) {
      if (x == y) {
        Bracket sb = self_energy_series(x, s, d);
        total.lo += sb.lo;
        total.hi += sb.hi;
      } else {
        std::size_t c = hypcomp::common_prefix_letters(x, y);
        double Lc = 0.0;
        for (std::size_t l = 0; l < c; ++l) Lc += m.ell(x.letters[l]);
        double e = std::exp(beta * Lc) * hypcomp::cylinder_mass(d, x) *
                   hypcomp::cylinder_mass(d, y);
        total.lo += e;
        total.hi += e;
      }
    }
  return total;
}

/// Q_s(phi, psi) bracket via the refinement route (independent of the
/// library's common-cell partition).
inline Bracket qs_bracket(const hypcomp::CylinderFunction& phi,
                          const hypcomp::CylinderFunction& psi, double s,
                          const hypcomp::Density& d, int depth) {
  hypcomp::CylinderFunction a = hypcomp::refine(phi, depth);
  hypcomp::CylinderFunction b = hypcomp::refine(psi, depth);
  // evaluate on the full depth partition (missing cells have value 0)
  std::vector<hypcomp::ReducedWord> cells =
      hypcomp::words_of_length(d.model.k, static_cast<std::size_t>(depth));
  auto value_on = [&](const hypcomp::CylinderFunction& f,
                      const hypcomp::ReducedWord& cell) {
    std::complex<double> v{0.0, 0.0};
    for (const hypcomp::CFTerm& t : f.terms)
      if (hypcomp::is_prefix(t.prefix, cell)) v += t.value;
    return v;
  };
  const double beta = 2.0 * (1.0 - s) * d.model.delta;
  Bracket out;
  double lo_r = 0.0, hi_r = 0.0;
  for (const hypcomp::ReducedWord& x : cells) {
    std::complex<double> va = value_on(a, x);
    if (va == std::complex<double>(0.0, 0.0)) continue;
    for (const hypcomp::ReducedWord& y : cells) {
      std::complex<double> vb = value_on(b, y);
      if (vb == std::complex<double>(0.0, 0.0)) continue;
      double coeff = (va * std::conj(vb)).real();
      if (x == y) {
        Bracket sb = self_energy_series(x, s, d);
        lo_r += coeff >= 0 ? coeff * sb.lo : coeff * sb.hi;
        hi_r += coeff >= 0 ? coeff * sb.hi : coeff * sb.lo;
      } else {
        std::size_t c = hypcomp::common_prefix_letters(x, y);
        double Lc = 0.0;
        for (std::size_t l = 0; l < c; ++l) Lc += d.model.ell(x.letters[l]);
        double e = std::exp(beta * Lc) * hypcomp::cylinder_mass(d, x) *
                   hypcomp::cylinder_mass(d, y);
        lo_r += coeff * e;
        hi_r += coeff * e;
      }
    }
  }
  out.lo = lo_r;
  out.hi = hi_r;
  return out;
}

// ---------------------------------------------------------------------------
// Shadow-lemma ratio on the uniform rank-2 tree, by hand:
// mu(shadow(g, rho)) = mass of the shortest prefix of length >= L - rho, so
// ratio = mu * e^{delta L} * e^{-delta rho} = 3^{L-rho} if L <= rho else 3/4.
inline double shadow_ratio_uniform_k2(int L, int rho) {
  if (L <= rho) return std::pow(3.0, static_cast<double>(L - rho));
  return 0.75;
}

// ---------------------------------------------------------------------------
// Membership-level image of a cylinder under the boundary action, at a fixed
// evaluation depth: a deep cell C_x lies in g * C_w iff the reduced word
// g^{-1} x still starts with w (the evaluation depth makes this decidable).
inline bool image_member(const std::string& g, const std::string& w,
                         const std::string& x) {
  std::string y = reduce_string(invert_string(g) + x);
  if (y.size() < w.size()) return false;  // undecided; caller picks x deep
  return y.compare(0, w.size(), w) == 0;
}

// ---------------------------------------------------------------------------
// Naive pushforward action on a step function, evaluated on deep cells:
// (pi_s(g) phi)(xi) = rn(xi)^s phi(g^{-1} xi) with rn = e^{-delta b}, b =
// L(g) - 2 <g.o, xi>. Returns the value at the deep cell C_x.
inline std::complex<double> naive_pi_value(
    std::complex<double> s, const hypcomp::ReducedWord& g,
    const hypcomp::CylinderFunction& phi, const hypcomp::Density& d,
    const hypcomp::ReducedWord& x) {
  const hypcomp::TreeModel& m = d.model;
  // Gromov product <g.o, xi>_o for xi in C_x with x deeper than |g|: weighted
  // common-prefix length of word(g) and x.
  std::size_t c = hypcomp::common_prefix_letters(g, x);
  double gp = 0.0;
  for (std::size_t l = 0; l < c; ++l) gp += m.ell(g.letters[l]);
  double buse = m.word_length(g) - 2.0 * gp;
  std::complex<double> rn_pow =
      std::exp(std::complex<double>(-m.delta * buse, 0.0) * s);
  hypcomp::ReducedWord y =
      hypcomp::reduce_concat(hypcomp::inverse(g, m.k), x, m.k);
  std::complex<double> val{0.0, 0.0};
  for (const hypcomp::CFTerm& t : phi.terms)
    if (hypcomp::is_prefix(t.prefix, y)) val += t.value;
  return rn_pow * val;
}

// ---------------------------------------------------------------------------
// Least-squares slope of ys against x = 1..N (duplicated on purpose).
inline double ls_slope(const std::vector<double>& ys) {
  const double N = static_cast<double>(ys.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double x = static_cast<double>(i + 1);
    sx += x;
    sy += ys[i];
    sxx += x * x;
    sxy += x * ys[i];
  }
  return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

}  // namespace oracle
