#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cylfun.hpp"
#include "density.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "jacobi.hpp"
#include "kernel.hpp"
#include "model.hpp"
#include "util.hpp"
#include "word.hpp"

namespace hypcomp {

/// All group elements whose orbit point lies in the annulus
/// t R <= d(o, g.o) < (t+1) R, with R the largest edge length.
struct Shell {
  int t = 0;
  double R = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<ReducedWord> words;  // depth-first lexicographic order
};

namespace detail {

template <typename Fn>
inline void window_dfs(const TreeModel& m, double lower, double upper,
                       Fn&& visit) {
  // Lengths are positive, so subtrees only grow; prune at the upper edge.
  ReducedWord w;
  double L = 0.0;
  // Explicit recursion over the lexicographic tree.
  struct Frame {
    int next_letter = 0;
  };
  std::vector<Frame> frames(1);
  if (L >= lower) visit(w, L);
  while (!frames.empty()) {
    Frame& f = frames.back();
    if (f.next_letter >= m.letters()) {
      frames.pop_back();
      if (!w.letters.empty()) {
        L -= m.ell(w.letters.back());
        w.letters.pop_back();
      }
      continue;
    }
    LetterCode c = static_cast<LetterCode>(f.next_letter++);
    if (!w.letters.empty() && c == letter_inverse(w.letters.back(), m.k))
      continue;
    double L2 = L + m.ell(c);
    if (L2 >= upper) continue;  // this child and its subtree are too far
    w.letters.push_back(c);
    L = L2;
    if (L >= lower) visit(w, L);
    frames.emplace_back();
  }
}

}  // namespace detail

inline Shell shell(int t, const TreeModel& m) {
  if (t < 0) throw ValidationError("shell index must be >= 0");
  Shell s;
  s.t = t;
  s.R = m.max_length;
  s.lower = t * s.R;
  s.upper = (t + 1) * s.R;
  detail::window_dfs(m, s.lower, s.upper, [&](const ReducedWord& w, double) {
    if (s.words.size() >= 4000000)
      throw SizeCap("shell at t = " + std::to_string(t) +
                    " exceeds 4e6 elements");
    s.words.push_back(w);
  });
  return s;
}

/// Count the elements of shell(t) whose word (sign +1) or inverse word
/// (sign -1) starts with the ball prefix of `target`: the shortest prefix of
/// target whose weighted length reaches rho.
inline long long cone_count(const ReducedWord& target, double rho, int t,
                            int sign, const TreeModel& m) {
  if (sign != 1 && sign != -1)
    throw ValidationError("cone_count sign must be +1 or -1");
  if (rho < 0.0) throw ValidationError("cone_count needs rho >= 0");
  if (t < 0) throw ValidationError("shell index must be >= 0");
  ReducedWord ball;
  double L = 0.0;
  for (LetterCode c : target.letters) {
    if (L >= rho) break;
    ball.letters.push_back(c);
    L += m.ell(c);
  }
  if (L < rho)
    throw ValidationError("target is shorter than the requested ball radius");
  const double lower = t * m.max_length;
  const double upper = (t + 1) * m.max_length;
  long long count = 0;
  long long visited = 0;
  if (sign == 1) {
    // Matches live below the ball prefix; anything at or past the upper edge
    // before the prefix ends cannot reach back into the annulus.
    double Lb = m.word_length(ball);
    if (Lb >= upper) return 0;
    detail::window_dfs(m, lower, upper, [&](const ReducedWord& w, double) {
      if (++visited > 40000000)
        throw SizeCap("cone_count enumeration exceeded its cap");
      if (is_prefix(ball, w)) ++count;
    });
    return count;
  }
  detail::window_dfs(m, lower, upper, [&](const ReducedWord& w, double) {
    if (++visited > 40000000)
      throw SizeCap("cone_count enumeration exceeded its cap");
    if (w.size() < ball.size()) return;
    for (std::size_t i = 0; i < ball.size(); ++i)
      if (w.letters[w.size() - 1 - i] != letter_inverse(ball.letters[i], m.k))
        return;
    ++count;
  });
  return count;
}

/// One selected element of the annulus cover: g = u * x * inv-reversed(v)
/// with u from the outgoing prefix partition, v from the incoming one, and a
/// short bridge x keeping the product reduced and inside the annulus.
struct VitaliCell {
  ReducedWord u;
  ReducedWord v;
  ReducedWord g;
  double weight = 0.0;  // mu(C_u) * mu(C_v)
  double dist = 0.0;    // d(o, g.o)
  double r_in = 0.0;
  double r_out = 0.0;
  bool sandwich_ok = false;
};

struct VitaliCover {
  int t = 0;
  double base = 0.0;  // length budget split between the two prefix partitions
  double P1 = 0.0;
  double P2 = 0.0;
  int fallbacks = 0;  // times the budget was shrunk to fit bridges
  std::vector<VitaliCell> cells;
  double total_weight = 0.0;  // sums to 1 up to rounding
  bool injective = false;
  bool all_sandwich = false;
};

namespace detail {

/// Minimal words with weighted length >= P: the children of the last nodes
/// strictly inside the ball of radius P. A prefix partition of the boundary.
inline std::vector<ReducedWord> prefix_partition(double P, const TreeModel& m) {
  std::vector<ReducedWord> out;
  ReducedWord w;
  std::function<void(double)> rec = [&](double L) {
    if (L >= P) {
      out.push_back(w);
      return;
    }
    for (int c = 0; c < m.letters(); ++c) {
      LetterCode lc = static_cast<LetterCode>(c);
      if (!w.letters.empty() && lc == letter_inverse(w.letters.back(), m.k))
        continue;
      w.letters.push_back(lc);
      rec(L + m.ell(lc));
      w.letters.pop_back();
    }
  };
  rec(0.0);
  return out;
}

/// Lexicographically least nonempty word x with weighted length in
/// [lower, upper), first letter != first_not, last letter != last_not
/// (negative sentinels disable a constraint). Returns false if none exists.
inline bool find_bridge(const TreeModel& m, double lower, double upper,
                        int first_not, int last_not, ReducedWord* out) {
  ReducedWord w;
  std::function<bool(double)> rec = [&](double L) -> bool {
    if (!w.letters.empty() && L >= lower &&
        static_cast<int>(w.letters.back()) != last_not) {
      *out = w;
      return true;
    }
    for (int c = 0; c < m.letters(); ++c) {
      LetterCode lc = static_cast<LetterCode>(c);
      if (w.letters.empty()) {
        if (static_cast<int>(lc) == first_not) continue;
      } else if (lc == letter_inverse(w.letters.back(), m.k)) {
        continue;
      }
      double L2 = L + m.ell(lc);
      if (L2 >= upper) continue;
      w.letters.push_back(lc);
      if (rec(L2)) return true;
      w.letters.pop_back();
    }
    return false;
  };
  return rec(0.0);
}

}  // namespace detail

/// Disjoint-shadow cover of the annulus at index t: selected orbit points
/// indexed by pairs of prefix-partition cells, with product weights, such
/// that each selected g satisfies a two-sided shadow sandwich around its
/// cells. The length budget (t-1) R is split as evenly as the edge lengths
/// allow; if some pair admits no bridge inside the annulus the budget is
/// shrunk by the smallest edge length and the construction restarts.
inline VitaliCover vitali_cover(int t, const TreeModel& m, const Density& d) {
  if (t < 1) throw ValidationError("vitali_cover needs t >= 1");
  const double R = m.max_length;
  const double lower = t * R, upper = (t + 1) * R;
  double base = t * R - R;
  for (int attempt = 0; attempt < 100; ++attempt) {
    double P2, P1;
    if (base <= 0.0) {
      P1 = P2 = 0.0;
    } else if (m.uniform) {
      double steps = std::floor((base / m.min_length) + 0.5);  // integer count
      P1 = std::ceil(steps / 2.0) * m.min_length;
      P2 = base - P1;
    } else {
      P2 = std::floor((base / 2.0) / m.min_length) * m.min_length;
      P1 = base - P2;
    }
    std::vector<ReducedWord> U = detail::prefix_partition(P1, m);
    std::vector<ReducedWord> V = detail::prefix_partition(P2, m);
    VitaliCover cover;
    cover.t = t;
    cover.base = base;
    cover.P1 = P1;
    cover.P2 = P2;
    cover.fallbacks = attempt;
    bool ok = true;
    for (const ReducedWord& u : U) {
      double Lu = m.word_length(u);
      for (const ReducedWord& v : V) {
        double Lv = m.word_length(v);
        int first_not =
            u.empty() ? -1 : static_cast<int>(letter_inverse(u.back(), m.k));
        int last_not = v.empty() ? -1 : static_cast<int>(v.back());
        ReducedWord x;
        if (!detail::find_bridge(m, lower - Lu - Lv, upper - Lu - Lv,
                                 first_not, last_not, &x)) {
          ok = false;
          break;
        }
        VitaliCell cell;
        cell.u = u;
        cell.v = v;
        cell.g = u;
        cell.g.letters.insert(cell.g.letters.end(), x.letters.begin(),
                              x.letters.end());
        ReducedWord vinv = inverse(v, m.k);
        cell.g.letters.insert(cell.g.letters.end(), vinv.letters.begin(),
                              vinv.letters.end());
        cell.weight = cylinder_mass(d, u) * cylinder_mass(d, v);
        cell.dist = m.word_length(cell.g);
        cell.r_in = cell.dist - std::max(Lu, Lv);
        cell.r_out = cell.dist - std::min(Lu, Lv);
        Cylinder sh_in = shadow(cell.g, cell.r_in, m).front();
        Cylinder sh_out = shadow(cell.g, cell.r_out, m).front();
        ReducedWord ginv = inverse(cell.g, m.k);
        Cylinder sh_in2 = shadow(ginv, cell.r_in, m).front();
        Cylinder sh_out2 = shadow(ginv, cell.r_out, m).front();
        cell.sandwich_ok = is_prefix(u, sh_in.prefix) &&
                           is_prefix(sh_out.prefix, u) &&
                           is_prefix(v, sh_in2.prefix) &&
                           is_prefix(sh_out2.prefix, v);
        cover.cells.push_back(std::move(cell));
      }
      if (!ok) break;
    }
    if (!ok) {
      base -= m.min_length;
      continue;
    }
    std::set<ReducedWord> distinct;
    cover.total_weight = 0.0;
    cover.all_sandwich = true;
    for (const VitaliCell& c : cover.cells) {
      distinct.insert(c.g);
      cover.total_weight += c.weight;
      cover.all_sandwich = cover.all_sandwich && c.sandwich_ok;
    }
    cover.injective = distinct.size() == cover.cells.size();
    return cover;
  }
  throw NoConvergence("vitali_cover could not fit bridges in the annulus");
}

/// The discrete orbital probe measure nu_t: the cover's selected points with
/// their product weights (weights of coinciding points add, though the
/// construction is injective).
struct DiscreteMeasure {
  int t = 0;
  std::vector<std::pair<ReducedWord, double>> atoms;  // lexicographic order
  double total = 0.0;
  double max_weight = 0.0;
  double l2_norm = 0.0;
};

inline DiscreteMeasure nu_t(int t, const TreeModel& m, const Density& d) {
  VitaliCover cover = vitali_cover(t, m, d);
  std::map<ReducedWord, double> acc;
  for (const VitaliCell& c : cover.cells) acc[c.g] += c.weight;
  DiscreteMeasure nu;
  nu.t = t;
  for (const auto& [g, w] : acc) {
    nu.atoms.emplace_back(g, w);
    nu.total += w;
    nu.max_weight = std::max(nu.max_weight, w);
    nu.l2_norm += w * w;
  }
  nu.l2_norm = std::sqrt(nu.l2_norm);
  return nu;
}

/// | nu_t-average of f1(ray to g) f2(ray to g^{-1}) - (int f1)(int f2) |:
/// how far the selected points are from boundary equidistribution at index t.
inline double equidistribution_error(const CylinderFunction& f1,
                                     const CylinderFunction& f2, int t,
                                     const TreeModel& m, const Density& d) {
  DiscreteMeasure nu = nu_t(t, m, d);
  std::complex<double> avg{0.0, 0.0};
  for (const auto& [g, w] : nu.atoms)
    avg += w * value_at_ray(f1, g) * value_at_ray(f2, inverse(g, m.k));
  std::complex<double> target =
      pair_mu(f1, cf_one(f1.k), d) * pair_mu(f2, cf_one(f2.k), d);
  return std::abs(avg - target);
}

/// Continuous test function on the compactified tree: at orbit points at
/// least `blend_depth` letters from the basepoint it reads its boundary step
/// function along the canonical outgoing ray; closer in it takes a fixed
/// interior value, so the function is continuous up to the boundary.
struct CompactTestFunction {
  CylinderFunction boundary;
  int blend_depth = 1;
  std::complex<double> interior{1.0, 0.0};
};

inline CompactTestFunction ctf_constant(int k,
                                        std::complex<double> v = {1.0, 0.0}) {
  CompactTestFunction f;
  f.boundary = cf_scale(cf_one(k), v);
  f.blend_depth = 1;
  f.interior = v;
  return f;
}

inline std::complex<double> eval_at_orbit(const CompactTestFunction& f,
                                          const ReducedWord& g) {
  if (static_cast<int>(g.size()) < f.blend_depth) return f.interior;
  return value_at_ray(f.boundary, g);
}

/// nu_t-average of the normalized matrix coefficient at parameter s against
/// the orbit-point test pair (f1, f2). At s = 1/2 the coefficient is the
/// principal-series pairing normalized by the spherical value Theta(g); for
/// 1/2 < s <= 1 it is Q_s(pi_s(g) phi, psi) normalized by the expected decay
/// e^{-(1-s) delta d(o, g.o)}.
inline std::complex<double> averaged_coefficient(
    double s, int t, const CylinderFunction& phi, const CylinderFunction& psi,
    const CompactTestFunction& f1, const CompactTestFunction& f2,
    const TreeModel& m, const Density& d) {
  if (!(s >= 0.5) || !(s <= 1.0))
    throw ParameterOutOfRange("averaged coefficient needs s in [1/2, 1]");
  DiscreteMeasure nu = nu_t(t, m, d);
  std::vector<std::complex<double>> slot(nu.atoms.size());
  parallel_for(nu.atoms.size(), [&](std::size_t i) {
    const ReducedWord& g = nu.atoms[i].first;
    double w = nu.atoms[i].second;
    std::complex<double> tf =
        eval_at_orbit(f1, g) * eval_at_orbit(f2, inverse(g, m.k));
    std::complex<double> coeff;
    if (s == 0.5) {
      std::complex<double> num =
          pair_mu(apply_pi(std::complex<double>(0.5, 0.0), g, phi, d), psi, d);
      std::complex<double> den = theta_eval(cf_one(phi.k), g, 0.5, d);
      coeff = num / den;
    } else {
      std::complex<double> num = qs_pair(apply_pi(s, g, phi, d), psi, s, d);
      coeff = num / std::exp(-(1.0 - s) * m.delta * m.word_length(g));
    }
    slot[i] = w * tf * coeff;
  });
  std::complex<double> total{0.0, 0.0};
  for (const std::complex<double>& v : slot) total += v;
  return total;
}

/// Exponential decay profile of the matrix coefficient n -> Q_s(pi_s(a^n)
/// phi, psi) along the first generator's axis. When every coefficient is
/// below 1e-13 * sqrt(Q_s(phi,phi) Q_s(psi,psi)) the profile is flagged as
/// vanishing instead of fitted.
struct DecayProfile {
  double slope = 0.0;      // least-squares slope of log |coefficient| vs n
  double intercept = 0.0;
  bool vanishing = false;
  std::vector<double> logvals;  // log |coefficient|, n = 1..Lmax
};

inline DecayProfile decay_profile(double s, const CylinderFunction& phi,
                                  const CylinderFunction& psi, int Lmax,
                                  const TreeModel& m, const Density& d) {
  if (Lmax < 2) throw ValidationError("decay profile needs Lmax >= 2");
  std::vector<double> vals(static_cast<std::size_t>(Lmax));
  parallel_for(vals.size(), [&](std::size_t i) {
    ReducedWord g;
    g.letters.assign(i + 1, LetterCode{0});
    vals[i] = std::abs(qs_pair(apply_pi(s, g, phi, d), psi, s, d));
  });
  double scale =
      std::sqrt(std::abs(qs_pair(phi, phi, s, d) * qs_pair(psi, psi, s, d)));
  DecayProfile prof;
  double top = 0.0;
  for (double v : vals) top = std::max(top, v);
  if (top < 1e-13 * scale) {
    prof.vanishing = true;
    return prof;
  }
  prof.logvals.reserve(vals.size());
  for (double v : vals) prof.logvals.push_back(std::log(v));
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double N = static_cast<double>(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double x = static_cast<double>(i + 1);
    sx += x;
    sy += prof.logvals[i];
    sxx += x * x;
    sxy += x * prof.logvals[i];
  }
  prof.slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
  prof.intercept = (sy - prof.slope * sx) / N;
  return prof;
}

/// Growth of the nu_t-averaged diagonal coefficient against the polynomial
/// profile (1 + t) ||nu_t||_2 that separates the parameter range from the
/// regular representation.
struct WeakContainmentRow {
  int t = 0;
  double lhs = 0.0;    // nu_t-average of Q_s(pi_s(g) 1, 1)
  double rhs = 0.0;    // (1 + t) * l2 norm of nu_t
  double ratio = 0.0;
};

inline std::vector<WeakContainmentRow> weak_containment_probe(
    double s, int t_min, int t_max, const TreeModel& m, const Density& d) {
  if (t_min < 1 || t_max < t_min)
    throw ValidationError("weak containment probe needs 1 <= t_min <= t_max");
  std::vector<WeakContainmentRow> rows;
  CylinderFunction one = cf_one(m.k);
  for (int t = t_min; t <= t_max; ++t) {
    DiscreteMeasure nu = nu_t(t, m, d);
    std::vector<double> slot(nu.atoms.size());
    parallel_for(nu.atoms.size(), [&](std::size_t i) {
      slot[i] = nu.atoms[i].second *
                qs_pair(apply_pi(s, nu.atoms[i].first, one, d), one, s, d)
                    .real();
    });
    WeakContainmentRow row;
    row.t = t;
    for (double v : slot) row.lhs += v;
    row.rhs = (1.0 + t) * nu.l2_norm;
    row.ratio = row.lhs / row.rhs;
    rows.push_back(row);
  }
  return rows;
}

/// One scan row of the normalized coefficient s -> Q_s(pi_s(g) phi, phi) /
/// Q_s(phi, phi) against its principal-series limit.
struct FellRow {
  double s = 0.0;
  double normalized = 0.0;
  double limit_target = 0.0;
  double deviation = 0.0;
  double scaled_sqrt = 0.0;    // sqrt(2s-1) * Q_s(pi_s(g) phi, phi)
  double scaled_linear = 0.0;  // (2s-1) * Q_s(pi_s(g) phi, phi)
};

inline std::vector<FellRow> fell_scan(const ReducedWord& g,
                                      const CylinderFunction& phi,
                                      const std::vector<double>& s_grid,
                                      const TreeModel& m, const Density& d) {
  (void)m;
  double mu_den = pair_mu(phi, phi, d).real();
  double limit =
      pair_mu(apply_pi(std::complex<double>(0.5, 0.0), g, phi, d), phi, d)
          .real() /
      mu_den;
  std::vector<FellRow> rows(s_grid.size());
  parallel_for(s_grid.size(), [&](std::size_t i) {
    double s = s_grid[i];
    double num = qs_pair(apply_pi(s, g, phi, d), phi, s, d).real();
    double den = qs_pair(phi, phi, s, d).real();
    FellRow& r = rows[i];
    r.s = s;
    r.normalized = num / den;
    r.limit_target = limit;
    r.deviation = std::abs(r.normalized - limit);
    r.scaled_sqrt = std::sqrt(2.0 * s - 1.0) * num;
    r.scaled_linear = (2.0 * s - 1.0) * num;
  });
  return rows;
}

/// Numerical rank of the Q_s Gram matrix of the depth-projected orbit
/// {project_depth(pi_s(g) 1) : |word(g)| <= L}: the dimension of the span
/// the constant function generates inside the depth-cell subspace.
struct CyclicityResult {
  int L = 0;
  int depth = 0;
  int dim = 0;      // number of depth cells
  int vectors = 0;  // orbit vectors tested
  int rank = 0;
};

inline CyclicityResult cyclicity_rank(double s, int L, int depth,
                                      const TreeModel& m, const Density& d) {
  if (depth < 1) throw ValidationError("cyclicity rank needs depth >= 1");
  if (L < 0) throw ValidationError("cyclicity rank needs L >= 0");
  std::vector<ReducedWord> group = words_up_to(m.k, static_cast<std::size_t>(L),
                                               /*include_identity=*/true);
  const std::size_t N = group.size();
  std::vector<CylinderFunction> vecs(N);
  parallel_for(N, [&](std::size_t i) {
    vecs[i] = project_depth(apply_pi(s, group[i], cf_one(m.k), d), depth, d);
  });
  SymmetricMatrix K = SymmetricMatrix::zeros(static_cast<int>(N));
  parallel_for(N, [&](std::size_t i) {
    for (std::size_t j = 0; j <= i; ++j)
      K.at(static_cast<int>(i), static_cast<int>(j)) =
          qs_pair(vecs[i], vecs[j], s, d).real();
  });
  Spectrum spec = sym_eigs(K);
  CyclicityResult res;
  res.L = L;
  res.depth = depth;
  res.dim = m.letters() * static_cast<int>(std::llround(
                              std::pow(m.letters() - 1, depth - 1)));
  res.vectors = static_cast<int>(N);
  double lmax = spec.max_eig();
  if (lmax > 0.0)
    for (double lam : spec.eigenvalues)
      if (lam > 1e-8 * lmax) ++res.rank;
  return res;
}

}  // namespace hypcomp
