#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gamedyn/game.hpp"
#include "gamedyn/linalg.hpp"

namespace gamedyn {

struct EquilibriumCertificate {
  RatVec x, y;
  std::vector<int> support_x, support_y;
  bool quasi_strict = false;
  bool strict = false;
  bool from_degenerate_support = false;
};

struct EnumerationResult {
  std::vector<EquilibriumCertificate> certificates;
  bool degenerate = false;  // some support pair carried a positive-dimensional equilibrium set
};

inline std::vector<int> support_of(const RatVec& x) {
  std::vector<int> s;
  for (int i = 0; i < static_cast<int>(x.size()); ++i)
    if (sgn(x[i]) > 0) s.push_back(i);
  return s;
}

inline std::vector<int> argmax_set(const RatVec& p) {
  std::vector<int> s;
  Rat best = p[0];
  for (const Rat& v : p) best = std::max(best, v);
  for (int i = 0; i < static_cast<int>(p.size()); ++i)
    if (p[i] == best) s.push_back(i);
  return s;
}

// Nash condition for the symmetric bimatrix game (U, U^T): every supported
// strategy of x attains max_i (Uy)_i and every supported strategy of y
// attains max_j (Ux)_j. Exact comparisons.
inline bool is_nash(const SymmetricGame& g, const RatVec& x, const RatVec& y) {
  if (static_cast<int>(x.size()) != g.n || static_cast<int>(y.size()) != g.n)
    throw std::invalid_argument("is_nash: dimension mismatch");
  RatVec uy = payoff_vector(g, y);
  RatVec ux = payoff_vector(g, x);
  Rat max_uy = uy[0], max_ux = ux[0];
  for (int i = 1; i < g.n; ++i) {
    max_uy = std::max(max_uy, uy[i]);
    max_ux = std::max(max_ux, ux[i]);
  }
  for (int i = 0; i < g.n; ++i) {
    if (sgn(x[i]) > 0 && uy[i] != max_uy) return false;
    if (sgn(y[i]) > 0 && ux[i] != max_ux) return false;
  }
  return true;
}

// Candidate mixes for one side of a support pair: points z supported inside
// `supp_mask` whose payoff vector is constant on `indiff_mask` and maximal
// there. Either empty, one point, or the vertices of a polytope.
struct CandidateSet {
  std::vector<RatVec> points;
  bool positive_dimensional = false;
};

namespace detail {

inline std::string point_key(const RatVec& z) {
  std::string s;
  for (const Rat& q : z) {
    s += q.get_str();
    s += ',';
  }
  return s;
}

inline uint64_t binomial_guard(int n, int k) {
  uint64_t r = 1;
  for (int i = 0; i < k; ++i) {
    r = r * static_cast<uint64_t>(n - i) / static_cast<uint64_t>(i + 1);
    if (r > 2'000'000ULL) return r;
  }
  return r;
}

}  // namespace detail

inline CandidateSet support_candidates(const SymmetricGame& g, uint32_t indiff_mask, uint32_t supp_mask) {
  std::vector<int> A, B;
  for (int i = 0; i < g.n; ++i) {
    if (indiff_mask >> i & 1) A.push_back(i);
    if (supp_mask >> i & 1) B.push_back(i);
  }
  const int kb = static_cast<int>(B.size());
  const int k = kb + 1;  // unknowns: z over B, then v

  std::vector<RatVec> aug;
  for (int a : A) {
    RatVec row(k + 1, Rat(0));
    for (int jj = 0; jj < kb; ++jj) row[jj] = g.at(a, B[jj]);
    row[kb] = -1;
    aug.push_back(std::move(row));
  }
  {
    RatVec row(k + 1, Rat(0));
    for (int jj = 0; jj < kb; ++jj) row[jj] = 1;
    row[k] = 1;
    aug.push_back(std::move(row));
  }

  LinearSolution sol = solve_exact(aug, k);
  CandidateSet out;
  if (sol.kind == SolveKind::inconsistent) return out;

  auto try_embed = [&](const RatVec& zv) -> std::optional<RatVec> {
    RatVec z(g.n, Rat(0));
    for (int jj = 0; jj < kb; ++jj) {
      if (sgn(zv[jj]) < 0) return std::nullopt;
      z[B[jj]] = zv[jj];
    }
    const Rat& v = zv[kb];
    RatVec p = payoff_vector(g, z);
    for (int s = 0; s < g.n; ++s) {
      if (indiff_mask >> s & 1) continue;
      if (p[s] > v) return std::nullopt;
    }
    return z;
  };

  if (sol.kind == SolveKind::unique) {
    if (auto z = try_embed(sol.particular)) out.points.push_back(*z);
    return out;
  }

  // Singular but consistent: walk the vertices of the feasible polytope in
  // the d free parameters. Constraints are affine: z_j >= 0 on B and
  // (Uz)_s <= v off the indifference set.
  const int d = static_cast<int>(sol.nullspace.size());
  std::vector<RatVec> con;  // each row: [g_1..g_d | -h], constraint g.alpha + h <= 0
  auto add_constraint = [&](const RatVec& coeffs, const Rat& h) {
    RatVec row = coeffs;
    row.push_back(-h);
    con.push_back(std::move(row));
  };
  for (int jj = 0; jj < kb; ++jj) {
    RatVec gr(d);
    for (int l = 0; l < d; ++l) gr[l] = -sol.nullspace[l][jj];
    add_constraint(gr, -sol.particular[jj]);
  }
  // payoff rows need (U z(alpha))_s - v(alpha) per direction
  RatVec zpart(g.n, Rat(0));
  for (int jj = 0; jj < kb; ++jj) zpart[B[jj]] = sol.particular[jj];
  RatVec p0 = payoff_vector(g, zpart);
  std::vector<RatVec> pdir(d);
  for (int l = 0; l < d; ++l) {
    RatVec zl(g.n, Rat(0));
    for (int jj = 0; jj < kb; ++jj) zl[B[jj]] = sol.nullspace[l][jj];
    pdir[l] = payoff_vector(g, zl);
  }
  for (int s = 0; s < g.n; ++s) {
    if (indiff_mask >> s & 1) continue;
    RatVec gr(d);
    for (int l = 0; l < d; ++l) gr[l] = pdir[l][s] - sol.nullspace[l][kb];
    add_constraint(gr, p0[s] - sol.particular[kb]);
  }

  const int mc = static_cast<int>(con.size());
  if (mc < d) return out;  // feasible set is unbounded only if degenerate beyond repair; no vertices
  if (detail::binomial_guard(mc, d) > 2'000'000ULL)
    throw std::runtime_error("support_candidates: degenerate system too large to enumerate");

  std::set<std::string> seen;
  std::vector<int> pick(d);
  for (int i = 0; i < d; ++i) pick[i] = i;
  while (true) {
    std::vector<RatVec> sys;
    for (int i = 0; i < d; ++i) {
      RatVec row(d + 1);
      for (int l = 0; l < d; ++l) row[l] = con[pick[i]][l];
      row[d] = con[pick[i]][d];  // already -h
      sys.push_back(std::move(row));
    }
    LinearSolution vs = solve_exact(sys, d);
    if (vs.kind == SolveKind::unique) {
      bool feasible = true;
      for (int r = 0; r < mc && feasible; ++r) {
        Rat val = -con[r][d];  // h
        for (int l = 0; l < d; ++l) val += con[r][l] * vs.particular[l];
        if (sgn(val) > 0) feasible = false;
      }
      if (feasible) {
        RatVec zv(k);
        for (int c = 0; c < k; ++c) {
          zv[c] = sol.particular[c];
          for (int l = 0; l < d; ++l) zv[c] += sol.nullspace[l][c] * vs.particular[l];
        }
        if (auto z = try_embed(zv)) {
          if (seen.insert(detail::point_key(*z)).second) out.points.push_back(*z);
        }
      }
    }
    // next combination
    int i = d - 1;
    while (i >= 0 && pick[i] == mc - d + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < d; ++j) pick[j] = pick[j - 1] + 1;
  }
  out.positive_dimensional = out.points.size() >= 2;
  return out;
}

inline bool is_quasi_strict(const SymmetricGame& g, EquilibriumCertificate& cert) {
  RatVec uy = payoff_vector(g, cert.y);
  RatVec ux = payoff_vector(g, cert.x);
  cert.quasi_strict = (argmax_set(uy) == cert.support_x) && (argmax_set(ux) == cert.support_y);
  cert.strict = cert.quasi_strict && cert.support_x.size() == 1 && cert.support_y.size() == 1;
  return cert.quasi_strict;
}

// Complete support enumeration over all pairs of nonempty supports, exact
// throughout. Cost is exponential in n; guarded at n <= 12.
inline EnumerationResult enumerate_nash(const SymmetricGame& g) {
  if (g.n > 12) throw std::invalid_argument("enumerate_nash: n > 12 exceeds the combinatorial guard");
  const uint32_t full = (1u << g.n) - 1;
  std::map<std::pair<uint32_t, uint32_t>, CandidateSet> memo;
  auto cand = [&](uint32_t a, uint32_t b) -> const CandidateSet& {
    auto key = std::make_pair(a, b);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, support_candidates(g, a, b)).first;
    return it->second;
  };

  EnumerationResult res;
  std::set<std::string> seen;
  for (uint32_t I = 1; I <= full; ++I) {
    for (uint32_t J = 1; J <= full; ++J) {
      // evaluate the overdetermined side first: candidate sets with more
      // indifference constraints than support are cheap and usually empty,
      // which skips the expensive vertex enumeration of the partner side
      const bool x_side_cheaper = __builtin_popcount(J) > __builtin_popcount(I);
      if (x_side_cheaper && cand(J, I).points.empty()) continue;
      const CandidateSet& ys = cand(I, J);
      if (ys.points.empty()) continue;
      const CandidateSet& xs = cand(J, I);
      if (xs.points.empty()) continue;
      const bool deg = ys.positive_dimensional || xs.positive_dimensional;
      if (deg) res.degenerate = true;
      for (const RatVec& x : xs.points) {
        for (const RatVec& y : ys.points) {
          std::string key = detail::point_key(x) + "|" + detail::point_key(y);
          if (!seen.insert(key).second) continue;
          EquilibriumCertificate cert;
          cert.x = x;
          cert.y = y;
          cert.support_x = support_of(x);
          cert.support_y = support_of(y);
          cert.from_degenerate_support = deg;
          is_quasi_strict(g, cert);
          res.certificates.push_back(std::move(cert));
        }
      }
    }
  }
  return res;
}

inline std::optional<RatVec> completely_mixed_equilibrium(const SymmetricGame& g) {
  const uint32_t full = (1u << g.n) - 1;
  CandidateSet cs = support_candidates(g, full, full);
  if (cs.points.size() != 1 || cs.positive_dimensional) return std::nullopt;
  for (const Rat& q : cs.points[0])
    if (sgn(q) <= 0) return std::nullopt;
  return cs.points[0];
}

struct RestrictionCheck {
  bool hypothesis_ok = false;
  bool conclusion_ok = false;
  bool holds() const { return hypothesis_ok && conclusion_ok; }
};

// Restriction to I': if the payoffs against the off-I' remainders x - x' and
// y - y' are constant across I' (hypothesis), the restricted pair (x', y')
// must induce an unnormalized equilibrium of the I'xI' subgame (conclusion).
inline RestrictionCheck restriction_check(const SymmetricGame& g, const RatVec& x, const RatVec& y,
                                          const std::vector<int>& iprime) {
  if (static_cast<int>(x.size()) != g.n || static_cast<int>(y.size()) != g.n)
    throw std::invalid_argument("restriction_check: dimension mismatch");
  if (iprime.empty()) throw std::invalid_argument("restriction_check: empty I'");
  std::vector<bool> in(g.n, false);
  for (int i : iprime) in.at(i) = true;
  Rat mass_x = 0, mass_y = 0;
  for (int i : iprime) {
    mass_x += x[i];
    mass_y += y[i];
  }
  if (!(sgn(mass_x) > 0 && sgn(mass_y) > 0))
    throw std::invalid_argument("restriction_check: x(I') and y(I') must be positive");

  RatVec xp(g.n, Rat(0)), yp(g.n, Rat(0)), xr(g.n, Rat(0)), yr(g.n, Rat(0));
  for (int i = 0; i < g.n; ++i) {
    if (in[i]) {
      xp[i] = x[i];
      yp[i] = y[i];
    } else {
      xr[i] = x[i];
      yr[i] = y[i];
    }
  }

  RestrictionCheck rc;
  RatVec uyr = payoff_vector(g, yr);
  RatVec uxr = payoff_vector(g, xr);
  rc.hypothesis_ok = true;
  for (size_t t = 1; t < iprime.size(); ++t) {
    if (uyr[iprime[t]] != uyr[iprime[0]] || uxr[iprime[t]] != uxr[iprime[0]]) {
      rc.hypothesis_ok = false;
      break;
    }
  }

  RatVec uyp = payoff_vector(g, yp);
  RatVec uxp = payoff_vector(g, xp);
  rc.conclusion_ok = true;
  for (int i : iprime) {
    for (int j : iprime) {
      if (sgn(xp[i]) > 0 && uyp[i] < uyp[j]) rc.conclusion_ok = false;
      if (sgn(yp[i]) > 0 && uxp[i] < uxp[j]) rc.conclusion_ok = false;
    }
  }
  return rc;
}

// p strictly dominates q: p earns more than q against every pure strategy.
inline bool strictly_dominates(const SymmetricGame& g, const RatVec& p, const RatVec& q) {
  if (static_cast<int>(p.size()) != g.n || static_cast<int>(q.size()) != g.n)
    throw std::invalid_argument("strictly_dominates: dimension mismatch");
  for (int j = 0; j < g.n; ++j) {
    Rat pp = 0, qq = 0;
    for (int i = 0; i < g.n; ++i) {
      pp += p[i] * g.at(i, j);
      qq += q[i] * g.at(i, j);
    }
    if (!(pp > qq)) return false;
  }
  return true;
}

}  // namespace gamedyn
