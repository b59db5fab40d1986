#pragma once

#include <array>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gamedyn/rational.hpp"
#include "gamedyn/simplex.hpp"

namespace gamedyn {

// Symmetric two-player game. Entry (i,j) is the payoff of strategy i against
// strategy j, stored as an exact rational with a derived float view.
struct SymmetricGame {
  int n = 0;
  std::vector<Rat> payoff;      // row-major, n*n
  std::vector<double> payoff_d; // float view, rounded-to-nearest per entry

  const Rat& at(int i, int j) const { return payoff[static_cast<size_t>(i) * n + j]; }
  double atd(int i, int j) const { return payoff_d[static_cast<size_t>(i) * n + j]; }
};

inline SymmetricGame make_game(int n, std::vector<Rat> entries) {
  if (n < 2) throw std::invalid_argument("make_game: need n >= 2");
  if (entries.size() != static_cast<size_t>(n) * n)
    throw std::invalid_argument("make_game: entry count is not n*n");
  SymmetricGame g;
  g.n = n;
  g.payoff = std::move(entries);
  g.payoff_d.resize(g.payoff.size());
  for (size_t k = 0; k < g.payoff.size(); ++k) g.payoff_d[k] = to_double(g.payoff[k]);
  return g;
}

// Rock-Paper-Scissors parameter forms. The three forms are kept distinct
// rather than normalized eagerly: outwardness and triangle formulas attach
// to specific forms.
struct RPSSpec {
  enum class Form { general, cyclic, epsilon };
  Form form = Form::cyclic;
  std::array<Rat, 3> a{}, b{}, c{};  // general: b_i < a_i < c_i
  Rat alpha, beta;                   // cyclic: alpha, beta > 0
  Rat eps;                           // epsilon: 0 < eps < 1

  static RPSSpec general(std::array<Rat, 3> a, std::array<Rat, 3> b, std::array<Rat, 3> c) {
    RPSSpec s;
    s.form = Form::general;
    s.a = std::move(a);
    s.b = std::move(b);
    s.c = std::move(c);
    s.validate();
    return s;
  }
  static RPSSpec cyclic(Rat alpha, Rat beta) {
    RPSSpec s;
    s.form = Form::cyclic;
    s.alpha = std::move(alpha);
    s.beta = std::move(beta);
    s.validate();
    return s;
  }
  static RPSSpec epsilon(Rat eps) {
    RPSSpec s;
    s.form = Form::epsilon;
    s.eps = std::move(eps);
    s.validate();
    return s;
  }

  void validate() const {
    switch (form) {
      case Form::general:
        for (int i = 0; i < 3; ++i)
          if (!(b[i] < a[i] && a[i] < c[i]))
            throw std::invalid_argument("RPSSpec: general form needs b_i < a_i < c_i");
        break;
      case Form::cyclic:
        if (!(sgn(alpha) > 0 && sgn(beta) > 0))
          throw std::invalid_argument("RPSSpec: cyclic form needs alpha, beta > 0");
        break;
      case Form::epsilon:
        if (!(sgn(eps) > 0 && eps < 1))
          throw std::invalid_argument("RPSSpec: epsilon form needs 0 < eps < 1");
        break;
    }
  }
};

inline SymmetricGame build_rps(const RPSSpec& spec) {
  spec.validate();
  switch (spec.form) {
    case RPSSpec::Form::general: {
      const auto& a = spec.a;
      const auto& b = spec.b;
      const auto& c = spec.c;
      return make_game(3, {a[0], b[1], c[2],
                           c[0], a[1], b[2],
                           b[0], c[1], a[2]});
    }
    case RPSSpec::Form::cyclic: {
      const Rat& al = spec.alpha;
      const Rat& be = spec.beta;
      return make_game(3, {Rat(0), -al, be,
                           be, Rat(0), -al,
                           -al, be, Rat(0)});
    }
    case RPSSpec::Form::epsilon: {
      const Rat& e = spec.eps;
      return make_game(3, {Rat(0), Rat(-1), e,
                           e, Rat(0), Rat(-1),
                           Rat(-1), e, Rat(0)});
    }
  }
  throw std::logic_error("build_rps: unreachable");
}

// The 6x6 game: two outward cyclic RPS blocks, cyclic(3,1) on {1,2,3} and
// cyclic(5,1) on {4,5,6}, with cross payoffs that keep n_123 an equilibrium
// and give strategy 4 the edge at the {1,2,3}-triangle vertex nearest e_3.
inline SymmetricGame build_game_66() {
  auto q = [](long v) { return Rat(v); };
  return make_game(6, {
      q(0),  q(-3), q(1),  q(-1), q(-1), q(-1),
      q(1),  q(0),  q(-3), q(-1), q(-1), q(-1),
      q(-3), q(1),  q(0),  q(-1), q(-1), q(-1),
      q(-4), q(-4), q(3),  q(0),  q(-5), q(1),
      q(-1), q(-1), q(-3), q(1),  q(0),  q(-5),
      q(-1), q(-1), q(-3), q(-5), q(1),  q(0)});
}

// The 7x7 game: epsilon-form RPS blocks on {1,2,3} and {5,6,7} coupled
// through strategy 4.
inline SymmetricGame build_game_77(const Rat& eps) {
  if (!(sgn(eps) > 0 && eps < Rat(1, 6)))
    throw std::invalid_argument("build_game_77: need 0 < eps < 1/6");
  const Rat e = eps;
  const Rat t = Rat(-1, 3) + e;  // cross payoff of 1..3 against 5..7
  const Rat th = Rat(-1, 3);
  return make_game(7, {
      Rat(0), Rat(-1), e,       Rat(-10), t,       t,       t,
      e,      Rat(0),  Rat(-1), Rat(-10), t,       t,       t,
      Rat(-1), e,      Rat(0),  Rat(-10), t,       t,       t,
      Rat(-2), Rat(-2), Rat(2), Rat(0),   th,      th,      th,
      th,     th,      th,      Rat(10),  Rat(0),  Rat(-1), e,
      th,     th,      th,      Rat(10),  e,       Rat(0),  Rat(-1),
      th,     th,      th,      Rat(10),  Rat(-1), e,       Rat(0)});
}

inline RatVec payoff_vector(const SymmetricGame& g, const RatVec& x) {
  if (static_cast<int>(x.size()) != g.n) throw std::invalid_argument("payoff_vector: dimension mismatch");
  RatVec p(g.n, Rat(0));
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (sgn(x[j]) != 0) p[i] += g.at(i, j) * x[j];
  return p;
}

inline Vec payoff_vector(const SymmetricGame& g, const Vec& x) {
  if (static_cast<int>(x.size()) != g.n) throw std::invalid_argument("payoff_vector: dimension mismatch");
  Vec p(g.n, 0.0);
  for (int i = 0; i < g.n; ++i) {
    double s = 0;
    for (int j = 0; j < g.n; ++j) s += g.atd(i, j) * x[j];
    p[i] = s;
  }
  return p;
}

inline Rat average_payoff(const SymmetricGame& g, const RatVec& x) {
  RatVec p = payoff_vector(g, x);
  Rat s = 0;
  for (int i = 0; i < g.n; ++i) s += x[i] * p[i];
  return s;
}

inline double average_payoff(const SymmetricGame& g, const Vec& x) {
  Vec p = payoff_vector(g, x);
  double s = 0;
  for (int i = 0; i < g.n; ++i) s += x[i] * p[i];
  return s;
}

// Transition semantics: edge (i,j) iff j can become a best reply at the end
// of a segment pointing at i, i.e. u_ji > u_ii.
inline std::set<std::pair<int, int>> better_reply_edges(const SymmetricGame& g) {
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && g.at(j, i) > g.at(i, i)) edges.insert({i, j});
  return edges;
}

// Row convention (u_ij > u_ii): kept alongside the transition semantics
// because the two differ by transposition for asymmetric payoff patterns.
inline std::set<std::pair<int, int>> better_reply_edges_rowwise(const SymmetricGame& g) {
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && g.at(i, j) > g.at(i, i)) edges.insert({i, j});
  return edges;
}

inline bool is_outward_cycling(const RPSSpec& spec) {
  spec.validate();
  switch (spec.form) {
    case RPSSpec::Form::general: {
      Rat lhs = 1, rhs = 1;
      for (int i = 0; i < 3; ++i) {
        lhs *= spec.a[i] - spec.b[i];
        rhs *= spec.c[i] - spec.a[i];
      }
      return lhs > rhs;
    }
    case RPSSpec::Form::cyclic:
      return spec.alpha > spec.beta;
    case RPSSpec::Form::epsilon:
      return true;  // 1 > eps^3 whenever 0 < eps < 1
  }
  throw std::logic_error("is_outward_cycling: unreachable");
}

// Outward cyclic games rescale to the epsilon form by dividing payoffs by
// alpha; neither the equilibrium nor the dynamics are affected.
inline RPSSpec normalize_to_epsilon(const RPSSpec& spec) {
  if (spec.form == RPSSpec::Form::epsilon) return spec;
  if (spec.form != RPSSpec::Form::cyclic)
    throw std::invalid_argument("normalize_to_epsilon: only cyclic form supported");
  if (!(spec.alpha > spec.beta))
    throw std::invalid_argument("normalize_to_epsilon: requires an outward cyclic game");
  return RPSSpec::epsilon(spec.beta / spec.alpha);
}

inline SymmetricGame restrict_game(const SymmetricGame& g, const std::vector<int>& idx) {
  std::vector<Rat> sub;
  sub.reserve(idx.size() * idx.size());
  for (int i : idx)
    for (int j : idx) sub.push_back(g.at(i, j));
  return make_game(static_cast<int>(idx.size()), std::move(sub));
}

// Reads a general-form RPS spec off a 3x3 diagonal block. Column i of the
// block carries (a_i, c_i, b_i) cyclically.
inline RPSSpec rps_spec_from_block(const SymmetricGame& g, const std::array<int, 3>& face) {
  std::array<Rat, 3> a, b, c;
  for (int k = 0; k < 3; ++k) {
    a[k] = g.at(face[k], face[k]);
    c[k] = g.at(face[(k + 1) % 3], face[k]);
    b[k] = g.at(face[(k + 2) % 3], face[k]);
  }
  return RPSSpec::general(a, b, c);
}

}  // namespace gamedyn
