#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "gamedyn/game.hpp"
#include "gamedyn/simplex.hpp"

namespace gamedyn {

// xdot_i = x_i [ (Ux)_i - x.Ux ]
inline Vec rep_rhs(const SymmetricGame& g, const Vec& x) {
  Vec p = payoff_vector(g, x);
  double avg = 0;
  for (int i = 0; i < g.n; ++i) avg += x[i] * p[i];
  Vec dx(g.n);
  for (int i = 0; i < g.n; ++i) dx[i] = x[i] * (p[i] - avg);
  return dx;
}

inline RatVec rep_rhs(const SymmetricGame& g, const RatVec& x) {
  RatVec p = payoff_vector(g, x);
  Rat avg = 0;
  for (int i = 0; i < g.n; ++i) avg += x[i] * p[i];
  RatVec dx(g.n);
  for (int i = 0; i < g.n; ++i) dx[i] = x[i] * (p[i] - avg);
  return dx;
}

namespace detail {
inline Rat min_entry(const SymmetricGame& g) {
  Rat m = g.payoff[0];
  for (const Rat& q : g.payoff) m = std::min(m, q);
  return m;
}
}  // namespace detail

// One step of the discrete-time replicator map:
//   x_i <- x_i (C + (Ux)_i) / (C + x.Ux).
// The checkable sufficient bound C > -min_ij u_ij keeps numerators positive.
inline RatVec discrete_rep_step(const SymmetricGame& g, const RatVec& x, const Rat& C) {
  require_simplex(x, "discrete_rep_step");
  if (!(C > -detail::min_entry(g)))
    throw std::invalid_argument("discrete_rep_step: need C > -min_ij u_ij");
  RatVec p = payoff_vector(g, x);
  Rat avg = 0;
  for (int i = 0; i < g.n; ++i) avg += x[i] * p[i];
  RatVec out(g.n);
  for (int i = 0; i < g.n; ++i) out[i] = x[i] * (C + p[i]) / (C + avg);
  return out;
}

inline Vec discrete_rep_step(const SymmetricGame& g, const Vec& x, double C) {
  require_simplex(x, "discrete_rep_step", 1e-9);
  if (!(C > -to_double(detail::min_entry(g))))
    throw std::invalid_argument("discrete_rep_step: need C > -min_ij u_ij");
  Vec p = payoff_vector(g, x);
  double avg = 0;
  for (int i = 0; i < g.n; ++i) avg += x[i] * p[i];
  Vec out(g.n);
  for (int i = 0; i < g.n; ++i) out[i] = x[i] * (C + p[i]) / (C + avg);
  return out;
}

// Payoff-functional dynamics: xdot_i = x_i [ f((Ux)_i) - sum_j x_j f((Ux)_j) ].
inline Vec functional_rhs(const SymmetricGame& g, const Vec& x,
                          const std::function<double(double)>& f) {
  Vec p = payoff_vector(g, x);
  Vec fp(g.n);
  double favg = 0;
  for (int i = 0; i < g.n; ++i) {
    fp[i] = f(p[i]);
    if (!std::isfinite(fp[i])) throw std::runtime_error("functional_rhs: non-finite f value");
    favg += x[i] * fp[i];
  }
  Vec dx(g.n);
  for (int i = 0; i < g.n; ++i) dx[i] = x[i] * (fp[i] - favg);
  return dx;
}

// Face-mass decomposition of a 7-strategy state: lambda = x1+x2+x3,
// mu = x5+x6+x7, with the normalized face coordinates when defined.
struct Decomposition {
  double lambda = 0, mu = 0;
  Vec xbar, xhat;  // size 3 when defined
  bool xbar_defined = false, xhat_defined = false;
};

inline Decomposition decompose(const Vec& x) {
  if (x.size() != 7) throw std::invalid_argument("decompose: dimension must be 7");
  Decomposition d;
  d.lambda = x[0] + x[1] + x[2];
  d.mu = x[4] + x[5] + x[6];
  if (d.lambda > 0) {
    d.xbar = {x[0] / d.lambda, x[1] / d.lambda, x[2] / d.lambda};
    d.xbar_defined = true;
  }
  if (d.mu > 0) {
    d.xhat = {x[4] / d.mu, x[5] / d.mu, x[6] / d.mu};
    d.xhat_defined = true;
  }
  return d;
}

}  // namespace gamedyn
