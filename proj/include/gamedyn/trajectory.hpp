#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "gamedyn/game.hpp"
#include "gamedyn/ode.hpp"
#include "gamedyn/simplex.hpp"

namespace gamedyn {

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 1e-4;
  double h_max = 0.5;
  bool allow_faces = false;
  bool store_dense = true;  // keep per-step dense polynomials for state/quadrature queries
  int subsamples = 10;      // quadrature samples per accepted step
  size_t max_steps = 100'000'000;
};

namespace detail {

inline void softmax(const Vec& logs, Vec& out) {
  double m = -std::numeric_limits<double>::infinity();
  for (double l : logs) m = std::max(m, l);
  out.resize(logs.size());
  double s = 0;
  for (size_t i = 0; i < logs.size(); ++i) {
    out[i] = std::exp(logs[i] - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
}

inline double logsumexp(const double* l, int k) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) m = std::max(m, l[i]);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (int i = 0; i < k; ++i) s += std::exp(l[i] - m);
  return m + std::log(s);
}

// integral over [a, b] of the softmax states of one dense log-step, embedded
// into the full dimension: composite Simpson on K subintervals anchored at
// the step start, the trailing partial panel integrated on its parabola
inline Vec dense_state_quadrature(const StepDense& dsn, double a, double b, int K,
                                  const std::vector<int>& active, int dim) {
  Vec acc(dim, 0.0);
  const double d = dsn.h / K;
  Vec la, xa;
  Vec f0(dim), f1(dim), f2(dim);
  auto eval_state = [&](double s, Vec& out) {
    dsn.eval(s, la);
    softmax(la, xa);
    out.assign(dim, 0.0);
    for (size_t i = 0; i < active.size(); ++i) out[active[i]] = xa[i];
  };
  for (int p = 0; p < K / 2; ++p) {
    const double s0 = a + 2 * p * d;
    if (s0 >= b) break;
    eval_state(s0, f0);
    eval_state(s0 + d, f1);
    eval_state(s0 + 2 * d, f2);
    if (b >= s0 + 2 * d) {
      for (int i = 0; i < dim; ++i) acc[i] += d / 3 * (f0[i] + 4 * f1[i] + f2[i]);
    } else {
      const double u = (b - s0) / d;  // in [0, 2)
      const double w0 = u - 0.75 * u * u + u * u * u / 6;
      const double w1 = u * u - u * u * u / 3;
      const double w2 = u * u * u / 6 - 0.25 * u * u;
      for (int i = 0; i < dim; ++i) acc[i] += d * (w0 * f0[i] + w1 * f1[i] + w2 * f2[i]);
      break;
    }
  }
  return acc;
}

}  // namespace detail

// Replicator orbit in log coordinates: per-step states, unnormalized
// (recentred) log weights, cumulative state integrals, and the dense
// interpolation polynomials of the integrator.
class Trajectory {
 public:
  int dim = 0;
  std::vector<int> active;        // strategies carried by the integrator; others are exactly 0
  std::vector<double> times;      // accepted step ends, starting at 0
  std::vector<Vec> states;        // full-dimensional simplex points
  std::vector<Vec> log_states;    // full-dimensional; -inf on inactive strategies
  std::vector<Vec> cum;           // cumulative integral of x at step ends
  std::vector<StepDense> dense;   // active-coordinate log polynomials, step k covers [t_k, t_k+1]
  bool has_dense = false;
  int subsamples = 10;

  double end_time() const { return times.back(); }
  size_t steps() const { return times.size() - 1; }

  // index k with times[k] <= t <= times[k+1]
  size_t locate(double t) const {
    if (t < 0 || t > times.back() * (1 + 1e-12) + 1e-300)
      throw std::out_of_range("Trajectory: time outside range");
    t = std::min(t, times.back());
    size_t k = static_cast<size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    if (k > 0) --k;
    if (k >= steps() && steps() > 0) k = steps() - 1;
    return k;
  }

  // Unnormalized log weights at time t (full dimension, -inf off the active set).
  Vec log_state_at(double t) const {
    if (times.size() == 1 || t >= times.back()) return log_states.back();
    size_t k = locate(t);
    if (t == times[k]) return log_states[k];
    Vec la(active.size());
    if (has_dense) {
      dense[k].eval(t, la);
    } else {
      double w = (t - times[k]) / (times[k + 1] - times[k]);
      for (size_t i = 0; i < active.size(); ++i) {
        double l0 = log_states[k][active[i]];
        double l1 = log_states[k + 1][active[i]];
        la[i] = (1 - w) * l0 + w * l1;
      }
    }
    double m = *std::max_element(la.begin(), la.end());
    Vec full(dim, -std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < active.size(); ++i) full[active[i]] = la[i] - m;
    return full;
  }

  Vec state_at(double t) const {
    Vec logs = log_state_at(t);
    Vec xa(active.size());
    Vec la(active.size());
    for (size_t i = 0; i < active.size(); ++i) la[i] = logs[active[i]];
    detail::softmax(la, xa);
    Vec full(dim, 0.0);
    for (size_t i = 0; i < active.size(); ++i) full[active[i]] = xa[i];
    return full;
  }

  // Quadrature of the state over [times[k], min(t, times[k+1])]; exact
  // Simpson panels from the step's dense output, a linear share of the
  // stored step integral when dense data was dropped.
  Vec step_partial_integral(size_t k, double t) const {
    const double a = times[k];
    const double b = std::min(t, times[k + 1]);
    if (!has_dense) {
      Vec acc(dim, 0.0);
      double w = (b - a) / (times[k + 1] - times[k]);
      for (int i = 0; i < dim; ++i) acc[i] = (cum[k + 1][i] - cum[k][i]) * w;
      return acc;
    }
    return detail::dense_state_quadrature(dense[k], a, b, subsamples, active, dim);
  }

  // cumulative integral of x over [0, t]
  Vec cum_at(double t) const {
    if (t >= times.back()) return cum.back();
    size_t k = locate(t);
    Vec out = cum[k];
    if (t > times[k]) {
      Vec part = step_partial_integral(k, t);
      for (int i = 0; i < dim; ++i) out[i] += part[i];
    }
    return out;
  }
};

// Integrates the replicator dynamics in log coordinates: l_i' = (Ux)_i - x.Ux
// with x recovered by normalized exponentiation. Faces are invariant
// structurally: zero strategies are excluded from the integrated set.
inline Trajectory integrate_rep(const SymmetricGame& g, const Vec& x0, double T,
                                const IntegrateOptions& opt = {}) {
  if (!(T > 0)) throw std::invalid_argument("integrate_rep: need T > 0");
  require_simplex(x0, "integrate_rep", 1e-9);
  if (static_cast<int>(x0.size()) != g.n) throw std::invalid_argument("integrate_rep: dimension mismatch");

  Trajectory traj;
  traj.dim = g.n;
  traj.subsamples = opt.subsamples;
  traj.has_dense = opt.store_dense;
  for (int i = 0; i < g.n; ++i) {
    if (x0[i] > 0)
      traj.active.push_back(i);
    else if (!opt.allow_faces)
      throw std::invalid_argument("integrate_rep: start not interior (set allow_faces to permit)");
  }
  const int na = static_cast<int>(traj.active.size());

  std::vector<double> sub(na * na);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j) sub[i * na + j] = g.atd(traj.active[i], traj.active[j]);

  Vec x(na), pay(na);
  auto rhs = [&](double, const Vec& logs, Vec& out) {
    detail::softmax(logs, x);
    double avg = 0;
    for (int i = 0; i < na; ++i) {
      double s = 0;
      for (int j = 0; j < na; ++j) s += sub[i * na + j] * x[j];
      pay[i] = s;
      avg += x[i] * s;
    }
    out.resize(na);
    for (int i = 0; i < na; ++i) out[i] = pay[i] - avg;
  };

  Vec l0(na);
  {
    double m = 0;
    for (int i = 0; i < na; ++i) m = std::max(m, x0[traj.active[i]]);
    for (int i = 0; i < na; ++i) l0[i] = std::log(x0[traj.active[i]] / m);
  }

  auto record = [&](const Vec& logs_active, double t) {
    Vec xa(na);
    detail::softmax(logs_active, xa);
    Vec full(g.n, 0.0), lfull(g.n, -std::numeric_limits<double>::infinity());
    double m = *std::max_element(logs_active.begin(), logs_active.end());
    for (int i = 0; i < na; ++i) {
      full[traj.active[i]] = xa[i];
      lfull[traj.active[i]] = logs_active[i] - m;
    }
    traj.times.push_back(t);
    traj.states.push_back(std::move(full));
    traj.log_states.push_back(std::move(lfull));
  };

  record(l0, 0.0);
  traj.cum.push_back(Vec(g.n, 0.0));

  OdeOptions oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  oo.h_init = opt.h_init;
  oo.h_max = opt.h_max;
  oo.max_steps = opt.max_steps;

  Vec cum_run(g.n, 0.0);
  integrate_adaptive(
      rhs, l0, 0.0, T, oo,
      [&](const StepDense& dsn, double t, Vec& y, const Vec&) {
        record(y, t);
        // recenter the integrator state; the rhs is invariant under common shifts
        double m = *std::max_element(y.begin(), y.end());
        for (double& v : y) v -= m;
        Vec inc = detail::dense_state_quadrature(dsn, dsn.t0, dsn.t0 + dsn.h, opt.subsamples,
                                                 traj.active, g.n);
        for (int i = 0; i < g.n; ++i) cum_run[i] += inc[i];
        traj.cum.push_back(cum_run);
        if (traj.has_dense) traj.dense.push_back(dsn);
      });
  return traj;
}

// (1/t) * integral of x over [0, t]
inline Vec time_average(const Trajectory& traj, double t) {
  if (!(t > 0) || t > traj.end_time() * (1 + 1e-12))
    throw std::out_of_range("time_average: t outside (0, end]");
  Vec c = traj.cum_at(t);
  for (double& v : c) v /= t;
  return c;
}

enum class FaceSide { bar, hat };

// taubar(t) = int_0^t lambda, tauhat(t) = int_0^t mu (7-strategy states)
inline double rescaled_time(const Trajectory& traj, double t, FaceSide side) {
  if (traj.dim != 7) throw std::invalid_argument("rescaled_time: dimension must be 7");
  if (t < 0 || t > traj.end_time() * (1 + 1e-12)) throw std::out_of_range("rescaled_time: t outside range");
  Vec c = traj.cum_at(t);
  return side == FaceSide::bar ? c[0] + c[1] + c[2] : c[4] + c[5] + c[6];
}

struct RescaleReport {
  double sup_bar = 0;    // sup_t |xbar(t) - y(taubar(t))|_inf
  double sup_hat = 0;    // sup_t |xhat(t) - z(tauhat(t))|_inf
  double taubar_end = 0;
  double tauhat_end = 0;
};

// Cross-checks the time-rescaling decomposition: the normalized face
// coordinates of the 7x7 orbit must retrace the 3x3 RPS replicator orbit run
// in rescaled time. Both sides are integrated independently.
inline RescaleReport verify_rescale_lemma(const SymmetricGame& g77, const Vec& x0, double T,
                                          const IntegrateOptions& opt = {}, int samples = 2000) {
  if (g77.n != 7) throw std::invalid_argument("verify_rescale_lemma: need the 7x7 game");
  for (double v : x0)
    if (!(v > 0)) throw std::invalid_argument("verify_rescale_lemma: start must be interior");

  IntegrateOptions dense_opt = opt;
  dense_opt.store_dense = true;
  Trajectory traj = integrate_rep(g77, x0, T, dense_opt);

  auto face_point = [&](const Vec& logs, int base) {
    Vec la = {logs[base], logs[base + 1], logs[base + 2]};
    Vec out;
    detail::softmax(la, out);
    return out;
  };

  auto rps = restrict_game(g77, {0, 1, 2});  // both corner blocks are identical
  Vec ybar0 = face_point(traj.log_states[0], 0);
  Vec yhat0 = face_point(traj.log_states[0], 4);

  RescaleReport rep;
  rep.taubar_end = rescaled_time(traj, T, FaceSide::bar);
  rep.tauhat_end = rescaled_time(traj, T, FaceSide::hat);

  Trajectory bar_traj = integrate_rep(rps, ybar0, rep.taubar_end + 1e-6, dense_opt);
  Trajectory hat_traj = integrate_rep(rps, yhat0, rep.tauhat_end + 1e-6, dense_opt);

  for (int s = 0; s <= samples; ++s) {
    double t = T * s / samples;
    Vec logs = traj.log_state_at(t);
    Vec xbar = face_point(logs, 0);
    Vec xhat = face_point(logs, 4);
    Vec yb = bar_traj.state_at(std::min(rescaled_time(traj, t, FaceSide::bar), bar_traj.end_time()));
    Vec yh = hat_traj.state_at(std::min(rescaled_time(traj, t, FaceSide::hat), hat_traj.end_time()));
    rep.sup_bar = std::max(rep.sup_bar, linf_dist(xbar, yb));
    rep.sup_hat = std::max(rep.sup_hat, linf_dist(xhat, yh));
  }
  return rep;
}

// CSV export: t,x1,...,xN,lambda,mu,avg_payoff at the requested sample times.
// lambda is the mass of the first three strategies, mu of the last three.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const SymmetricGame& g,
                                 const std::vector<double>& sample_times) {
  os << "t";
  for (int i = 1; i <= traj.dim; ++i) os << ",x" << i;
  os << ",lambda,mu,avg_payoff\n";
  const int lo = std::min(3, traj.dim);
  for (double t : sample_times) {
    Vec x = traj.state_at(t);
    double lambda = 0, mu = 0;
    for (int i = 0; i < lo; ++i) lambda += x[i];
    for (int i = std::max(0, traj.dim - 3); i < traj.dim; ++i) mu += x[i];
    os << t;
    for (double v : x) os << ',' << v;
    os << ',' << lambda << ',' << mu << ',' << average_payoff(g, x) << '\n';
  }
}

// Raw log-state dump (dim, step count, then t + active logs per step);
// enough to reseed a run from its final state.
inline void write_logstates_binary(std::ostream& os, const Trajectory& traj) {
  auto put = [&](const void* p, size_t n) { os.write(static_cast<const char*>(p), n); };
  int32_t dim = traj.dim, na = static_cast<int>(traj.active.size());
  uint64_t count = traj.times.size();
  put(&dim, 4);
  put(&na, 4);
  put(&count, 8);
  for (int a : traj.active) {
    int32_t v = a;
    put(&v, 4);
  }
  for (size_t k = 0; k < count; ++k) {
    put(&traj.times[k], 8);
    for (int a : traj.active) put(&traj.log_states[k][a], 8);
  }
}

}  // namespace gamedyn
