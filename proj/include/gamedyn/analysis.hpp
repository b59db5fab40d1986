#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gamedyn/bestreply.hpp"
#include "gamedyn/game.hpp"
#include "gamedyn/replicator.hpp"
#include "gamedyn/trajectory.hpp"

namespace gamedyn {

enum class Verdict {
  converged_to_ST,
  converged_to_cycle,
  converged_to_equilibrium,
  eliminated,
  inconclusive
};

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::converged_to_ST: return "converged_to_ST";
    case Verdict::converged_to_cycle: return "converged_to_cycle";
    case Verdict::converged_to_equilibrium: return "converged_to_equilibrium";
    case Verdict::eliminated: return "eliminated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConvergenceReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<int> face;        // target face, 0-based strategy indices
  std::vector<int> eliminated;  // strategies judged eliminated
  std::map<std::string, double> metrics;
  uint64_t seed = 0;
  double horizon = 0;
  bool flagged = false;    // excluded by preconditions; not counted against the target
  bool target_met = false;
  std::string notes;
};

// max(mass off the face, |V(x)|): zero exactly on the Shapley triangle.
inline double distance_to_shapley(const SymmetricGame& g, const ShapleyTriangleGeom& geom,
                                  const Vec& x) {
  double off = 1.0;
  for (int f : geom.face) off -= x[f];
  off = std::max(0.0, off);
  return std::max(off, std::abs(v_value(g, geom, x)));
}

inline double distance_to_shapley(const SymmetricGame& g, const ShapleyTriangleGeom& geom,
                                  const RatVec& x) {
  Rat off = 1;
  for (int f : geom.face) off -= x[f];
  Rat v = abs(v_value(g, geom, x));
  return to_double(std::max(off, v));
}

// max(1 - mass on the face, smallest normalized face share): zero exactly on
// the heteroclinic cycle (face boundary).
inline double cycle_proximity(const Vec& x, const std::vector<int>& face) {
  double mass = 0;
  for (int f : face) mass += x[f];
  if (mass <= 0) return 1.0;
  double mn = 1.0;
  for (int f : face) mn = std::min(mn, x[f] / mass);
  return std::max(1.0 - mass, mn);
}

// Share of every listed strategy stays below `threshold` over the trailing
// window and ends below threshold/10 (transient comebacks would otherwise
// slip through a single-sample check).
inline bool elimination_check(const Trajectory& traj, const std::vector<int>& strategies,
                              double threshold, double window, int samples = 200) {
  if (window > traj.end_time())
    throw std::invalid_argument("elimination_check: run shorter than the window");
  const double t0 = traj.end_time() - window;
  for (int s = 0; s <= samples; ++s) {
    double t = t0 + window * s / samples;
    Vec x = traj.state_at(t);
    for (int i : strategies)
      if (x[i] >= threshold) return false;
  }
  Vec xf = traj.states.back();
  for (int i : strategies)
    if (xf[i] >= threshold / 10) return false;
  return true;
}

inline bool elimination_check(const BRSolution& sol, const std::vector<int>& strategies,
                              double threshold, double window, int samples = 200) {
  if (window > sol.final_time)
    throw std::invalid_argument("elimination_check: run shorter than the window");
  const double t0 = sol.final_time - window;
  const double lt = std::log(threshold);
  for (int s = 0; s <= samples; ++s) {
    double t = t0 + window * s / samples;
    for (int i : strategies)
      if (br_log_share(sol, i, t) >= lt) return false;
  }
  for (int i : strategies)
    if (br_log_share(sol, i, sol.final_time) >= lt + std::log(0.1)) return false;
  return true;
}

// Sampled observables of a 7x7 replicator run at the accepted step ends:
// the running integral of 4x3 - 3*lambda, the log ratios ln(x4/lambda) and
// ln(mu/lambda), both rescaled times, and the closed-form derivative of
// ln(mu/lambda) for cross-checking.
struct ClaimSeries {
  std::vector<double> t;
  std::vector<double> integral_4x3_3lambda;
  std::vector<double> ln_x4_over_lambda;
  std::vector<double> ln_mu_over_lambda;
  std::vector<double> taubar, tauhat;
  std::vector<double> dln_mu_lambda_rhs;
};

inline ClaimSeries claim_integrals(const SymmetricGame& g77, const Trajectory& traj) {
  if (traj.dim != 7) throw std::invalid_argument("claim_integrals: 7-strategy trajectory required");
  const Rat eps_rat = g77.at(0, 2);
  const double eps = to_double(eps_rat);
  auto rps = restrict_game(g77, {0, 1, 2});
  ClaimSeries cs;
  const size_t m = traj.times.size();
  cs.t.reserve(m);
  for (size_t k = 0; k < m; ++k) {
    const Vec& c = traj.cum[k];
    const Vec& l = traj.log_states[k];
    const Vec& x = traj.states[k];
    cs.t.push_back(traj.times[k]);
    double tb = c[0] + c[1] + c[2];
    double th = c[4] + c[5] + c[6];
    cs.taubar.push_back(tb);
    cs.tauhat.push_back(th);
    cs.integral_4x3_3lambda.push_back(4 * c[2] - 3 * tb);
    double lse_bar = detail::logsumexp(&l[0], 3);
    double lse_hat = detail::logsumexp(&l[4], 3);
    cs.ln_x4_over_lambda.push_back(l[3] - lse_bar);
    cs.ln_mu_over_lambda.push_back(lse_hat - lse_bar);
    // closed form of d/dt ln(mu/lambda)
    double lambda = x[0] + x[1] + x[2];
    double mu = x[4] + x[5] + x[6];
    Vec lbar = {l[0], l[1], l[2]}, lhat = {l[4], l[5], l[6]};
    Vec xbar, xhat;
    detail::softmax(lbar, xbar);
    detail::softmax(lhat, xhat);
    double bar_u = average_payoff(rps, xbar);
    double hat_u = average_payoff(rps, xhat);
    cs.dln_mu_lambda_rhs.push_back(mu * (hat_u + 1.0 / 3 - eps) - lambda * (1.0 / 3 + bar_u) +
                                   20 * x[3]);
  }
  return cs;
}

// Times of running-maximum peaks of a sampled series: local maxima that
// exceed every earlier value.
inline std::vector<double> record_peak_times(const std::vector<double>& t,
                                             const std::vector<double>& v) {
  std::vector<double> out;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t k = 1; k + 1 < v.size(); ++k) {
    if (v[k] >= v[k - 1] && v[k] > v[k + 1] && v[k] > best) {
      best = v[k];
      out.push_back(t[k]);
    }
  }
  return out;
}

struct RepClassifyParams {
  std::vector<int> face = {4, 5, 6};
  double off_face_tol = 1e-3;  // final mass off the face (and x4 in the 7x7 case)
  double prox_tol = 1e-3;
  double elim_threshold = 1e-3;
  double elim_window = 200;
};

inline ConvergenceReport classify_run(const SymmetricGame& g, const Trajectory& traj,
                                      const RepClassifyParams& prm = {}) {
  (void)g;
  ConvergenceReport rep;
  rep.face = prm.face;
  rep.horizon = traj.end_time();
  const Vec& xT = traj.states.back();
  double off = 1.0;
  for (int f : prm.face) off -= xT[f];
  off = std::max(0.0, off);
  double prox = cycle_proximity(xT, prm.face);
  std::vector<int> outside;
  for (int i = 0; i < traj.dim; ++i)
    if (std::find(prm.face.begin(), prm.face.end(), i) == prm.face.end()) outside.push_back(i);
  bool elim = outside.empty() ||
              (prm.elim_window <= traj.end_time() &&
               elimination_check(traj, outside, prm.elim_threshold, prm.elim_window));
  rep.metrics["final_off_face_mass"] = off;
  rep.metrics["final_cycle_proximity"] = prox;
  rep.metrics["elimination_ok"] = elim ? 1.0 : 0.0;
  for (int i : outside) rep.metrics["final_x" + std::to_string(i + 1)] = xT[i];
  if (off < prm.off_face_tol && prox < prm.prox_tol && elim) {
    rep.verdict = Verdict::converged_to_cycle;
    rep.eliminated = outside;
  } else if (elim && !outside.empty()) {
    rep.verdict = Verdict::eliminated;
    rep.eliminated = outside;
  } else {
    rep.verdict = Verdict::inconclusive;
  }
  return rep;
}

struct BRClassifyParams {
  std::vector<int> face = {3, 4, 5};
  double vertex_tol = 1e-8;
  int tail_events = 6;
  double elim_threshold = 1e-12;
  double elim_window = 20;
};

inline ConvergenceReport classify_run(const SymmetricGame& g, const BRSolution& sol,
                                      const ShapleyTriangleGeom& geom,
                                      const BRClassifyParams& prm = {}) {
  ConvergenceReport rep;
  rep.face = prm.face;
  rep.horizon = sol.final_time;

  if (sol.termination == BRTermination::equilibrium) {
    rep.verdict = Verdict::converged_to_equilibrium;
    rep.metrics["final_time"] = sol.final_time;
    rep.metrics["events"] = static_cast<double>(sol.events.size());
    return rep;
  }
  if (sol.termination == BRTermination::non_unique_continuation) {
    rep.verdict = Verdict::inconclusive;
    rep.notes = "non-unique continuation";
    return rep;
  }

  auto in_face = [&](int s) {
    return std::find(prm.face.begin(), prm.face.end(), s) != prm.face.end();
  };

  // lock-in: end of the last segment whose target lies off the face
  double lock_time = 0;
  bool locked = true;
  for (size_t k = 0; k < sol.segments.size(); ++k)
    if (!in_face(sol.segments[k].target)) lock_time = sol.segments[k].t_start + sol.segments[k].duration;
  if (!sol.segments.empty() && !in_face(sol.segments.back().target)) locked = false;

  // last event touching an off-face strategy (target or tie participant)
  double exit_time = 0;
  for (size_t k = 0; k < sol.events.size(); ++k) {
    bool touches = false;
    for (int s : sol.events[k].new_br)
      if (!in_face(s)) touches = true;
    for (int s : sol.events[k].old_br)
      if (!in_face(s)) touches = true;
    if (touches) exit_time = sol.events[k].t;
  }

  // tail event states against the exact triangle vertices
  double vertex_dist = std::numeric_limits<double>::infinity();
  double min_gap_w = std::numeric_limits<double>::infinity();
  int tail = std::min<int>(prm.tail_events, static_cast<int>(sol.segments.size()) - 1);
  if (tail > 0) {
    vertex_dist = 0;
    for (int k = 0; k < tail; ++k) {
      const RatVec& st = sol.segments[sol.segments.size() - 1 - k].start_state;
      double d = std::numeric_limits<double>::infinity();
      for (const RatVec& v : geom.vertices) d = std::min(d, linf_dist(st, v));
      vertex_dist = std::max(vertex_dist, d);
      min_gap_w = std::min(min_gap_w, to_double(gap_function_w(g, prm.face, st)));
    }
  }

  std::vector<int> outside;
  for (int i = 0; i < g.n; ++i)
    if (!in_face(i)) outside.push_back(i);
  bool elim = outside.empty() ||
              (prm.elim_window <= sol.final_time &&
               elimination_check(sol, outside, prm.elim_threshold, prm.elim_window));

  rep.metrics["lock_in_time"] = lock_time;
  rep.metrics["exit_time"] = exit_time;
  rep.metrics["tail_vertex_dist"] = vertex_dist;
  rep.metrics["min_face_gap_W"] = min_gap_w;
  rep.metrics["events"] = static_cast<double>(sol.events.size());
  rep.metrics["elimination_ok"] = elim ? 1.0 : 0.0;

  if (locked && vertex_dist < prm.vertex_tol && elim) {
    rep.verdict = Verdict::converged_to_ST;
    rep.eliminated = outside;
  } else if (elim && !outside.empty()) {
    rep.verdict = Verdict::eliminated;
    rep.eliminated = outside;
  } else {
    rep.verdict = Verdict::inconclusive;
  }
  return rep;
}

}  // namespace gamedyn
