#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gamedyn/equilibria.hpp"
#include "gamedyn/game.hpp"
#include "gamedyn/linalg.hpp"
#include "gamedyn/simplex.hpp"

namespace gamedyn {

inline std::vector<int> pure_best_replies(const SymmetricGame& g, const RatVec& x) {
  return argmax_set(payoff_vector(g, x));
}

// Float flavor with a relative tie tolerance; exploratory use only, the
// event integrator works on exact states.
inline std::vector<int> pure_best_replies(const SymmetricGame& g, const Vec& x,
                                          double tol_scale = 1e-12) {
  Vec p = payoff_vector(g, x);
  double mx = *std::max_element(p.begin(), p.end());
  double scale = 1.0;
  for (double v : p) scale = std::max(scale, std::abs(v));
  double tol = tol_scale * scale;
  std::vector<int> out;
  for (int i = 0; i < g.n; ++i)
    if (p[i] >= mx - tol) out.push_back(i);
  return out;
}

// One maximal straight piece of a best-reply orbit: x(t) follows
// e_target + (start - e_target) e^{-(t - t_start)}.
struct BRSegment {
  enum class EndReason { tie_event, horizon, equilibrium_reached };
  double t_start = 0;
  double duration = 0;   // clipped to the horizon when unbounded
  bool unbounded = false;
  RatVec start_state;
  int target = -1;
  EndReason end_reason = EndReason::horizon;
  std::vector<int> tie_with;  // strategies reaching the target's payoff at the end
  Rat w_end;                  // e^{-duration}, exact, valid for tie events
};

struct BREvent {
  double t = 0;
  std::vector<int> old_br, new_br;
};

enum class BRTermination { horizon, non_unique_continuation, equilibrium };

struct BRSolution {
  std::vector<BRSegment> segments;
  std::vector<BREvent> events;
  BRTermination termination = BRTermination::horizon;
  double final_time = 0;
  RatVec final_state;              // last exactly-representable state
  std::vector<int> non_unique_tie; // populated for non-unique terminations
};

struct NextEvent {
  bool has = false;
  Rat w;  // interpolation weight e^{-s*} of the first tie, rational
  std::vector<int> tying;
};

// Closed-form event finding along a segment aimed at `target`. The payoff
// gap of j evolves as g_j(s) = B_j + (A_j - B_j) e^{-s}; a future tie needs
// B_j > 0 and occurs at e^{-s*} = B_j / (B_j - A_j).
inline NextEvent next_event(const SymmetricGame& g, const RatVec& start, int target) {
  RatVec p = payoff_vector(g, start);
  NextEvent ev;
  Rat best_w = 0;
  for (int j = 0; j < g.n; ++j) {
    if (j == target) continue;
    Rat a = p[j] - p[target];
    Rat b = g.at(j, target) - g.at(target, target);
    if (sgn(a) > 0)
      throw std::invalid_argument("next_event: target is not a best reply at the segment start");
    if (sgn(a) == 0) {
      if (sgn(b) >= 0)
        throw std::invalid_argument("next_event: start tie does not resolve toward the target");
      continue;  // tied now, strictly worse immediately after
    }
    if (sgn(b) <= 0) continue;  // improvement principle: only better replies tie
    Rat w = b / (b - a);
    if (!ev.has || w > best_w) {
      ev.has = true;
      best_w = w;
      ev.tying = {j};
    } else if (w == best_w) {
      ev.tying.push_back(j);
    }
  }
  if (ev.has) ev.w = best_w;
  return ev;
}

enum class TiePolicy { dominance, fail };

// Resolves a best-reply tie. Only the resolution the analysis of these games
// needs is implemented: a pairwise tie where one strategy strictly dominates
// the other in the restricted 2x2 game. Anything else is non-unique.
inline std::optional<int> resolve_tie(const SymmetricGame& g, const RatVec&,
                                      const std::vector<int>& tied, TiePolicy policy) {
  if (tied.size() < 2) throw std::invalid_argument("resolve_tie: need at least two tied strategies");
  if (policy == TiePolicy::fail) return std::nullopt;
  if (tied.size() != 2) return std::nullopt;
  const int a = tied[0], b = tied[1];
  if (g.at(b, a) > g.at(a, a) && g.at(b, b) > g.at(a, b)) return b;
  if (g.at(a, b) > g.at(b, b) && g.at(a, a) > g.at(b, a)) return a;
  return std::nullopt;
}

struct BROptions {
  TiePolicy policy = TiePolicy::dominance;
  double event_gap_eps = 1e-12;  // inter-event duration marking accumulation
  double eq_dist_eps = 1e-9;     // proximity to the mixed equilibrium at accumulation
  size_t max_events = 1'000'000;
};

namespace detail {
// -ln(w) for w in (0,1), accurate both near 0 and near 1
inline double minus_log_rat(const Rat& w) {
  if (w > Rat(1, 2)) return -std::log1p(to_double(Rat(w - 1)));
  return -log_rat(w);
}
}  // namespace detail

// Event-driven exact integration of the best-reply dynamics. States at event
// times are exact rationals; physical times accumulate as floats.
inline BRSolution integrate_br(const SymmetricGame& g, const RatVec& x0, double T,
                               const BROptions& opt = {}) {
  if (!(T > 0)) throw std::invalid_argument("integrate_br: need T > 0");
  require_simplex(x0, "integrate_br");
  if (static_cast<int>(x0.size()) != g.n) throw std::invalid_argument("integrate_br: dimension mismatch");

  BRSolution sol;
  RatVec x = x0;
  double t = 0;
  int target;
  {
    auto brs = pure_best_replies(g, x);
    if (brs.size() > 1) {
      auto r = resolve_tie(g, x, brs, opt.policy);
      if (!r) {
        sol.termination = BRTermination::non_unique_continuation;
        sol.non_unique_tie = brs;
        sol.final_state = x;
        sol.final_time = 0;
        return sol;
      }
      target = *r;
    } else {
      target = brs[0];
    }
  }

  std::optional<RatVec> eq;
  bool eq_probed = false;

  while (true) {
    if (sol.segments.size() >= opt.max_events)
      throw std::runtime_error("integrate_br: event cap exceeded");

    NextEvent ev = next_event(g, x, target);
    BRSegment seg;
    seg.t_start = t;
    seg.start_state = x;
    seg.target = target;

    if (!ev.has) {
      seg.duration = T - t;
      seg.unbounded = true;
      seg.end_reason = BRSegment::EndReason::horizon;
      sol.segments.push_back(std::move(seg));
      sol.termination = BRTermination::horizon;
      sol.final_time = T;
      sol.final_state = x;
      return sol;
    }

    const double s = detail::minus_log_rat(ev.w);
    if (t + s >= T) {
      seg.duration = T - t;
      seg.end_reason = BRSegment::EndReason::horizon;
      sol.segments.push_back(std::move(seg));
      sol.termination = BRTermination::horizon;
      sol.final_time = T;
      sol.final_state = x;
      return sol;
    }

    if (s < opt.event_gap_eps) {
      if (!eq_probed) {
        eq = completely_mixed_equilibrium(g);
        eq_probed = true;
      }
      if (eq && linf_dist(x, *eq) < opt.eq_dist_eps) {
        seg.duration = s;
        seg.end_reason = BRSegment::EndReason::equilibrium_reached;
        seg.tie_with = ev.tying;
        sol.segments.push_back(std::move(seg));
        sol.termination = BRTermination::equilibrium;
        sol.final_time = t + s;
        sol.final_state = x;
        return sol;
      }
    }

    seg.duration = s;
    seg.end_reason = BRSegment::EndReason::tie_event;
    seg.tie_with = ev.tying;
    seg.w_end = ev.w;
    sol.segments.push_back(seg);

    RatVec xn(g.n);
    for (int i = 0; i < g.n; ++i)
      xn[i] = (i == target) ? Rat(ev.w * x[i] + (1 - ev.w)) : Rat(ev.w * x[i]);

    std::vector<int> new_br = ev.tying;
    new_br.push_back(target);
    std::sort(new_br.begin(), new_br.end());
    sol.events.push_back({t + s, {target}, new_br});

    auto nt = resolve_tie(g, xn, new_br, opt.policy);
    if (!nt) {
      sol.termination = BRTermination::non_unique_continuation;
      sol.non_unique_tie = new_br;
      sol.final_time = t + s;
      sol.final_state = xn;
      return sol;
    }
    // improvement principle, enforced at every transition
    if (*nt != target && !(g.at(*nt, target) > g.at(target, target)))
      throw std::logic_error("integrate_br: improvement principle violated");

    x = std::move(xn);
    t += s;
    target = *nt;
  }
}

// State along the piecewise flow at an arbitrary time (float view).
inline Vec br_state_at(const BRSolution& sol, double t) {
  if (sol.segments.empty()) return to_double(sol.final_state);
  t = std::max(0.0, std::min(t, sol.final_time));
  size_t k = sol.segments.size() - 1;
  for (size_t i = 0; i + 1 < sol.segments.size(); ++i) {
    if (t < sol.segments[i + 1].t_start) {
      k = i;
      break;
    }
  }
  const BRSegment& seg = sol.segments[k];
  double dt = std::min(t - seg.t_start, seg.duration);
  double f = std::exp(-dt);
  Vec out(seg.start_state.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double xs = to_double(seg.start_state[i]);
    double tgt = (static_cast<int>(i) == seg.target) ? 1.0 : 0.0;
    out[i] = tgt + (xs - tgt) * f;
  }
  return out;
}

// ln x_i(t), robust below double underflow for non-target strategies.
inline double br_log_share(const BRSolution& sol, int strategy, double t) {
  if (sol.segments.empty()) {
    const Rat& v = sol.final_state[strategy];
    return sgn(v) > 0 ? log_rat(v) : -std::numeric_limits<double>::infinity();
  }
  t = std::max(0.0, std::min(t, sol.final_time));
  size_t k = sol.segments.size() - 1;
  for (size_t i = 0; i + 1 < sol.segments.size(); ++i) {
    if (t < sol.segments[i + 1].t_start) {
      k = i;
      break;
    }
  }
  const BRSegment& seg = sol.segments[k];
  double dt = std::min(t - seg.t_start, seg.duration);
  if (strategy == seg.target) {
    double xs = to_double(seg.start_state[strategy]);
    return std::log1p(-(1 - xs) * std::exp(-dt));
  }
  const Rat& xs = seg.start_state[strategy];
  if (sgn(xs) == 0) return -std::numeric_limits<double>::infinity();
  return log_rat(xs) - dt;
}

// Shapley triangle on a 3-strategy face: vertices[k] is the event state at
// which the target hands over from face[k] to its cyclic successor (the
// vertex nearest e_face[k]).
struct ShapleyTriangleGeom {
  std::vector<int> face;           // host indices in cycle order
  std::array<RatVec, 3> vertices;  // host-dimensional simplex points
  std::array<Rat, 3> a_coeffs;     // diagonal payoffs of the face strategies
  int host_n = 0;
};

inline ShapleyTriangleGeom shapley_triangle(const RPSSpec& spec, const std::vector<int>& face,
                                            const SymmetricGame& host) {
  if (face.size() != 3) throw std::invalid_argument("shapley_triangle: face must have 3 strategies");
  if (!is_outward_cycling(spec))
    throw std::invalid_argument("shapley_triangle: triangle is degenerate or empty (not outward cycling)");
  ShapleyTriangleGeom geom;
  geom.face = face;
  geom.host_n = host.n;
  for (int k = 0; k < 3; ++k) geom.a_coeffs[k] = host.at(face[k], face[k]);

  auto embed = [&](const std::array<Rat, 3>& local) {
    RatVec v(host.n, Rat(0));
    for (int k = 0; k < 3; ++k) v[face[k]] = local[k];
    return v;
  };

  RPSSpec s = spec.form == RPSSpec::Form::cyclic ? normalize_to_epsilon(spec) : spec;
  if (s.form == RPSSpec::Form::epsilon) {
    const Rat& e = s.eps;
    Rat den = 1 + e + e * e;
    const Rat one = Rat(1) / den, ee = e / den, e2 = e * e / den;
    geom.vertices[0] = embed({one, e2, ee});
    geom.vertices[1] = embed({ee, one, e2});
    geom.vertices[2] = embed({e2, ee, one});
    return geom;
  }

  // general outward form: solve the tie system per cyclic pair on the face
  auto blk = restrict_game(host, face);
  for (int k = 0; k < 3; ++k) {
    const int i = k, j = (k + 1) % 3;
    std::vector<RatVec> aug;
    // (Uz)_i - (Uz)_j = 0
    {
      RatVec row(4, Rat(0));
      for (int c = 0; c < 3; ++c) row[c] = blk.at(i, c) - blk.at(j, c);
      aug.push_back(row);
    }
    // (Uz)_i - sum_m a_m z_m = 0
    {
      RatVec row(4, Rat(0));
      for (int c = 0; c < 3; ++c) row[c] = blk.at(i, c) - blk.at(c, c);
      aug.push_back(row);
    }
    {
      RatVec row = {Rat(1), Rat(1), Rat(1), Rat(1)};
      aug.push_back(row);
    }
    LinearSolution ls = solve_exact(aug, 3);
    if (ls.kind != SolveKind::unique)
      throw std::runtime_error("shapley_triangle: degenerate tie system");
    std::array<Rat, 3> local;
    for (int c = 0; c < 3; ++c) {
      if (sgn(ls.particular[c]) < 0)
        throw std::runtime_error("shapley_triangle: vertex outside the simplex");
      local[c] = ls.particular[c];
    }
    geom.vertices[k] = embed(local);
  }
  return geom;
}

// V(x) = max over the face of (Ux)_i minus the a-weighted face mass; zero on
// the triangle, positive outside, negative inside.
inline Rat v_value(const SymmetricGame& g, const ShapleyTriangleGeom& geom, const RatVec& x) {
  RatVec p = payoff_vector(g, x);
  Rat mx = p[geom.face[0]];
  for (int k = 1; k < 3; ++k) mx = std::max(mx, p[geom.face[k]]);
  Rat lvl = 0;
  for (int k = 0; k < 3; ++k) lvl += geom.a_coeffs[k] * x[geom.face[k]];
  return mx - lvl;
}

inline double v_value(const SymmetricGame& g, const ShapleyTriangleGeom& geom, const Vec& x) {
  Vec p = payoff_vector(g, x);
  double mx = p[geom.face[0]];
  for (int k = 1; k < 3; ++k) mx = std::max(mx, p[geom.face[k]]);
  double lvl = 0;
  for (int k = 0; k < 3; ++k) lvl += to_double(geom.a_coeffs[k]) * x[geom.face[k]];
  return mx - lvl;
}

// W(x): largest payoff spread within the face; bounded away from zero along
// locked-in cycling, which certifies that events cannot accumulate.
inline Rat gap_function_w(const SymmetricGame& g, const std::vector<int>& face, const RatVec& x) {
  if (face.size() != 3) throw std::invalid_argument("gap_function_w: face must have 3 strategies");
  RatVec p = payoff_vector(g, x);
  Rat mx = p[face[0]], mn = p[face[0]];
  for (int k = 1; k < 3; ++k) {
    mx = std::max(mx, p[face[k]]);
    mn = std::min(mn, p[face[k]]);
  }
  return mx - mn;
}

struct DecompCheckReport {
  int segments_checked = 0;
  int samples_checked = 0;
  int violations = 0;
  std::vector<std::string> notes;
};

namespace detail {

// exact state along a segment at rational weight w = e^{-(t - t_start)}
inline RatVec segment_state(const BRSegment& seg, const Rat& w) {
  RatVec z(seg.start_state.size());
  for (size_t i = 0; i < z.size(); ++i) {
    Rat tgt = (static_cast<int>(i) == seg.target) ? Rat(1) : Rat(0);
    z[i] = tgt + (seg.start_state[i] - tgt) * w;
  }
  return z;
}

}  // namespace detail

// Verifies the face decomposition of a best-reply orbit of the 7x7 game at
// exact sample states of every segment: when the target lies outside a face,
// the normalized face coordinates freeze; when it lies inside, they move
// straight toward the target with the nonnegative multiplier 1 + mass'/mass,
// and the target projects to a best reply of the face RPS game.
inline DecompCheckReport br_decomposition_check(const SymmetricGame& g77, const BRSolution& sol) {
  if (g77.n != 7) throw std::invalid_argument("br_decomposition_check: need the 7x7 game");
  auto rps = restrict_game(g77, {0, 1, 2});
  DecompCheckReport rep;

  auto note_violation = [&](double t, const std::string& what) {
    ++rep.violations;
    std::ostringstream os;
    os << "t=" << t << ": " << what;
    rep.notes.push_back(os.str());
  };

  for (const BRSegment& seg : sol.segments) {
    if (!(seg.duration > 0)) continue;
    ++rep.segments_checked;
    std::vector<Rat> weights;
    if (seg.end_reason == BRSegment::EndReason::tie_event) {
      weights = {Rat(1), Rat((1 + seg.w_end) / 2), seg.w_end};
    } else {
      weights = {Rat(1), Rat(1, 2), Rat(1, 4)};
    }
    for (const Rat& w : weights) {
      ++rep.samples_checked;
      RatVec z = detail::segment_state(seg, w);
      double t_sample = seg.t_start + detail::minus_log_rat(std::max(w, Rat(1, 1000000)));
      for (int side = 0; side < 2; ++side) {
        const int base = side == 0 ? 0 : 4;
        Rat mass = z[base] + z[base + 1] + z[base + 2];
        if (sgn(mass) == 0) continue;
        const bool target_inside = seg.target >= base && seg.target < base + 3;
        // exact face coordinates
        std::array<Rat, 3> bar;
        for (int c = 0; c < 3; ++c) bar[c] = z[base + c] / mass;
        if (!target_inside) {
          // frozen: must equal the segment-start face coordinates
          Rat m0 = seg.start_state[base] + seg.start_state[base + 1] + seg.start_state[base + 2];
          if (sgn(m0) != 0) {
            for (int c = 0; c < 3; ++c) {
              if (bar[c] * m0 != seg.start_state[base + c]) {
                note_violation(t_sample, side == 0 ? "xbar moved with outside target"
                                                   : "xhat moved with outside target");
                break;
              }
            }
          }
        } else {
          // moving side: target must be a face best reply at the normalized state
          RatVec barv = {bar[0], bar[1], bar[2]};
          auto br = pure_best_replies(rps, barv);
          int local = seg.target - base;
          if (std::find(br.begin(), br.end(), local) == br.end())
            note_violation(t_sample, "target does not project to a face best reply");
          // derivative identity: mass^2 * xbar' == mass * b - z_face
          // with xdot = b - x and mass' = 1 - mass on the moving side
          for (int c = 0; c < 3; ++c) {
            Rat xdot = (base + c == seg.target ? Rat(1) : Rat(0)) - z[base + c];
            Rat massdot = Rat(1) - mass;
            Rat lhs = xdot * mass - z[base + c] * massdot;          // mass^2 * d(xbar_c)/dt
            Rat rhs = ((base + c == seg.target ? Rat(1) : Rat(0)) - bar[c]) * mass;  // mass^2 * (1/mass)(b-xbar)
            if (lhs != rhs) {
              note_violation(t_sample, "face derivative mismatch");
              break;
            }
          }
          // multiplier 1 + mass'/mass = 1/mass must be nonnegative
          if (sgn(mass) < 0) note_violation(t_sample, "negative rescaling multiplier");
        }
      }
    }
  }
  return rep;
}

// CSV sampling of a BR solution at uniform times, same column layout as the
// trajectory export.
inline void write_br_csv(std::ostream& os, const BRSolution& sol, const SymmetricGame& g,
                         double dt) {
  const int n = g.n;
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  os << ",lambda,mu,avg_payoff\n";
  const int lo = std::min(3, n);
  for (double t = 0; t <= sol.final_time + 1e-12; t += dt) {
    Vec x = br_state_at(sol, t);
    double lambda = 0, mu = 0;
    for (int i = 0; i < lo; ++i) lambda += x[i];
    for (int i = std::max(0, n - 3); i < n; ++i) mu += x[i];
    os << t;
    for (double v : x) os << ',' << v;
    os << ',' << lambda << ',' << mu << ',' << average_payoff(g, x) << '\n';
  }
}

}  // namespace gamedyn
