#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gamedyn/analysis.hpp"
#include "gamedyn/bestreply.hpp"
#include "gamedyn/equilibria.hpp"
#include "gamedyn/game.hpp"
#include "gamedyn/json_io.hpp"
#include "gamedyn/trajectory.hpp"

namespace gamedyn {

struct ExperimentConfig {
  std::string name;
  int count = 0;          // 0 = experiment default
  uint64_t seed = 1;
  double horizon = 0;     // 0 = experiment default
  Rat eps = 0;            // 0 = experiment default
  Rat delta = 0;
  Rat alpha = 0, beta = 0;  // cyclic RPS parameters (rps-br)
  int runs_per_game = 20;
  double rtol = 1e-9;
  double atol = 1e-12;
  std::string out_dir;
  int threads = 1;

  json to_json() const {
    json j;
    j["experiment"] = name;
    j["count"] = count;
    j["seed"] = seed;
    j["T"] = horizon;
    j["eps"] = eps.get_str();
    j["delta"] = delta.get_str();
    j["alpha"] = alpha.get_str();
    j["beta"] = beta.get_str();
    j["runs_per_game"] = runs_per_game;
    j["rtol"] = rtol;
    j["atol"] = atol;
    j["out_dir"] = out_dir;
    return j;
  }
};

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("experiment")) c.name = j["experiment"].get<std::string>();
  if (j.contains("count")) c.count = j["count"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("T")) c.horizon = j["T"].get<double>();
  if (j.contains("eps")) c.eps = parse_rational(j["eps"].get<std::string>());
  if (j.contains("delta")) c.delta = parse_rational(j["delta"].get<std::string>());
  if (j.contains("alpha")) c.alpha = parse_rational(j["alpha"].get<std::string>());
  if (j.contains("beta")) c.beta = parse_rational(j["beta"].get<std::string>());
  if (j.contains("runs_per_game")) c.runs_per_game = j["runs_per_game"].get<int>();
  if (j.contains("rtol")) c.rtol = j["rtol"].get<double>();
  if (j.contains("atol")) c.atol = j["atol"].get<double>();
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  return c;
}

struct ExperimentResult {
  std::vector<ConvergenceReport> reports;
  std::map<std::string, int> verdict_counts;
  bool all_ok = true;
  std::string summary;
  json config;
};

namespace detail {

inline uint64_t run_seed(uint64_t base, int index) {
  return splitmix64(base ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(index + 1)));
}

template <class Fn>
inline void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// interior sample whose normalized front and back face coordinates both sit
// away from the barycenter
inline Vec sample_interior_77(Rng& rng, double bary_eps = 1e-6) {
  while (true) {
    Vec x = sample_simplex(rng, 7, 1e-9);
    auto off_bary = [&](int base) {
      double m = x[base] + x[base + 1] + x[base + 2];
      double d = 0;
      for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(x[base + c] / m - 1.0 / 3));
      return d > bary_eps;
    };
    if (off_bary(0) && off_bary(4)) return x;
  }
}

inline void finish(ExperimentResult& res, const ExperimentConfig& cfg) {
  res.config = cfg.to_json();
  for (const auto& r : res.reports) {
    res.verdict_counts[verdict_name(r.verdict)]++;
    if (!r.flagged && !r.target_met) res.all_ok = false;
  }
  std::ostringstream os;
  os << cfg.name << ": " << res.reports.size() << " runs;";
  for (const auto& [k, v] : res.verdict_counts) os << " " << k << "=" << v;
  os << (res.all_ok ? "; all targets met" : "; TARGET MISSED");
  res.summary = os.str();
}

inline void export_run_files(const ExperimentConfig& cfg, int index, const SymmetricGame& g,
                             const BRSolution* sol, const Trajectory* traj) {
  if (cfg.out_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::ostringstream base;
  base << cfg.out_dir << "/" << cfg.name << "_run" << index;
  if (sol) {
    std::ofstream jf(base.str() + ".json");
    jf << br_solution_to_json(*sol).dump(2) << "\n";
    std::ofstream cf(base.str() + ".csv");
    write_br_csv(cf, *sol, g, std::max(0.05, sol->final_time / 2000));
  }
  if (traj) {
    std::ofstream cf(base.str() + ".csv");
    std::vector<double> ts;
    const int m = 2000;
    for (int s = 0; s <= m; ++s) ts.push_back(traj->end_time() * s / m);
    write_trajectory_csv(cf, *traj, g, ts);
  }
}

}  // namespace detail

// ---- named experiments ----

inline ExperimentResult run_br66(ExperimentConfig cfg) {
  if (cfg.count == 0) cfg.count = 100;
  if (cfg.horizon == 0) cfg.horizon = 60;
  auto g = build_game_66();
  auto geom = shapley_triangle(normalize_to_epsilon(RPSSpec::cyclic(5, 1)), {3, 4, 5}, g);
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    RatVec x0 = rationalize_simplex(sample_simplex(rng, 6, 1e-9));
    auto sol = integrate_br(g, x0, cfg.horizon);
    auto rep = classify_run(g, sol, geom, BRClassifyParams{});
    rep.seed = detail::run_seed(cfg.seed, i);
    rep.target_met = rep.verdict == Verdict::converged_to_ST;
    detail::export_run_files(cfg, i, g, &sol, nullptr);
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

inline ExperimentResult run_br77(ExperimentConfig cfg) {
  if (cfg.count == 0) cfg.count = 100;
  if (cfg.horizon == 0) cfg.horizon = 60;
  if (cfg.eps == 0) cfg.eps = Rat(1, 10);
  auto g = build_game_77(cfg.eps);
  auto geom = shapley_triangle(RPSSpec::epsilon(cfg.eps), {4, 5, 6}, g);
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    RatVec x0 = rationalize_simplex(detail::sample_interior_77(rng));
    auto sol = integrate_br(g, x0, cfg.horizon);
    BRClassifyParams prm;
    prm.face = {4, 5, 6};
    auto rep = classify_run(g, sol, geom, prm);
    auto decomp = br_decomposition_check(g, sol);
    rep.metrics["decomp_violations"] = decomp.violations;
    rep.metrics["decomp_segments"] = decomp.segments_checked;
    // last event touching strategies 1..3
    double exit_t = 0;
    for (const auto& e : sol.events)
      for (int s : e.new_br)
        if (s <= 2) exit_t = e.t;
    rep.metrics["exit_time_123"] = exit_t;
    rep.seed = detail::run_seed(cfg.seed, i);
    rep.target_met = rep.verdict == Verdict::converged_to_ST && decomp.violations == 0;
    detail::export_run_files(cfg, i, g, &sol, nullptr);
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

inline ExperimentResult run_rep77(ExperimentConfig cfg) {
  if (cfg.count == 0) cfg.count = 20;
  if (cfg.horizon == 0) cfg.horizon = 3000;
  if (cfg.eps == 0) cfg.eps = Rat(1, 50);
  auto g = build_game_77(cfg.eps);
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    Vec x0 = detail::sample_interior_77(rng);
    IntegrateOptions opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    opt.store_dense = false;
    auto traj = integrate_rep(g, x0, cfg.horizon, opt);
    RepClassifyParams prm;  // face {4,5,6}, tolerances 1e-3, window 200
    auto rep = classify_run(g, traj, prm);
    const Vec& xT = traj.states.back();
    rep.metrics["final_lambda"] = xT[0] + xT[1] + xT[2];
    rep.metrics["final_x4"] = xT[3];
    rep.seed = detail::run_seed(cfg.seed, i);
    rep.target_met = rep.verdict == Verdict::converged_to_cycle;
    detail::export_run_files(cfg, i, g, nullptr, &traj);
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

// Best-reply dynamics in a single RPS game: outward specs must cycle to the
// Shapley triangle, inward ones must reach the equilibrium in finite time.
inline ExperimentResult run_rps_br(ExperimentConfig cfg, const RPSSpec& spec) {
  if (cfg.count == 0) cfg.count = 50;
  if (cfg.horizon == 0) cfg.horizon = 40;
  auto g = build_rps(spec);
  const bool outward = is_outward_cycling(spec);
  ShapleyTriangleGeom geom;
  if (outward) geom = shapley_triangle(spec, {0, 1, 2}, g);
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    RatVec x0 = rationalize_simplex(sample_simplex(rng, 3, 1e-9));
    auto sol = integrate_br(g, x0, cfg.horizon);
    ConvergenceReport rep;
    if (outward) {
      BRClassifyParams prm;
      prm.face = {0, 1, 2};
      rep = classify_run(g, sol, geom, prm);
      rep.target_met = rep.verdict == Verdict::converged_to_ST;
    } else {
      rep.face = {0, 1, 2};
      rep.horizon = sol.final_time;
      rep.metrics["events"] = static_cast<double>(sol.events.size());
      rep.metrics["final_time"] = sol.final_time;
      if (sol.termination == BRTermination::equilibrium) {
        rep.verdict = Verdict::converged_to_equilibrium;
        rep.metrics["dist_to_equilibrium"] = linf_dist(to_double(sol.final_state), Vec(3, 1.0 / 3));
      }
      rep.target_met = rep.verdict == Verdict::converged_to_equilibrium;
    }
    rep.seed = detail::run_seed(cfg.seed, i);
    detail::export_run_files(cfg, i, g, &sol, nullptr);
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

// Replicator dynamics in the epsilon RPS: approach to the heteroclinic
// boundary, the time-average closing in on the Shapley triangle vertex, and
// the unbounded record growth of the running payoff integral.
inline ExperimentResult run_rps_rep(ExperimentConfig cfg) {
  if (cfg.count == 0) cfg.count = 20;
  if (cfg.horizon == 0) cfg.horizon = 5000;
  if (cfg.eps == 0) cfg.eps = Rat(1, 5);
  auto g = build_rps(RPSSpec::epsilon(cfg.eps));
  const double e = to_double(cfg.eps);
  const double qden = 1 + e + e * e;
  const Vec qbar = {e * e / qden, e / qden, 1 / qden};
  const std::array<Vec, 3> triangle = {Vec{1 / qden, e * e / qden, e / qden},
                                       Vec{e / qden, 1 / qden, e * e / qden}, qbar};
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    Vec x0;
    do {
      x0 = sample_simplex(rng, 3, 1e-9);
    } while (linf_dist(x0, Vec(3, 1.0 / 3)) < 1e-6);
    IntegrateOptions opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    opt.store_dense = false;
    auto traj = integrate_rep(g, x0, cfg.horizon, opt);
    ConvergenceReport rep;
    rep.face = {0, 1, 2};
    rep.horizon = cfg.horizon;
    double min_final = 1;
    for (double v : traj.states.back()) min_final = std::min(min_final, v);
    // sweep of the time-average distance to the triangle vertex nearest e3,
    // and to whichever vertex the sweep happens to fly by closest
    double ta_min = 1, ta_min_any = 1;
    for (size_t k = 1; k < traj.times.size(); ++k) {
      if (traj.times[k] < 1) continue;
      Vec ta = traj.cum[k];
      for (double& v : ta) v /= traj.times[k];
      ta_min = std::min(ta_min, linf_dist(ta, qbar));
      for (const Vec& v : triangle) ta_min_any = std::min(ta_min_any, linf_dist(ta, v));
    }
    // running integral of (4 y3 - 3): record peaks and their spacing
    std::vector<double> iv(traj.times.size());
    for (size_t k = 0; k < traj.times.size(); ++k) iv[k] = 4 * traj.cum[k][2] - 3 * traj.times[k];
    // Record peaks of the running integral. The heteroclinic slowdown is
    // geometric (the saddle ratio is 1/eps per leg), so records are spaced
    // by rapidly growing intervals and only a handful fit any horizon.
    auto peaks = record_peak_times(traj.times, iv);
    bool growing = true;
    for (size_t k = 2; k < peaks.size(); ++k)
      if (peaks[k] - peaks[k - 1] <= peaks[k - 1] - peaks[k - 2]) growing = false;
    double record_growth = 0;  // climb of the record value across episodes
    if (peaks.size() >= 2) {
      auto value_at = [&](double t) {
        size_t k = std::upper_bound(traj.times.begin(), traj.times.end(), t) - traj.times.begin();
        if (k > 0) --k;
        return iv[k];
      };
      record_growth = value_at(peaks.back()) - value_at(peaks.front());
    }
    rep.metrics["final_min_share"] = min_final;
    rep.metrics["ta_min_dist_qbar"] = ta_min;
    rep.metrics["ta_min_dist_vertex"] = ta_min_any;
    rep.metrics["record_peaks"] = static_cast<double>(peaks.size());
    rep.metrics["record_gaps_growing"] = growing ? 1.0 : 0.0;
    rep.metrics["record_growth"] = record_growth;
    // the run-level target is the convergence verdict; the time-average and
    // record measurements feed the acceptance checks
    rep.verdict = min_final < 1e-6 ? Verdict::converged_to_cycle : Verdict::inconclusive;
    rep.seed = detail::run_seed(cfg.seed, i);
    rep.target_met = rep.verdict == Verdict::converged_to_cycle;
    detail::export_run_files(cfg, i, g, nullptr, &traj);
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

inline ExperimentResult run_rescale_check(ExperimentConfig cfg) {
  if (cfg.count == 0) cfg.count = 10;
  if (cfg.horizon == 0) cfg.horizon = 50;
  if (cfg.eps == 0) cfg.eps = Rat(1, 50);
  if (cfg.rtol > 1e-10) cfg.rtol = 1e-10;
  if (cfg.atol > 1e-13) cfg.atol = 1e-13;
  auto g = build_game_77(cfg.eps);
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    Vec x0 = sample_simplex(rng, 7, 1e-6);
    IntegrateOptions opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    auto rr = verify_rescale_lemma(g, x0, cfg.horizon, opt);
    ConvergenceReport rep;
    rep.horizon = cfg.horizon;
    rep.seed = detail::run_seed(cfg.seed, i);
    rep.metrics["sup_bar"] = rr.sup_bar;
    rep.metrics["sup_hat"] = rr.sup_hat;
    rep.metrics["taubar_end"] = rr.taubar_end;
    rep.metrics["tauhat_end"] = rr.tauhat_end;
    rep.notes = "rescale decomposition check";
    rep.target_met = rr.sup_bar < 1e-6 && rr.sup_hat < 1e-6;
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

// Random rational perturbations of the 6x6 game: the equilibrium stays
// unique with support in {1,2,3} and best-reply runs still converge to the
// recomputed general-form Shapley triangle on {4,5,6}.
inline ExperimentResult run_perturb66(ExperimentConfig cfg) {
  if (cfg.count == 0) cfg.count = 100;
  if (cfg.horizon == 0) cfg.horizon = 60;
  if (cfg.delta == 0) cfg.delta = Rat(1, 100);
  auto base = build_game_66();
  ExperimentResult res;
  res.reports.resize(cfg.count);
  detail::parallel_for(cfg.count, cfg.threads, [&](int i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    std::vector<Rat> entries = base.payoff;
    for (Rat& q : entries) q += make_rat(rng.uniform_int(-64, 64), 64) * cfg.delta;
    auto g = make_game(6, std::move(entries));

    ConvergenceReport rep;
    rep.seed = detail::run_seed(cfg.seed, i);
    rep.horizon = cfg.horizon;
    rep.face = {3, 4, 5};

    auto enumr = enumerate_nash(g);
    bool unique = enumr.certificates.size() == 1 && !enumr.degenerate;
    bool support_ok = unique;
    if (unique) {
      for (int s : enumr.certificates[0].support_x) support_ok &= s <= 2;
      for (int s : enumr.certificates[0].support_y) support_ok &= s <= 2;
    }
    rep.metrics["equilibria"] = static_cast<double>(enumr.certificates.size());
    rep.metrics["unique"] = unique ? 1 : 0;
    rep.metrics["support_in_123"] = support_ok ? 1 : 0;

    int br_ok = 0;
    auto spec = rps_spec_from_block(g, {3, 4, 5});
    auto geom = shapley_triangle(spec, {3, 4, 5}, g);
    for (int r = 0; r < cfg.runs_per_game; ++r) {
      Rng rrun(detail::run_seed(rep.seed, r));
      RatVec x0 = rationalize_simplex(sample_simplex(rrun, 6, 1e-9));
      auto sol = integrate_br(g, x0, cfg.horizon);
      auto crep = classify_run(g, sol, geom, BRClassifyParams{});
      if (crep.verdict == Verdict::converged_to_ST) ++br_ok;
    }
    rep.metrics["br_converged"] = br_ok;
    rep.metrics["br_runs"] = cfg.runs_per_game;
    rep.verdict = (unique && support_ok && br_ok == cfg.runs_per_game)
                      ? Verdict::converged_to_ST
                      : Verdict::inconclusive;
    rep.eliminated = {0, 1, 2};
    rep.target_met = rep.verdict == Verdict::converged_to_ST;
    res.reports[i] = std::move(rep);
  });
  detail::finish(res, cfg);
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.name == "br66") return run_br66(cfg);
  if (cfg.name == "br77") return run_br77(cfg);
  if (cfg.name == "rep77") return run_rep77(cfg);
  if (cfg.name == "rps-br") {
    RPSSpec spec = RPSSpec::cyclic(3, 1);
    if (cfg.alpha != 0 && cfg.beta != 0)
      spec = RPSSpec::cyclic(cfg.alpha, cfg.beta);
    else if (cfg.eps != 0)
      spec = RPSSpec::epsilon(cfg.eps);
    return run_rps_br(cfg, spec);
  }
  if (cfg.name == "rps-rep") return run_rps_rep(cfg);
  if (cfg.name == "rescale-check") return run_rescale_check(cfg);
  if (cfg.name == "perturb66") return run_perturb66(cfg);
  throw std::invalid_argument("unknown experiment: " + cfg.name);
}

inline void write_reports_jsonl(std::ostream& os, const ExperimentResult& res) {
  for (size_t i = 0; i < res.reports.size(); ++i) {
    json j = report_to_json(res.reports[i]);
    j["run"] = i;
    j["config"] = res.config;
    os << j.dump() << "\n";
  }
}

}  // namespace gamedyn
