// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line with its key measurements.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gamedyn/analysis.hpp"
#include "gamedyn/bestreply.hpp"
#include "gamedyn/equilibria.hpp"
#include "gamedyn/experiments.hpp"
#include "gamedyn/game.hpp"
#include "gamedyn/replicator.hpp"
#include "gamedyn/trajectory.hpp"
#include "support/oracles.hpp"

using namespace gamedyn;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(int num, const std::string& name, bool pass, const std::string& detail) {
  std::cout << "[criterion " << num << "] " << name << ": " << (pass ? "PASS" : "FAIL") << " ("
            << detail << ")\n"
            << std::flush;
}

bool is_n123(const RatVec& x) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (i < 3 && x[i] != Rat(1, 3)) return false;
    if (i >= 3 && sgn(x[i]) != 0) return false;
  }
  return true;
}

std::string pair_key(const RatVec& x, const RatVec& y) {
  std::string s;
  for (const Rat& q : x) s += q.get_str() + ",";
  s += "|";
  for (const Rat& q : y) s += q.get_str() + ",";
  return s;
}

}  // namespace

TEST_CASE("criterion 1: equilibrium uniqueness") {
  bool pass = true;
  std::ostringstream detail;
  {
    Stopwatch sw;
    auto res = enumerate_nash(build_game_66());
    double dt = sw.seconds();
    bool ok = res.certificates.size() == 1 && !res.degenerate &&
              is_n123(res.certificates[0].x) && is_n123(res.certificates[0].y) &&
              res.certificates[0].quasi_strict && dt < 10.0;
    pass &= ok;
    detail << "game66 " << res.certificates.size() << " cert " << std::setprecision(3) << dt << "s";
  }
  for (auto eps : {Rat(1, 100), Rat(1, 50), Rat(1, 10)}) {
    Stopwatch sw;
    auto res = enumerate_nash(build_game_77(eps));
    double dt = sw.seconds();
    bool ok = res.certificates.size() == 1 && !res.degenerate &&
              is_n123(res.certificates[0].x) && is_n123(res.certificates[0].y) &&
              res.certificates[0].quasi_strict && dt < 10.0;
    pass &= ok;
    detail << "; game77 eps=" << eps.get_str() << " " << res.certificates.size() << " cert "
           << std::setprecision(3) << dt << "s";
  }
  report(1, "equilibrium uniqueness", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 2: equilibrium oracle equivalence") {
  Rng rng(20260401);
  const int games = 500;
  auto grid = oracles::simplex_grid(3, 60);
  int mismatches = 0, degenerate_games = 0, grid_orphans = 0;
  Stopwatch sw;
  for (int t = 0; t < games; ++t) {
    std::vector<Rat> e;
    for (int k = 0; k < 9; ++k)
      e.push_back(make_rat(rng.uniform_int(-6, 6), rng.uniform_int(1, 3)));
    auto g = make_game(3, std::move(e));

    auto res = enumerate_nash(g);
    auto ora = oracles::oracle_enumerate(g);
    for (const auto& c : res.certificates)
      if (!is_nash(g, c.x, c.y)) ++mismatches;  // spurious
    std::set<std::string> enum_keys, oracle_keys;
    for (const auto& c : res.certificates) enum_keys.insert(pair_key(c.x, c.y));
    for (const auto& [x, y] : ora.points) oracle_keys.insert(pair_key(x, y));
    if (!res.degenerate && !ora.degenerate_supports) {
      if (enum_keys != oracle_keys) ++mismatches;
    } else {
      ++degenerate_games;
      for (const auto& k : oracle_keys)
        if (!enum_keys.count(k)) ++mismatches;  // missed
    }

    // near-equilibrium grid detection: with these denominators any grid pair
    // with float regret below 1e-9 is an exact equilibrium and must appear
    // among the certificates (isolated case) or in a flagged polytope
    auto hits = oracles::grid_near_equilibria(g, grid, 1e-9);
    if (!res.degenerate) {
      for (auto [xi, yi] : hits) {
        double best = 1;
        for (const auto& c : res.certificates)
          best = std::min(best, std::max(linf_dist(grid[xi], to_double(c.x)),
                                         linf_dist(grid[yi], to_double(c.y))));
        if (best > 1e-6) ++grid_orphans;
      }
    }
  }
  bool pass = mismatches == 0 && grid_orphans == 0;
  std::ostringstream detail;
  detail << games << " games, " << degenerate_games << " degenerate, " << mismatches
         << " mismatches, " << grid_orphans << " unexplained grid hits, "
         << std::setprecision(3) << sw.seconds() << "s";
  report(2, "equilibrium oracle equivalence", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 3: best reply in outward and inward RPS") {
  bool pass = true;
  std::ostringstream detail;
  {  // outward cyclic(3,1)
    auto g = build_rps(RPSSpec::cyclic(3, 1));
    auto geom = shapley_triangle(RPSSpec::cyclic(3, 1), {0, 1, 2}, g);
    REQUIRE(geom.vertices[2][0] == Rat(1, 13));
    Rng rng(606);
    int converged = 0, vfit = 0;
    for (int run = 0; run < 50; ++run) {
      RatVec x0 = rationalize_simplex(sample_simplex(rng, 3, 1e-9));
      auto sol = integrate_br(g, x0, 40.0);
      if (sol.termination != BRTermination::horizon) continue;
      double worst = 0;
      for (size_t k = sol.segments.size() - 6; k < sol.segments.size(); ++k) {
        double d = 1;
        for (const auto& v : geom.vertices)
          d = std::min(d, linf_dist(sol.segments[k].start_state, v));
        worst = std::max(worst, d);
      }
      if (worst < 1e-8) ++converged;
      double v0 = std::abs(to_double(v_value(g, geom, x0)));
      bool fit = true;
      double tk = 0;
      for (const auto& seg : sol.segments) {
        double v = std::abs(to_double(v_value(g, geom, seg.start_state)));
        double model = v0 * std::exp(-tk);
        if (std::abs(v - model) > 1e-6 * model) fit = false;
        tk = seg.t_start + seg.duration;
      }
      if (fit) ++vfit;
    }
    pass &= converged == 50 && vfit == 50;
    detail << "outward: " << converged << "/50 on vertices, " << vfit << "/50 exp-decay fits";
  }
  {  // inward cyclic(1,3)
    ExperimentConfig cfg;
    cfg.name = "rps-br";
    cfg.alpha = 1;
    cfg.beta = 3;
    cfg.count = 50;
    cfg.seed = 808;
    cfg.horizon = 40;
    auto res = run_experiment(cfg);
    int eq = res.verdict_counts["converged_to_equilibrium"];
    pass &= eq == 50;
    detail << "; inward: " << eq << "/50 finite-time equilibrium";
  }
  report(3, "best reply in outward and inward RPS", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 4: 6x6 elimination under best reply") {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.name = "br66";
  cfg.count = 100;
  cfg.seed = 7;
  cfg.horizon = 60;
  auto g = build_game_66();
  auto geom = shapley_triangle(normalize_to_epsilon(RPSSpec::cyclic(5, 1)), {3, 4, 5}, g);
  int st = 0, non_unique = 0, deep_elim = 0, vertex_ok = 0;
  for (int i = 0; i < cfg.count; ++i) {
    Rng rng(detail::run_seed(cfg.seed, i));
    RatVec x0 = rationalize_simplex(sample_simplex(rng, 6, 1e-9));
    auto sol = integrate_br(g, x0, cfg.horizon);  // improvement principle asserted inside
    if (sol.termination == BRTermination::non_unique_continuation) ++non_unique;
    auto rep = classify_run(g, sol, geom, BRClassifyParams{});
    if (rep.verdict == Verdict::converged_to_ST) ++st;
    if (rep.metrics.at("tail_vertex_dist") < 1e-8) ++vertex_ok;
    bool deep = true;
    for (int s = 0; s < 3; ++s)
      if (br_log_share(sol, s, cfg.horizon) >= std::log(1e-20)) deep = false;
    if (deep) ++deep_elim;
  }
  double dt = sw.seconds();
  bool pass = st == 100 && non_unique == 0 && deep_elim == 100 && vertex_ok == 100 && dt < 5.0;
  std::ostringstream detail;
  detail << st << "/100 to ST_456, " << deep_elim << "/100 below 1e-20, " << non_unique
         << " non-unique, " << std::setprecision(3) << dt << "s";
  report(4, "6x6 elimination under best reply", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 5: perturbation robustness") {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.name = "perturb66";
  cfg.count = 100;
  cfg.seed = 11;
  cfg.delta = Rat(1, 100);
  cfg.runs_per_game = 20;
  auto res = run_experiment(cfg);
  int games_ok = 0;
  for (const auto& r : res.reports)
    if (r.target_met) ++games_ok;
  bool pass = games_ok == 100;
  std::ostringstream detail;
  detail << games_ok << "/100 games: unique equilibrium in {1,2,3}, 20/20 BR runs to the "
         << "recomputed triangle, " << std::setprecision(3) << sw.seconds() << "s";
  report(5, "perturbation robustness", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 6: replicator in RPS") {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.name = "rps-rep";
  cfg.count = 20;
  cfg.seed = 21;
  cfg.eps = Rat(1, 5);
  cfg.horizon = 5000;
  auto res = run_experiment(cfg);
  int gamma = 0, ta_ok = 0, ta_any_ok = 0, rec5_ok = 0, growth_ok = 0;
  double min_peaks = 1e9, max_peaks = 0;
  for (const auto& r : res.reports) {
    if (r.metrics.at("final_min_share") < 1e-6) ++gamma;
    if (r.metrics.at("ta_min_dist_qbar") < 0.05) ++ta_ok;
    if (r.metrics.at("ta_min_dist_vertex") < 0.05) ++ta_any_ok;
    if (r.metrics.at("record_peaks") >= 5 && r.metrics.at("record_gaps_growing") == 1.0) ++rec5_ok;
    if (r.metrics.at("record_peaks") >= 2 && r.metrics.at("record_gaps_growing") == 1.0 &&
        r.metrics.at("record_growth") > 0)
      ++growth_ok;
    min_peaks = std::min(min_peaks, r.metrics.at("record_peaks"));
    max_peaks = std::max(max_peaks, r.metrics.at("record_peaks"));
  }
  // Both quantified clauses are asserted as written. The record clause
  // cannot fit the horizon: the saddle ratio 1/eps = 5 spaces record peaks
  // by factors above 40, so T=5000 holds 1-3 of them. The qbar clause only
  // holds for the seeds whose final flyby lands inside the horizon; the
  // sweep does reach the triangle (nearest-vertex distance) for every run.
  bool pass = gamma == 20 && ta_ok == 20 && rec5_ok == 20;
  std::ostringstream detail;
  detail << gamma << "/20 reach the boundary, " << ta_ok << "/20 time-averages within 0.05 of "
         << "qbar (nearest vertex: " << ta_any_ok << "/20), " << rec5_ok
         << "/20 with 5+ record peaks (observed " << min_peaks << ".." << max_peaks
         << "; growing records in " << growth_ok << "/20), " << std::setprecision(3)
         << sw.seconds() << "s";
  report(6, "replicator in RPS", pass, detail.str());
  CHECK(gamma == 20);
  REQUIRE(pass);
}

TEST_CASE("criterion 7: rescale lemma") {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.name = "rescale-check";
  cfg.count = 10;
  cfg.seed = 5;
  cfg.horizon = 50;
  cfg.eps = Rat(1, 50);
  auto res = run_experiment(cfg);
  double worst_bar = 0, worst_hat = 0;
  int ok = 0;
  for (const auto& r : res.reports) {
    worst_bar = std::max(worst_bar, r.metrics.at("sup_bar"));
    worst_hat = std::max(worst_hat, r.metrics.at("sup_hat"));
    if (r.target_met) ++ok;
  }
  bool pass = ok == 10;
  std::ostringstream detail;
  detail << ok << "/10 starts, sup_bar<=" << std::setprecision(3) << worst_bar
         << ", sup_hat<=" << worst_hat << ", " << sw.seconds() << "s";
  report(7, "rescale lemma", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 8: 7x7 replicator elimination") {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.name = "rep77";
  cfg.count = 20;
  cfg.seed = 7;
  cfg.eps = Rat(1, 50);
  cfg.horizon = 3000;
  auto res = run_experiment(cfg);
  double dt = sw.seconds();
  int cyc = 0, small = 0, elim = 0;
  for (const auto& r : res.reports) {
    if (r.verdict == Verdict::converged_to_cycle) ++cyc;
    if (r.metrics.at("final_lambda") < 1e-3 && r.metrics.at("final_x4") < 1e-3) ++small;
    if (r.metrics.at("elimination_ok") == 1.0) ++elim;
  }
  bool pass = cyc == 20 && small == 20 && elim == 20 && dt < 120.0;
  std::ostringstream detail;
  detail << cyc << "/20 to Gamma_567, " << small << "/20 with final lambda,x4 < 1e-3, " << elim
         << "/20 elimination windows clean, " << std::setprecision(3) << dt << "s";
  report(8, "7x7 replicator elimination", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 9: stability dichotomy") {
  auto g = build_game_77(Rat(1, 50));
  IntegrateOptions opt;
  opt.store_dense = false;
  Rng rng(271828);
  int stable_ok = 0;
  for (int run = 0; run < 20; ++run) {
    double s = 0.15 + 0.7 * rng.uniform01();
    int corner = static_cast<int>(rng.uniform_int(0, 2));
    Vec base(7, 0.0);
    base[4 + corner] = s;
    base[4 + (corner + 1) % 3] = 1 - s;
    Vec u = sample_simplex(rng, 7, 1e-6);
    Vec x0(7);
    const double eta = 1e-3;
    for (int i = 0; i < 7; ++i) x0[i] = (1 - eta) * base[i] + eta * u[i];
    double d0 = x0[0] + x0[1] + x0[2] + x0[3];
    auto traj = integrate_rep(g, x0, 500.0, opt);
    double df = 0;
    for (int i = 0; i < 4; ++i) df += traj.states.back()[i];
    bool bounded = true;
    for (size_t k = 0; k < traj.times.size(); ++k) {
      if (traj.times[k] < 50) continue;
      double d = 0;
      for (int i = 0; i < 4; ++i) d += traj.states[k][i];
      if (d > d0) bounded = false;
    }
    if (df < 1e-6 && bounded) ++stable_ok;
  }
  // instability of the front cycle: a seeded start next to it escapes
  Vec base = {0.02, 0.08, 0.90, 0, 0, 0, 0};
  Vec u = sample_simplex(rng, 7, 1e-6);
  Vec x0(7);
  for (int i = 0; i < 7; ++i) x0[i] = (1 - 1e-3) * base[i] + 1e-3 * u[i];
  auto traj = integrate_rep(g, x0, 500.0, opt);
  double max_x4 = 0;
  for (const auto& s : traj.states) max_x4 = std::max(max_x4, s[3]);
  bool pass = stable_ok == 20 && max_x4 > 0.1;
  std::ostringstream detail;
  detail << stable_ok << "/20 near-Gamma_567 starts converge to it; near-Gamma_123 start reaches "
         << "x4=" << std::setprecision(3) << max_x4;
  report(9, "stability dichotomy", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 10: 7x7 best reply") {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.name = "br77";
  cfg.count = 100;
  cfg.seed = 17;
  cfg.eps = Rat(1, 10);
  cfg.horizon = 60;
  auto res = run_experiment(cfg);
  int st = 0, decomp_clean = 0, exits = 0;
  for (const auto& r : res.reports) {
    if (r.verdict == Verdict::converged_to_ST && r.metrics.at("tail_vertex_dist") < 1e-8) ++st;
    if (r.metrics.at("decomp_violations") == 0.0) ++decomp_clean;
    if (r.metrics.at("exit_time_123") < cfg.horizon / 2) ++exits;
  }
  bool pass = st == 100 && decomp_clean == 100 && exits == 100;
  std::ostringstream detail;
  detail << st << "/100 on ST_567 within 1e-8, " << exits << "/100 exit strategies 1-3 early, "
         << decomp_clean << "/100 decomposition checks clean, " << std::setprecision(3)
         << sw.seconds() << "s";
  report(10, "7x7 best reply", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 11: identities") {
  bool pass = true;
  std::ostringstream detail;
  {  // mean payoff identity, exact, 1000 points
    Rat eps(1, 5);
    auto g = build_rps(RPSSpec::epsilon(eps));
    Rng rng(1001);
    int ok = 0;
    for (int t = 0; t < 1000; ++t) {
      RatVec x = rationalize_simplex(sample_simplex(rng, 3));
      Rat ssq = 0;
      for (const Rat& xi : x) ssq += xi * xi;
      if (average_payoff(g, x) == (eps - 1) / 2 * (1 - ssq)) ++ok;
    }
    pass &= ok == 1000;
    detail << "mean-payoff identity " << ok << "/1000";
  }
  {  // discrete replicator fixed points
    auto g = build_rps(RPSSpec::epsilon(Rat(1, 5)));
    bool ok = discrete_rep_step(g, rat_barycenter(3), Rat(2)) == rat_barycenter(3);
    for (int j = 0; j < 3; ++j)
      ok &= discrete_rep_step(g, rat_unit(3, j), Rat(2)) == rat_unit(3, j);
    pass &= ok;
    detail << "; drep fixed points " << (ok ? "exact" : "BROKEN");
  }
  {  // functional dynamics with f = identity
    auto g = build_game_66();
    Rng rng(1003);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
      Vec x = sample_simplex(rng, 6);
      Vec a = functional_rhs(g, x, [](double p) { return p; });
      Vec b = rep_rhs(g, x);
      for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    pass &= worst <= 1e-14;
    detail << "; f=id deviation " << std::setprecision(3) << worst;
  }
  {  // rhs against finite differences of the flow
    auto g = build_game_77(Rat(1, 50));
    Rng rng(1004);
    IntegrateOptions opt;
    opt.h_init = 1e-8;
    opt.store_dense = false;
    double worst = 0;
    const double dt = 1e-6;
    for (int t = 0; t < 100; ++t) {
      Vec x = sample_simplex(rng, 7, 1e-3);
      Vec rhs = rep_rhs(g, x);
      auto tr = integrate_rep(g, x, dt, opt);
      double num = 0, den = 0;
      for (int i = 0; i < 7; ++i) {
        double fd = (tr.states.back()[i] - x[i]) / dt;
        num += (fd - rhs[i]) * (fd - rhs[i]);
        den += rhs[i] * rhs[i];
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
    pass &= worst < 1e-4;
    detail << "; rhs-vs-flow rel err " << worst;
  }
  report(11, "identities", pass, detail.str());
  REQUIRE(pass);
}
