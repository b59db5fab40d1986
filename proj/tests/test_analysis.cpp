#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gamedyn/analysis.hpp"
#include "gamedyn/bestreply.hpp"
#include "gamedyn/trajectory.hpp"

using namespace gamedyn;

namespace {

Vec near_gamma567_start(Rng& rng, double eta) {
  double s = 0.2 + 0.6 * rng.uniform01();
  Vec base = {0, 0, 0, 0, s, 1 - s, 0};  // on an edge of the back-face boundary
  Vec u = sample_simplex(rng, 7, 1e-6);
  Vec x(7);
  for (int i = 0; i < 7; ++i) x[i] = (1 - eta) * base[i] + eta * u[i];
  return x;
}

}  // namespace

TEST_CASE("distance_to_shapley") {
  auto g66 = build_game_66();
  auto geom = shapley_triangle(RPSSpec::epsilon(Rat(1, 5)), {3, 4, 5}, g66);
  SECTION("vertices are at distance zero") {
    for (const auto& v : geom.vertices) {
      CHECK(distance_to_shapley(g66, geom, v) == 0.0);
      CHECK(distance_to_shapley(g66, geom, to_double(v)) < 1e-15);
    }
  }
  SECTION("face barycenter of game66 sits at 4/3") {
    Vec n456 = {0, 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(distance_to_shapley(g66, geom, n456) == Catch::Approx(4.0 / 3).margin(1e-12));
  }
  SECTION("geometric decay along a locked-in run") {
    Rng rng(77);
    RatVec x0 = rationalize_simplex(sample_simplex(rng, 6, 1e-6));
    auto sol = integrate_br(g66, x0, 60.0);
    // once cycling, distance at event times decays like e^{-dt}
    size_t m = sol.segments.size();
    for (size_t k = m - 5; k + 1 < m; ++k) {
      double d0 = distance_to_shapley(g66, geom, sol.segments[k].start_state);
      double d1 = distance_to_shapley(g66, geom, sol.segments[k + 1].start_state);
      double ratio = d1 / d0;
      CHECK(ratio == Catch::Approx(std::exp(-sol.segments[k].duration)).epsilon(1e-6));
    }
  }
}

TEST_CASE("cycle_proximity") {
  CHECK(cycle_proximity(unit(7, 4), {4, 5, 6}) == 0.0);
  Vec n567 = {0, 0, 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(cycle_proximity(n567, {4, 5, 6}) == Catch::Approx(1.0 / 3));
  Vec edge = {0, 0, 0, 0, 0.5, 0.5, 0};
  CHECK(cycle_proximity(edge, {4, 5, 6}) == 0.0);
  Vec off = {0.5, 0, 0, 0, 0.25, 0.25, 0};
  CHECK(cycle_proximity(off, {4, 5, 6}) == Catch::Approx(0.5));
}

TEST_CASE("elimination_check") {
  SECTION("BR run on game66 eliminates the front face") {
    auto g = build_game_66();
    Rng rng(123);
    RatVec x0 = rationalize_simplex(sample_simplex(rng, 6, 1e-6));
    auto sol = integrate_br(g, x0, 60.0);
    CHECK(elimination_check(sol, {0, 1, 2}, 1e-12, 20.0));
    CHECK_FALSE(elimination_check(sol, {3, 4, 5}, 1e-12, 20.0));
  }
  SECTION("constant trajectory at n123 is not eliminated") {
    auto g = build_game_77(Rat(1, 50));
    IntegrateOptions opt;
    opt.allow_faces = true;
    Vec n123 = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0, 0};
    auto traj = integrate_rep(g, n123, 50.0, opt);
    CHECK_FALSE(elimination_check(traj, {0, 1, 2}, 1e-3, 20.0));
    CHECK(elimination_check(traj, {3, 4, 5, 6}, 1e-3, 20.0));
  }
  SECTION("window must fit the run") {
    auto g = build_rps(RPSSpec::epsilon(Rat(1, 5)));
    auto traj = integrate_rep(g, Vec(3, 1.0 / 3), 5.0);
    CHECK_THROWS_AS(elimination_check(traj, {0}, 1e-3, 10.0), std::invalid_argument);
  }
}

TEST_CASE("claim_integrals") {
  auto g = build_game_77(Rat(1, 50));
  SECTION("constant trajectory at n123") {
    IntegrateOptions opt;
    opt.allow_faces = true;
    Vec n123 = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0, 0};
    auto traj = integrate_rep(g, n123, 30.0, opt);
    auto cs = claim_integrals(g, traj);
    // integrand is 4/3 - 3 = -5/3 throughout
    for (size_t k = 0; k < cs.t.size(); ++k) {
      CHECK(cs.integral_4x3_3lambda[k] == Catch::Approx(-5.0 / 3 * cs.t[k]).margin(1e-7));
      CHECK(cs.taubar[k] == Catch::Approx(cs.t[k]).margin(1e-8));
      CHECK(cs.tauhat[k] == Catch::Approx(0.0).margin(1e-12));
    }
  }
  SECTION("closed form of d/dt ln(mu/lambda) matches finite differences") {
    Rng rng(5150);
    Vec x0 = sample_simplex(rng, 7, 1e-3);
    auto traj = integrate_rep(g, x0, 50.0);
    auto cs = claim_integrals(g, traj);
    const double dl = 1e-5;
    int checked = 0;
    for (size_t k = 5; k + 5 < cs.t.size(); k += 20) {
      double t = cs.t[k];
      if (t - dl < 0 || t + dl > traj.end_time()) continue;
      auto ratio_at = [&](double tt) {
        Vec l = traj.log_state_at(tt);
        return detail::logsumexp(&l[4], 3) - detail::logsumexp(&l[0], 3);
      };
      double fd = (ratio_at(t + dl) - ratio_at(t - dl)) / (2 * dl);
      double rhs = cs.dln_mu_lambda_rhs[k];
      if (std::abs(rhs) < 1e-2) continue;  // relative comparison needs a signal
      CHECK(std::abs(fd - rhs) / std::abs(rhs) < 1e-4);
      ++checked;
    }
    REQUIRE(checked > 5);
  }
  SECTION("record peaks of a synthetic series") {
    std::vector<double> t = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> v = {0, 2, 1, 3, 2, 2.5, 1, 5, 0};
    auto peaks = record_peak_times(t, v);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0] == 1.0);
    CHECK(peaks[1] == 3.0);
    CHECK(peaks[2] == 7.0);
  }
}

TEST_CASE("classify_run on the three controlled scenarios") {
  SECTION("game66 best reply") {
    auto g = build_game_66();
    auto geom = shapley_triangle(normalize_to_epsilon(RPSSpec::cyclic(5, 1)), {3, 4, 5}, g);
    Rng rng(909);
    RatVec x0 = rationalize_simplex(sample_simplex(rng, 6, 1e-6));
    auto sol = integrate_br(g, x0, 60.0);
    auto rep = classify_run(g, sol, geom, BRClassifyParams{});
    CHECK(rep.verdict == Verdict::converged_to_ST);
    CHECK(rep.eliminated == std::vector<int>{0, 1, 2});
    CHECK(rep.metrics.at("tail_vertex_dist") < 1e-8);
    CHECK(rep.metrics.at("min_face_gap_W") > 0);
    // classification is a pure function of the run
    auto rep2 = classify_run(g, sol, geom, BRClassifyParams{});
    CHECK(rep2.verdict == rep.verdict);
    CHECK(rep2.metrics == rep.metrics);
  }
  SECTION("7x7 replicator") {
    auto g = build_game_77(Rat(1, 50));
    Rng rng(31415);
    Vec x0 = sample_simplex(rng, 7, 1e-6);
    IntegrateOptions opt;
    opt.store_dense = false;
    auto traj = integrate_rep(g, x0, 3000.0, opt);
    auto rep = classify_run(g, traj, RepClassifyParams{});
    CHECK(rep.verdict == Verdict::converged_to_cycle);
    CHECK(rep.metrics.at("final_off_face_mass") < 1e-3);
  }
  SECTION("7x7 replicator from a start hugging n123") {
    auto g = build_game_77(Rat(1, 50));
    // x0 = 0.97 n123 + 0.01 e4 + 0.02 n567, tilted off both face barycenters
    Vec x0 = {0.97 * (1.0 / 3 + 0.02), 0.97 / 3, 0.97 * (1.0 / 3 - 0.02), 0.01,
              0.02 * (1.0 / 3 + 0.1), 0.02 / 3, 0.02 * (1.0 / 3 - 0.1)};
    IntegrateOptions opt;
    opt.store_dense = false;
    auto traj = integrate_rep(g, x0, 3000.0, opt);
    const Vec& xT = traj.states.back();
    double lambda = xT[0] + xT[1] + xT[2];
    double mu = xT[4] + xT[5] + xT[6];
    CHECK(lambda < 1e-3);
    CHECK(mu > 0.99);
  }
}

TEST_CASE("claims pipeline along diverging runs") {
  auto g = build_game_77(Rat(1, 50));
  IntegrateOptions opt;
  opt.store_dense = false;
  SECTION("near-n123 start: rescaled time tracks t while lambda stays up") {
    Vec x0 = {0.97 * (1.0 / 3 + 0.02), 0.97 / 3, 0.97 * (1.0 / 3 - 0.02), 0.01,
              0.02 * (1.0 / 3 + 0.1), 0.02 / 3, 0.02 * (1.0 / 3 - 0.1)};
    auto traj = integrate_rep(g, x0, 3000.0, opt);
    auto cs = claim_integrals(g, traj);
    double t_half = 0, tau_half = 0, max_ln_ratio = -1e300, max_mu = 0;
    for (size_t k = 0; k < cs.t.size(); ++k) {
      const Vec& x = traj.states[k];
      if (x[0] + x[1] + x[2] > 0.5) {
        t_half = cs.t[k];
        tau_half = cs.taubar[k];
      }
      max_ln_ratio = std::max(max_ln_ratio, cs.ln_x4_over_lambda[k]);
      max_mu = std::max(max_mu, x[4] + x[5] + x[6]);
    }
    CHECK(t_half > 100.0);                 // the pre-escape phase is long
    CHECK(tau_half > 0.49 * t_half);       // taubar grows like t while lambda ~ 1
    CHECK(max_ln_ratio > cs.ln_x4_over_lambda[0] + 5);  // the x4/lambda ratio takes off
    CHECK(max_mu > 1.0 / (1 + 1.0 / 50) - 0.01);
  }
  SECTION("e3-biased start: the running claim integral attains new maxima") {
    Vec x0 = {0.96 * 0.15, 0.96 * 0.10, 0.96 * 0.75, 0.01,
              0.03 * (1.0 / 3 + 0.1), 0.03 / 3, 0.03 * (1.0 / 3 - 0.1)};
    auto traj = integrate_rep(g, x0, 3000.0, opt);
    auto cs = claim_integrals(g, traj);
    auto peaks = record_peak_times(cs.t, cs.integral_4x3_3lambda);
    REQUIRE(peaks.size() >= 1);
    double max_I = *std::max_element(cs.integral_4x3_3lambda.begin(),
                                     cs.integral_4x3_3lambda.end());
    CHECK(max_I > 0.0);
    double max_mu = 0;
    for (const auto& s : traj.states) max_mu = std::max(max_mu, s[4] + s[5] + s[6]);
    CHECK(max_mu > 1.0 / (1 + 1.0 / 50) - 0.01);
  }
}

TEST_CASE("Gamma_567 is asymptotically stable") {
  auto g = build_game_77(Rat(1, 50));
  Rng rng(2718);
  IntegrateOptions opt;
  opt.store_dense = false;
  for (int run = 0; run < 5; ++run) {
    Vec x0 = near_gamma567_start(rng, 1e-3);
    double d0 = x0[0] + x0[1] + x0[2] + x0[3];
    REQUIRE(d0 < 1e-3);
    auto traj = integrate_rep(g, x0, 500.0, opt);
    double final_d = 0;
    for (int i = 0; i < 4; ++i) final_d += traj.states.back()[i];
    CHECK(final_d < 1e-6);
    // off-face mass stays bounded by its initial value after a short transient
    // and its running envelope decreases window over window
    double prev_window_max = 0;
    bool envelope_ok = true;
    for (int w = 0; w < 4; ++w) {
      double lo = 100.0 * (w + 1), hi = lo + 100.0;
      double mx = 0;
      for (size_t k = 0; k < traj.times.size(); ++k) {
        if (traj.times[k] < lo || traj.times[k] > hi) continue;
        double d = traj.states[k][0] + traj.states[k][1] + traj.states[k][2] + traj.states[k][3];
        mx = std::max(mx, d);
        if (d > d0) envelope_ok = false;
      }
      if (w > 0 && mx >= prev_window_max && mx > 0) envelope_ok = false;
      prev_window_max = mx;
    }
    CHECK(envelope_ok);
  }
}

TEST_CASE("Gamma_123 is not asymptotically stable") {
  auto g = build_game_77(Rat(1, 50));
  Rng rng(161803);
  // start within 1e-3 of the front-face boundary, near the e3 corner where
  // strategy 4 is the unique best reply
  Vec base = {0.02, 0.08, 0.90, 0, 0, 0, 0};
  Vec u = sample_simplex(rng, 7, 1e-6);
  double eta = 1e-3;
  Vec x0(7);
  for (int i = 0; i < 7; ++i) x0[i] = (1 - eta) * base[i] + eta * u[i];
  IntegrateOptions opt;
  opt.store_dense = false;
  auto traj = integrate_rep(g, x0, 500.0, opt);
  double max_x4 = 0;
  for (const auto& s : traj.states) max_x4 = std::max(max_x4, s[3]);
  CHECK(max_x4 > 0.1);
}
