// gamedyn command-line driver: exact Nash enumeration, replicator and
// best-reply experiment batches, Shapley triangle geometry, and the
// rescale-decomposition report.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gamedyn/analysis.hpp"
#include "gamedyn/bestreply.hpp"
#include "gamedyn/equilibria.hpp"
#include "gamedyn/experiments.hpp"
#include "gamedyn/game.hpp"
#include "gamedyn/json_io.hpp"

using namespace gamedyn;

namespace {

struct BuilderArgs {
  std::string builder;
  std::string eps = "0";
  std::string alpha = "0";
  std::string beta = "0";
  std::string a, b, c;  // comma-separated general-form rows
};

std::array<Rat, 3> parse_triple(const std::string& s) {
  std::array<Rat, 3> out;
  std::stringstream ss(s);
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, tok, ',')) throw std::invalid_argument("expected three comma-separated rationals");
    out[i] = parse_rational(tok);
  }
  return out;
}

SymmetricGame build_from_args(const BuilderArgs& ba) {
  if (ba.builder == "game66") return build_game_66();
  if (ba.builder == "game77") {
    Rat e = parse_rational(ba.eps);
    if (e == 0) e = Rat(1, 100);
    return build_game_77(e);
  }
  if (ba.builder == "rps-cyclic") {
    Rat al = parse_rational(ba.alpha), be = parse_rational(ba.beta);
    if (al == 0) al = 3;
    if (be == 0) be = 1;
    return build_rps(RPSSpec::cyclic(al, be));
  }
  if (ba.builder == "rps-epsilon") {
    Rat e = parse_rational(ba.eps);
    if (e == 0) e = Rat(1, 3);
    return build_rps(RPSSpec::epsilon(e));
  }
  if (ba.builder == "rps-general")
    return build_rps(RPSSpec::general(parse_triple(ba.a), parse_triple(ba.b), parse_triple(ba.c)));
  throw std::invalid_argument("unknown builder: " + ba.builder);
}

void add_builder_flags(CLI::App* cmd, BuilderArgs& ba) {
  cmd->add_option("--builder", ba.builder,
                  "game66 | game77 | rps-cyclic | rps-epsilon | rps-general");
  cmd->add_option("--eps", ba.eps, "epsilon parameter, written p/q");
  cmd->add_option("--alpha", ba.alpha, "cyclic RPS alpha, written p/q");
  cmd->add_option("--beta", ba.beta, "cyclic RPS beta, written p/q");
  cmd->add_option("--a", ba.a, "general RPS diagonal a1,a2,a3");
  cmd->add_option("--b", ba.b, "general RPS losses b1,b2,b3");
  cmd->add_option("--c", ba.c, "general RPS wins c1,c2,c3");
}

int thread_count_from_env() {
  const char* env = std::getenv("GAMEDYN_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n > 0 ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolutionary game dynamics toolkit"};
  app.require_subcommand(1);

  // ---- nash ----
  auto* nash = app.add_subcommand("nash", "enumerate all Nash equilibria of a game");
  std::string nash_file;
  BuilderArgs nash_builder;
  nash->add_option("game", nash_file, "game JSON file ({n, payoff:[[num,den],...]})");
  add_builder_flags(nash, nash_builder);

  // ---- run ----
  auto* run = app.add_subcommand("run", "run a named experiment batch");
  std::string run_name, config_path, out_dir;
  int count = 0, runs_per_game = 0;
  uint64_t seed = 0;
  double horizon = 0, rtol = 0, atol = 0;
  std::string eps_s, delta_s, alpha_s, beta_s;
  run->add_option("experiment", run_name,
                  "br66 | rep77 | br77 | rps-br | rps-rep | rescale-check | perturb66");
  run->add_option("--config", config_path, "JSON config file; flags override");
  run->add_option("--count", count, "number of runs / games");
  run->add_option("--seed", seed, "base RNG seed");
  run->add_option("--T", horizon, "time horizon");
  run->add_option("--eps", eps_s, "epsilon, written p/q");
  run->add_option("--delta", delta_s, "perturbation magnitude, written p/q");
  run->add_option("--alpha", alpha_s, "cyclic RPS alpha (rps-br)");
  run->add_option("--beta", beta_s, "cyclic RPS beta (rps-br)");
  run->add_option("--runs-per-game", runs_per_game, "BR runs per perturbed game");
  run->add_option("--rtol", rtol, "integrator relative tolerance");
  run->add_option("--atol", atol, "integrator absolute tolerance");
  run->add_option("--out", out_dir, "directory for per-run CSV/JSON exports");

  // ---- shapley ----
  auto* shp = app.add_subcommand("shapley", "print Shapley triangle vertices for a builder");
  BuilderArgs shp_builder;
  std::string face_s = "1,2,3";
  add_builder_flags(shp, shp_builder);
  shp->add_option("--face", face_s, "host face, 1-based, e.g. 4,5,6");

  // ---- decompose-check ----
  auto* dec = app.add_subcommand("decompose-check", "rescale-lemma report for the 7x7 game");
  int dec_count = 10;
  uint64_t dec_seed = 1;
  double dec_T = 50;
  std::string dec_eps = "1/50";
  dec->add_option("--count", dec_count, "number of starts");
  dec->add_option("--seed", dec_seed, "base RNG seed");
  dec->add_option("--T", dec_T, "horizon");
  dec->add_option("--eps", dec_eps, "epsilon, written p/q");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*nash) {
      SymmetricGame g =
          nash_builder.builder.empty() ? load_game(nash_file) : build_from_args(nash_builder);
      auto res = enumerate_nash(g);
      std::cout << enumeration_to_json(res).dump(2) << "\n";
      std::cerr << (res.certificates.size() == 1 && !res.degenerate
                        ? "unique Nash equilibrium\n"
                        : std::to_string(res.certificates.size()) + " equilibria" +
                              (res.degenerate ? " (degenerate game)\n" : "\n"));
      return 0;
    }

    if (*run) {
      ExperimentConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config: " + config_path);
        json j;
        in >> j;
        cfg = config_from_json(j);
      }
      if (!run_name.empty()) cfg.name = run_name;
      if (count) cfg.count = count;
      if (seed) cfg.seed = seed;
      if (horizon) cfg.horizon = horizon;
      if (!eps_s.empty()) cfg.eps = parse_rational(eps_s);
      if (!delta_s.empty()) cfg.delta = parse_rational(delta_s);
      if (!alpha_s.empty()) cfg.alpha = parse_rational(alpha_s);
      if (!beta_s.empty()) cfg.beta = parse_rational(beta_s);
      if (runs_per_game) cfg.runs_per_game = runs_per_game;
      if (rtol) cfg.rtol = rtol;
      if (atol) cfg.atol = atol;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      cfg.threads = thread_count_from_env();

      auto res = run_experiment(cfg);
      if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream rf(cfg.out_dir + "/" + cfg.name + "_reports.jsonl");
        write_reports_jsonl(rf, res);
      } else {
        write_reports_jsonl(std::cout, res);
      }
      std::cout << res.summary << "\n";
      return res.all_ok ? 0 : 1;
    }

    if (*shp) {
      SymmetricGame g = build_from_args(shp_builder);
      std::vector<int> face;
      {
        std::stringstream ss(face_s);
        std::string tok;
        while (std::getline(ss, tok, ',')) face.push_back(std::stoi(tok) - 1);
      }
      RPSSpec spec = rps_spec_from_block(g, {face.at(0), face.at(1), face.at(2)});
      auto geom = shapley_triangle(spec, face, g);
      json j;
      j["face"] = index_set_to_json(geom.face);
      j["vertices"] = json::array();
      for (const auto& v : geom.vertices) {
        json vv;
        vv["exact"] = ratvec_to_json(v);
        vv["float"] = to_double(v);
        j["vertices"].push_back(vv);
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*dec) {
      ExperimentConfig cfg;
      cfg.name = "rescale-check";
      cfg.count = dec_count;
      cfg.seed = dec_seed;
      cfg.horizon = dec_T;
      cfg.eps = parse_rational(dec_eps);
      cfg.threads = thread_count_from_env();
      auto res = run_experiment(cfg);
      write_reports_jsonl(std::cout, res);
      std::cout << res.summary << "\n";
      return res.all_ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
