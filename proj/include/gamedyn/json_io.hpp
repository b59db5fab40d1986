#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gamedyn/analysis.hpp"
#include "gamedyn/bestreply.hpp"
#include "gamedyn/equilibria.hpp"
#include "gamedyn/game.hpp"

namespace gamedyn {

using nlohmann::json;

// Rationals serialize as [num, den] integer pairs; components that overflow
// 64 bits (deep best-reply event states) fall back to decimal strings.
inline json rat_to_json(const Rat& q) {
  json j = json::array();
  if (fits_int64(q.get_num()) && fits_int64(q.get_den())) {
    j.push_back(static_cast<int64_t>(q.get_num().get_si()));
    j.push_back(static_cast<int64_t>(q.get_den().get_si()));
  } else {
    j.push_back(q.get_num().get_str());
    j.push_back(q.get_den().get_str());
  }
  return j;
}

inline Rat rat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("rational: expected [num, den]");
  auto part = [](const json& v) {
    if (v.is_number_integer()) return mpz_class(static_cast<long>(v.get<int64_t>()));
    if (v.is_string()) return mpz_class(v.get<std::string>());
    throw std::invalid_argument("rational: component must be integer or string");
  };
  Rat q(part(j[0]), part(j[1]));
  if (q.get_den() == 0) throw std::invalid_argument("rational: zero denominator");
  q.canonicalize();
  return q;
}

inline json ratvec_to_json(const RatVec& v) {
  json j = json::array();
  for (const Rat& q : v) j.push_back(rat_to_json(q));
  return j;
}

inline RatVec ratvec_from_json(const json& j) {
  RatVec v;
  for (const auto& e : j) v.push_back(rat_from_json(e));
  return v;
}

inline json game_to_json(const SymmetricGame& g) {
  json j;
  j["n"] = g.n;
  j["payoff"] = json::array();
  for (const Rat& q : g.payoff) j["payoff"].push_back(rat_to_json(q));
  return j;
}

inline SymmetricGame game_from_json(const json& j) {
  int n = j.at("n").get<int>();
  std::vector<Rat> entries;
  for (const auto& e : j.at("payoff")) entries.push_back(rat_from_json(e));
  return make_game(n, std::move(entries));
}

inline SymmetricGame load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open game file: " + path);
  json j;
  in >> j;
  return game_from_json(j);
}

// strategy labels are 1-based in all serialized output
inline json index_set_to_json(const std::vector<int>& s) {
  json j = json::array();
  for (int i : s) j.push_back(i + 1);
  return j;
}

inline json certificate_to_json(const EquilibriumCertificate& c) {
  json j;
  j["x"] = ratvec_to_json(c.x);
  j["y"] = ratvec_to_json(c.y);
  j["support_x"] = index_set_to_json(c.support_x);
  j["support_y"] = index_set_to_json(c.support_y);
  j["quasi_strict"] = c.quasi_strict;
  j["strict"] = c.strict;
  j["from_degenerate_support"] = c.from_degenerate_support;
  return j;
}

inline json enumeration_to_json(const EnumerationResult& r) {
  json j;
  j["degenerate"] = r.degenerate;
  j["unique"] = (r.certificates.size() == 1 && !r.degenerate);
  j["certificates"] = json::array();
  for (const auto& c : r.certificates) j["certificates"].push_back(certificate_to_json(c));
  return j;
}

inline json br_solution_to_json(const BRSolution& sol) {
  json j;
  j["segments"] = json::array();
  for (const auto& seg : sol.segments) {
    json s;
    s["t_start"] = seg.t_start;
    s["duration"] = seg.duration;
    s["unbounded"] = seg.unbounded;
    s["target"] = seg.target + 1;
    s["state"] = ratvec_to_json(seg.start_state);
    j["segments"].push_back(std::move(s));
  }
  j["events"] = json::array();
  for (const auto& e : sol.events) {
    json ev;
    ev["t"] = e.t;
    ev["old_br"] = index_set_to_json(e.old_br);
    ev["new_br"] = index_set_to_json(e.new_br);
    j["events"].push_back(std::move(ev));
  }
  switch (sol.termination) {
    case BRTermination::horizon: j["termination"] = "horizon"; break;
    case BRTermination::non_unique_continuation: j["termination"] = "non_unique_continuation"; break;
    case BRTermination::equilibrium: j["termination"] = "equilibrium"; break;
  }
  j["final_time"] = sol.final_time;
  if (!sol.non_unique_tie.empty()) j["non_unique_tie"] = index_set_to_json(sol.non_unique_tie);
  return j;
}

inline json report_to_json(const ConvergenceReport& r) {
  json j;
  j["verdict"] = verdict_name(r.verdict);
  j["face"] = index_set_to_json(r.face);
  j["eliminated"] = index_set_to_json(r.eliminated);
  j["metrics"] = r.metrics;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  j["flagged"] = r.flagged;
  j["target_met"] = r.target_met;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

}  // namespace gamedyn
