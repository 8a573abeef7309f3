#pragma once

// Golden fixtures: brute-force partition-function values at seeded parameter
// points, with full provenance, so regressions in the contraction engine are
// caught bit-for-bit. generate and check are exact inverses of each other:
// values are stored with round-trip precision.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "felderhof/report.hpp"
#include "felderhof/suites.hpp"

namespace felderhof {

namespace detail {

inline cx parse_num(const json& j) {
  if (j.is_array()) return cx(j.at(0).get<double>(), j.at(1).get<double>());
  return cx(j.get<double>());
}

inline std::vector<cx> parse_list(const json& j) {
  std::vector<cx> out;
  for (const auto& e : j) out.push_back(parse_num(e));
  return out;
}

inline ModelParams params_from_json(const json& p) {
  ThetaParams tp = ThetaParams::for_nome(p.at("nome").get<double>());
  tp.n_max = p.at("n_max").get<int>();
  const auto vs = parse_list(p.at("v"));
  const auto qs = parse_list(p.at("q"));
  std::vector<Site> sites;
  for (std::size_t i = 0; i < vs.size(); ++i) sites.push_back(Site{vs[i], qs[i]});
  return ModelParams::make(tp, parse_num(p.at("p")), parse_num(p.at("h")), std::move(sites));
}

struct GoldenCase {
  std::string id;
  std::string oracle;
  int m_sites;
  int n_particles;
  int n_w;  // -1: no w list; otherwise length of the C-side list
};

inline const std::vector<GoldenCase>& golden_cases() {
  static const std::vector<GoldenCase> cases = {
      {"dwbp_n2", "dwbp_brute", 2, 2, -1},
      {"dwbp_n3", "dwbp_brute", 3, 3, -1},
      {"scalar_m4_n2", "scalar_product_brute", 4, 2, 2},
      {"intermediate_m4_n2_k1", "intermediate_sp_brute", 4, 2, 1},
      {"wavefunction_w_m4_n2", "wavefunction_W_brute", 4, 2, -1},
      {"wavefunction_v_m4_n2", "wavefunction_V_brute", 4, 2, -1},
  };
  return cases;
}

inline cx golden_value(const GoldenCase& gc, const ModelParams& mp,
                       std::span<const cx> u, std::span<const cx> w,
                       const std::vector<int>& x) {
  if (gc.oracle == "dwbp_brute") return dwbp_brute(u, mp, mp.h);
  if (gc.oracle == "scalar_product_brute") return scalar_product_brute(u, w, mp, mp.h);
  if (gc.oracle == "intermediate_sp_brute") return intermediate_sp_brute(u, w, mp, mp.h);
  if (gc.oracle == "wavefunction_W_brute")
    return wavefunction_W_brute(u, Configuration(mp.site_count(), x), mp, mp.h);
  if (gc.oracle == "wavefunction_V_brute")
    return wavefunction_V_brute(u, Configuration(mp.site_count(), x), mp, mp.h);
  throw config_error("golden: unknown oracle " + gc.oracle);
}

}  // namespace detail

inline std::filesystem::path golden_file(const std::string& dir) {
  return std::filesystem::path(dir) / "golden.json";
}

inline json golden_build(const SuiteConfig& cfg) {
  json entries = json::array();
  for (const auto& gc : detail::golden_cases()) {
    Rng rng(cfg.seed ^ fnv1a("golden." + gc.id));
    SafeDraw d = sample_safe_params(cfg, gc.m_sites, gc.n_particles, gc.n_particles,
                                    std::max(gc.n_w, 0), rng);
    std::vector<int> x;
    if (gc.oracle == "wavefunction_W_brute" || gc.oracle == "wavefunction_V_brute")
      x = detail::random_config(gc.m_sites, gc.n_particles, rng).positions;
    std::vector<cx> w(d.w.begin(), d.w.begin() + std::max(gc.n_w, 0));
    const cx value = detail::golden_value(gc, d.mp, d.u, w, x);

    json params = detail::point_json(d.mp, d.u, w);
    if (!x.empty()) params["x"] = x;
    json e;
    e["id"] = gc.id;
    e["oracle"] = gc.oracle;
    e["truncation"] = d.mp.theta.n_max;
    e["params"] = params;
    e["value_re"] = value.real();
    e["value_im"] = value.imag();
    entries.push_back(e);
  }
  return entries;
}

inline void golden_generate(const std::string& dir, const SuiteConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream out(golden_file(dir));
  if (!out) throw config_error("golden: cannot write to " + dir);
  out << golden_build(cfg).dump(2) << "\n";
}

struct GoldenOutcome {
  bool ok = true;
  std::vector<std::string> mismatches;
};

inline GoldenOutcome golden_check(const std::string& dir) {
  std::ifstream in(golden_file(dir));
  if (!in) throw config_error("golden: fixture file not found under " + dir);
  json entries = json::parse(in);
  GoldenOutcome outcome;
  for (const auto& e : entries) {
    const ModelParams mp = detail::params_from_json(e.at("params"));
    std::vector<cx> u, w;
    if (e.at("params").contains("u")) u = detail::parse_list(e.at("params").at("u"));
    if (e.at("params").contains("w")) w = detail::parse_list(e.at("params").at("w"));
    std::vector<int> x;
    if (e.at("params").contains("x")) x = e.at("params").at("x").get<std::vector<int>>();
    detail::GoldenCase gc{e.at("id"), e.at("oracle"), mp.site_count(),
                          static_cast<int>(u.size()), static_cast<int>(w.size())};
    const cx want(e.at("value_re").get<double>(), e.at("value_im").get<double>());
    const cx got = detail::golden_value(gc, mp, u, w, x);
    if (rel_diff(got, want) >= 1e-12) {
      outcome.ok = false;
      std::ostringstream msg;
      msg << e.at("id").get<std::string>() << ": stored (" << want.real() << ", "
          << want.imag() << ") recomputed (" << got.real() << ", " << got.imag() << ")";
      outcome.mismatches.push_back(msg.str());
    }
  }
  return outcome;
}

}  // namespace felderhof
