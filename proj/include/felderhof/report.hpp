#pragma once

// Machine-readable results. The report is a single JSON document with stable
// keys {config, results[], summary}; each result carries
// {identity, anchor, samples, max_rel_residual, worst_point, pass}.

#include <string>
#include <vector>

#include <json.hpp>

#include "felderhof/sampling.hpp"

namespace felderhof {

using json = nlohmann::ordered_json;

struct CheckResult {
  std::string identity;
  std::string anchor;
  std::string suite;
  int samples = 0;
  double max_rel_residual = 0.0;
  double tolerance = 0.0;
  json worst_point = json::object();
  bool pass = false;
  double millis = 0.0;
  json triage;  // filled only when a failing identity was re-run at doubled truncation

  json to_json() const {
    json j;
    j["identity"] = identity;
    j["anchor"] = anchor;
    j["suite"] = suite;
    j["samples"] = samples;
    j["max_rel_residual"] = max_rel_residual;
    j["tolerance"] = tolerance;
    j["worst_point"] = worst_point;
    j["pass"] = pass;
    j["millis"] = millis;
    if (!triage.is_null()) j["triage"] = triage;
    return j;
  }
};

struct Report {
  json config = json::object();
  std::vector<CheckResult> results;

  bool all_pass() const {
    for (const CheckResult& r : results)
      if (!r.pass) return false;
    return true;
  }

  json to_json() const {
    json j;
    j["config"] = config;
    j["results"] = json::array();
    int passed = 0;
    double total_millis = 0.0;
    for (const CheckResult& r : results) {
      j["results"].push_back(r.to_json());
      passed += r.pass ? 1 : 0;
      total_millis += r.millis;
    }
    json summary;
    summary["total"] = results.size();
    summary["passed"] = passed;
    summary["failed"] = results.size() - passed;
    summary["all_pass"] = all_pass();
    summary["total_millis"] = total_millis;
    j["summary"] = summary;
    return j;
  }
};

inline json config_to_json(const SuiteConfig& cfg) {
  json j;
  j["nome"] = cfg.nome;
  j["m"] = cfg.m_sites;
  j["n"] = cfg.n_particles;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  if (std::isnan(cfg.tol_override))
    j["tol"] = nullptr;
  else
    j["tol"] = cfg.tol_override;
  j["eps"] = cfg.eps;
  j["delta_spectral"] = cfg.delta_spectral;
  j["suites"] = cfg.suites.empty() ? json::array({"all"}) : json(cfg.suites);
  return j;
}

/// Copy of a report JSON with every timing field removed, for determinism
/// comparisons.
inline json strip_timing(json j) {
  if (j.is_object()) {
    j.erase("millis");
    j.erase("total_millis");
    for (auto& [key, value] : j.items()) value = strip_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) value = strip_timing(value);
  }
  return j;
}

}  // namespace felderhof
