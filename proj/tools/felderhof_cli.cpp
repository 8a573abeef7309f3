// Command-line front end: run identity suites, manage golden fixtures, list
// the identity catalogue. Exit codes: 0 pass, 1 identity failure,
// 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "felderhof/golden.hpp"
#include "felderhof/suites.hpp"

namespace {

int cmd_run(const felderhof::SuiteConfig& cfg, const std::string& report_path) {
  const felderhof::Report report = felderhof::run_suite(cfg);
  for (const felderhof::CheckResult& r : report.results) {
    std::printf("[%s] %-32s %-24s residual=%.3e tol=%.1e samples=%d (%.1f ms)\n",
                r.pass ? "PASS" : "FAIL", r.identity.c_str(), r.anchor.c_str(),
                r.max_rel_residual, r.tolerance, r.samples, r.millis);
    if (!r.triage.is_null())
      std::printf("       triage: %s (doubled-truncation residual %.3e)\n",
                  r.triage.at("verdict").get<std::string>().c_str(),
                  r.triage.at("residual_at_doubled_truncation").get<double>());
  }
  const felderhof::json summary = report.to_json().at("summary");
  std::printf("%zu/%zu identities passed\n", summary.at("passed").get<std::size_t>(),
              summary.at("total").get<std::size_t>());
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw felderhof::config_error("cannot write report to " + report_path);
    out << report.to_json().dump(2) << "\n";
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_list() {
  for (const felderhof::Identity& ident : felderhof::identity_registry())
    std::printf("%-32s %-12s %-26s default tol %.1e\n", ident.id.c_str(),
                ident.suite.c_str(), ident.anchor.c_str(), ident.default_tol);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical identity checks for the elliptic Felderhof model"};
  app.require_subcommand(1);

  felderhof::SuiteConfig cfg;
  std::string suite = "all";
  std::string report_path;

  CLI::App* run = app.add_subcommand("run", "run identity suites");
  run->add_option("--suite", suite, "suite name or 'all'");
  run->add_option("--m", cfg.m_sites, "number of lattice sites M");
  run->add_option("--n", cfg.n_particles, "number of particles N");
  run->add_option("--nome", cfg.nome, "elliptic nome in (0,1)");
  run->add_option("--samples", cfg.samples, "random samples per identity");
  run->add_option("--seed", cfg.seed, "RNG seed");
  run->add_option("--tol", cfg.tol_override, "override every per-identity tolerance");
  run->add_option("--report", report_path, "write the JSON report here");

  CLI::App* golden = app.add_subcommand("golden", "golden fixture management");
  std::string golden_cmd, golden_path;
  golden->add_option("cmd", golden_cmd, "generate or check")->required();
  golden->add_option("--path", golden_path, "fixture directory")->required();
  golden->add_option("--nome", cfg.nome, "elliptic nome in (0,1)");
  golden->add_option("--seed", cfg.seed, "RNG seed");

  CLI::App* list = app.add_subcommand("list-identities", "print the identity catalogue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      if (suite != "all") cfg.suites.push_back(suite);
      return cmd_run(cfg, report_path);
    }
    if (golden->parsed()) {
      if (golden_cmd == "generate") {
        felderhof::golden_generate(golden_path, cfg);
        std::printf("wrote %s\n", felderhof::golden_file(golden_path).string().c_str());
        return 0;
      }
      if (golden_cmd == "check") {
        const felderhof::GoldenOutcome outcome = felderhof::golden_check(golden_path);
        if (outcome.ok) {
          std::printf("golden fixtures match\n");
          return 0;
        }
        for (const std::string& m : outcome.mismatches)
          std::printf("mismatch: %s\n", m.c_str());
        return 1;
      }
      throw felderhof::config_error("golden: expected 'generate' or 'check'");
    }
    if (list->parsed()) return cmd_list();
  } catch (const felderhof::config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
