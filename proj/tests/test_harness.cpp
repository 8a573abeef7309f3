#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <future>
#include <fstream>
#include <sstream>

#include "felderhof/golden.hpp"
#include "felderhof/suites.hpp"

using namespace felderhof;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("safe sampler keeps every height combination inside the budget") {
  SuiteConfig cfg;
  Rng rng(111);
  for (auto [m, n] : {std::pair{4, 2}, {8, 4}, {6, 3}}) {
    const SafeDraw d = sample_safe_params(cfg, m, n, n, n, rng);
    const double p = d.mp.p.real();
    const double h = d.mp.h.real();
    double q_total = 0.0;
    for (const Site& s : d.mp.sites) {
      CHECK(s.q.real() > cfg.eps / 2.0);
      CHECK(s.v.real() >= 0.0);
      CHECK(s.v.real() <= 0.05);
      q_total += s.q.real();
    }
    CHECK(p > cfg.eps / 2.0);
    CHECK(h > cfg.eps);
    CHECK(h + 4.0 * n * p + 2.0 * q_total < 1.0 - cfg.eps);
  }
}

TEST_CASE("sampler rejects infeasible budgets naming the inequality") {
  SuiteConfig cfg;
  Rng rng(112);
  try {
    sample_safe_params(cfg, 20, 10, 10, 10, rng);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("h + 4*N*p + 2*qbar_M < 1 - eps") != std::string::npos);
    CHECK(msg.find("M=20") != std::string::npos);
  }
}

TEST_CASE("sampler separates spectral parameters and is deterministic") {
  SuiteConfig cfg;
  Rng r1(113), r2(113);
  const SafeDraw a = sample_safe_params(cfg, 6, 3, 3, 3, r1);
  const SafeDraw b = sample_safe_params(cfg, 6, 3, 3, 3, r2);
  CHECK(a.mp.p == b.mp.p);
  CHECK(a.mp.h == b.mp.h);
  for (int j = 1; j <= 6; ++j) {
    CHECK(a.mp.v(j) == b.mp.v(j));
    CHECK(a.mp.q(j) == b.mp.q(j));
  }
  CHECK(a.u == b.u);
  CHECK(a.w == b.w);

  std::vector<double> all;
  for (const Site& s : a.mp.sites) all.push_back(s.v.real());
  for (cx x : a.u) all.push_back(x.real());
  for (cx x : a.w) all.push_back(x.real());
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      CHECK(std::abs(all[i] - all[j]) >= cfg.delta_spectral);
}

TEST_CASE("identity registry carries anchors and is suite-addressable") {
  const auto& registry = identity_registry();
  CHECK(registry.size() >= 25);
  for (const Identity& ident : registry) {
    CHECK(!ident.anchor.empty());
    CHECK(ident.anchor.find("Eq") != std::string::npos);
    CHECK(ident.default_tol > 0.0);
  }
  CHECK(find_identity("scalar.determinant") != nullptr);
  CHECK(find_identity("no.such.identity") == nullptr);
}

TEST_CASE("run_suite on the theta suite passes and reports") {
  SuiteConfig cfg;
  cfg.samples = 10;
  cfg.suites = {"theta"};
  const Report report = run_suite(cfg);
  CHECK(report.all_pass());
  const json j = report.to_json();
  REQUIRE(j.contains("results"));
  for (const auto& r : j.at("results")) {
    CHECK(r.contains("identity"));
    CHECK(r.contains("anchor"));
    CHECK(r.contains("samples"));
    CHECK(r.contains("max_rel_residual"));
    CHECK(r.contains("worst_point"));
    CHECK(r.contains("pass"));
    CHECK(r.at("pass").get<bool>());
  }
  CHECK(j.at("summary").at("all_pass").get<bool>());
}

TEST_CASE("unreachable tolerance produces a triaged failure, not an exception") {
  SuiteConfig cfg;
  cfg.samples = 5;
  cfg.suites = {"dwbp"};
  cfg.tol_override = 1e-20;
  const Report report = run_suite(cfg);
  CHECK_FALSE(report.all_pass());
  REQUIRE(report.results.size() == 1);
  const CheckResult& r = report.results[0];
  CHECK_FALSE(r.pass);
  CHECK(!r.worst_point.empty());
  REQUIRE(!r.triage.is_null());
  CHECK(r.triage.contains("residual_at_doubled_truncation"));
  CHECK(r.triage.at("verdict").get<std::string>() == "residual-persists");
}

TEST_CASE("unknown suite selection is a configuration error") {
  SuiteConfig cfg;
  cfg.suites = {"nonsense"};
  CHECK_THROWS_AS(run_suite(cfg), config_error);
}

TEST_CASE("reports reproduce bit-identically modulo timing") {
  SuiteConfig cfg;
  cfg.samples = 5;
  cfg.suites = {"theta", "dwbp", "scalar"};
  const json a = strip_timing(run_suite(cfg).to_json());
  const json b = strip_timing(run_suite(cfg).to_json());
  CHECK(a.dump() == b.dump());

  SuiteConfig other = cfg;
  other.seed += 1;
  const json c = strip_timing(run_suite(other).to_json());
  CHECK(a.dump() != c.dump());
}

TEST_CASE("golden fixtures round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "felderhof_golden_test";
  std::filesystem::remove_all(dir);
  SuiteConfig cfg;

  golden_generate(dir.string(), cfg);
  REQUIRE(std::filesystem::exists(golden_file(dir.string())));
  CHECK(golden_check(dir.string()).ok);

  // regeneration is byte-identical
  const std::string first = slurp(golden_file(dir.string()));
  golden_generate(dir.string(), cfg);
  CHECK(first == slurp(golden_file(dir.string())));

  // perturbing one stored amplitude is caught and named
  json entries = json::parse(first);
  entries.at(0)["value_re"] = entries.at(0).at("value_re").get<double>() * (1.0 + 1e-6);
  {
    std::ofstream out(golden_file(dir.string()));
    out << entries.dump(2) << "\n";
  }
  const GoldenOutcome outcome = golden_check(dir.string());
  CHECK_FALSE(outcome.ok);
  REQUIRE(outcome.mismatches.size() == 1);
  CHECK(outcome.mismatches[0].find(entries.at(0).at("id").get<std::string>()) !=
        std::string::npos);

  CHECK_THROWS_AS(golden_check((dir / "missing").string()), config_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent identity runs match the sequential results") {
  // each identity owns its RNG stream, so execution order and concurrency
  // cannot perturb the report
  SuiteConfig cfg;
  cfg.samples = 5;
  std::vector<const Identity*> idents;
  for (const char* id : {"dwbp.factorization", "scalar.determinant", "cauchy.formula",
                         "frobenius.determinant"})
    idents.push_back(find_identity(id));
  std::vector<std::future<CheckResult>> futures;
  futures.reserve(idents.size());
  for (const Identity* ident : idents)
    futures.push_back(std::async(std::launch::async,
                                 [&cfg, ident] { return run_identity(*ident, cfg); }));
  for (std::size_t i = 0; i < idents.size(); ++i) {
    const CheckResult parallel = futures[i].get();
    const CheckResult sequential = run_identity(*idents[i], cfg);
    CHECK(parallel.pass);
    CHECK(parallel.max_rel_residual == sequential.max_rel_residual);
    CHECK(strip_timing(parallel.to_json()).dump() ==
          strip_timing(sequential.to_json()).dump());
  }
}

TEST_CASE("whole-suite run at small sample counts") {
  SuiteConfig cfg;
  cfg.samples = 3;
  cfg.m_sites = 3;
  cfg.n_particles = 2;
  const Report report = run_suite(cfg);
  for (const CheckResult& r : report.results) {
    INFO(r.identity << " residual " << r.max_rel_residual << " tol " << r.tolerance);
    CHECK(r.pass);
  }
}
