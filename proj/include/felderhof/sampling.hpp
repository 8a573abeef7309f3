#pragma once

// Branch-safe parameter sampling. Every height combination that ends up under
// a bracket square root must stay inside (eps, 1-eps) on the real line, where
// principal roots compose multiplicatively; the sampler enforces the budget
// h + 4Np + 2 qbar_M < 1 - eps and keeps spectral parameters well separated.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "felderhof/lattice.hpp"

namespace felderhof {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic uniform source: the raw mt19937_64 stream (fully specified
/// by the standard) mapped to doubles by the 53-bit construction. <random>
/// distributions are avoided so fixtures reproduce across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t next_u64() { return eng_(); }
  int below(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
      std::swap(v[i], v[static_cast<std::size_t>(below(i + 1))]);
  }

 private:
  std::mt19937_64 eng_;
};

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct SuiteConfig {
  double nome = 0.1;
  int m_sites = 4;
  int n_particles = 2;
  int samples = 20;
  std::uint64_t seed = 12345;
  double tol_override = std::numeric_limits<double>::quiet_NaN();  // NaN: per-identity default
  double eps = 0.02;              // safe-domain margin for square-rooted heights
  double delta_spectral = 1e-3;   // minimum pairwise spectral separation
  std::vector<std::string> suites;  // empty selects every suite

  bool selects(const std::string& suite) const {
    if (suites.empty()) return true;
    for (const std::string& s : suites)
      if (s == suite || s == "all") return true;
    return false;
  }
};

struct SafeDraw {
  ModelParams mp;
  std::vector<cx> u, w;
};

namespace detail {

constexpr double kMinPQ = 0.011;   // keeps 2p, 2q above eps = 0.02
constexpr double kMinH = 0.1;
constexpr double kBudgetTop = 0.78;  // h_min + total height budget stays below this

inline double pq_cap(int m_sites, int n_particles) {
  const double cap = (kBudgetTop - kMinH) /
                     static_cast<double>(4 * n_particles + 2 * m_sites);
  return std::min(0.05, cap);
}

// Values in (0, 0.05) with pairwise separation >= delta, drawn one at a time
// with rejection and a global restart when a draw gets stuck.
inline std::vector<double> separated_values(int count, double delta, Rng& rng) {
  std::vector<double> vals;
  for (int restart = 0; restart < 1000; ++restart) {
    vals.clear();
    bool ok = true;
    for (int i = 0; i < count && ok; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        const double x = rng.uniform(0.0, 0.05);
        placed = true;
        for (double y : vals)
          if (std::abs(x - y) < delta) {
            placed = false;
            break;
          }
        if (placed) vals.push_back(x);
      }
      ok = placed;
    }
    if (ok) return vals;
  }
  throw config_error("sampler: could not separate spectral parameters by delta");
}

}  // namespace detail

/// Draw safe-domain model parameters plus n_u spectral u's and n_w spectral
/// w's; the v's, u's and w's are jointly separated by delta_spectral.
inline SafeDraw sample_safe_params(const SuiteConfig& cfg, int m_sites, int n_particles,
                                   int n_u, int n_w, Rng& rng) {
  if (m_sites < 1 || n_particles < 0 || n_particles > m_sites)
    throw config_error("sampler: need 1 <= M and 0 <= N <= M");
  const double cap = detail::pq_cap(m_sites, n_particles);
  if (cap < detail::kMinPQ)
    throw config_error(
        "sampler: height budget infeasible for M=" + std::to_string(m_sites) + ", N=" +
        std::to_string(n_particles) +
        ": h + 4*N*p + 2*qbar_M < 1 - eps cannot hold with p, q_j >= 0.011");

  const double p = rng.uniform(detail::kMinPQ, cap);
  std::vector<double> qs(m_sites);
  double q_total = 0.0;
  for (double& q : qs) {
    q = rng.uniform(detail::kMinPQ, cap);
    q_total += q;
  }
  const double ladder = 4.0 * n_particles * p + 2.0 * q_total;
  const double h_max = 1.0 - cfg.eps - ladder - 0.02;
  if (h_max <= detail::kMinH)
    throw config_error("sampler: no feasible height window after drawing p, q");
  const double h = rng.uniform(detail::kMinH, h_max);

  const auto spectral =
      detail::separated_values(m_sites + n_u + n_w, cfg.delta_spectral, rng);
  std::vector<Site> sites(m_sites);
  for (int j = 0; j < m_sites; ++j) sites[j] = Site{cx(spectral[j]), cx(qs[j])};

  SafeDraw draw{ModelParams::make(ThetaParams::for_nome(cfg.nome), cx(p), cx(h),
                                  std::move(sites)),
                {}, {}};
  for (int i = 0; i < n_u; ++i) draw.u.push_back(cx(spectral[m_sites + i]));
  for (int i = 0; i < n_w; ++i) draw.w.push_back(cx(spectral[m_sites + n_u + i]));
  return draw;
}

}  // namespace felderhof
