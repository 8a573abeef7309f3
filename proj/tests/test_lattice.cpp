#include <catch2/catch_amalgamated.hpp>

#include "felderhof/closedforms.hpp"
#include "felderhof/sampling.hpp"
#include "oracles.hpp"

using namespace felderhof;

namespace {

ModelParams two_site_model() {
  return ModelParams::make(ThetaParams::for_nome(0.1), cx(0.02), cx(0.3),
                           {Site{cx(0.01), cx(0.015)}, Site{cx(0.03), cx(0.025)}});
}

SuiteConfig cfg_default() { return SuiteConfig{}; }

}  // namespace

TEST_CASE("r_weights match the displayed entries") {
  const ThetaParams tp = ThetaParams::for_nome(0.1);
  const cx u(0.02), v(0.05), p(0.03), q(0.04), h(0.35);
  const RWeights w = r_weights(u, v, p, q, h, tp);
  CHECK(rel_diff(w.a_plus, bracket(u - v + p + q, tp)) < 1e-15);
  CHECK(rel_diff(w.a_minus, bracket(-u + v + p + q, tp)) < 1e-15);
  const cx den = bracket_sqrt(h + 2.0 * p, tp) * bracket_sqrt(h + 2.0 * q, tp);
  CHECK(rel_diff(w.c_minus, bracket_sqrt(2.0 * p, tp) * bracket_sqrt(2.0 * q, tp) *
                                bracket(u - v + q + p + h, tp) / den) < 1e-14);

  // b_plus vanishes when u - v = p - q
  const RWeights wz = r_weights(v + (p - q), v, p, q, h, tp);
  CHECK(std::abs(wz.b_plus) < 1e-15);
}

TEST_CASE("r_matrix4 has the ice-rule zero pattern") {
  const ThetaParams tp = ThetaParams::for_nome(0.1);
  const auto m = r_matrix4(cx(0.02), cx(0.05), cx(0.03), cx(0.04), cx(0.35), tp);
  int zeros = 0;
  for (int i = 0; i < 16; ++i)
    if (m[i] == cx(0.0)) ++zeros;
  CHECK(zeros == 10);
  CHECK(m[0] != cx(0.0));
  CHECK(m[15] != cx(0.0));
}

TEST_CASE("singular heights are rejected") {
  const ThetaParams tp = ThetaParams::for_nome(0.1);
  // h + 2p = 0 makes [h+2p] vanish
  CHECK_THROWS_AS(r_weights(cx(0.01), cx(0.02), cx(0.05), cx(0.03), cx(-0.1), tp),
                  singular_height_error);
}

TEST_CASE("branch warnings surface outside the safe domain") {
  const ThetaParams tp = ThetaParams::for_nome(0.1);
  bool warn = true;
  r_weights(cx(0.01), cx(0.02), cx(0.03), cx(0.04), cx(0.35), tp, &warn);
  CHECK_FALSE(warn);
  // an imaginary height puts [h] on the principal cut
  r_weights(cx(0.01), cx(0.02), cx(0.03), cx(0.04), cx(0.0, 0.15 * tp.tau.imag()), tp,
            &warn);
  CHECK(warn);
}

TEST_CASE("dynamical Yang-Baxter relation") {
  const ThetaParams tp = ThetaParams::for_nome(0.1);
  Rng rng(31);
  for (int i = 0; i < 25; ++i) {
    const cx u(rng.uniform(0.0, 0.05)), v(rng.uniform(0.0, 0.05)), w(rng.uniform(0.0, 0.05));
    const cx p(rng.uniform(0.011, 0.05)), q(rng.uniform(0.011, 0.05)),
        r(rng.uniform(0.011, 0.05));
    const cx h(rng.uniform(0.1, 0.55));
    CHECK(ybe_residual(u, v, w, p, q, r, h, tp) < 1e-12);
  }
  // degenerate coincidences do not break the relation
  CHECK(ybe_residual(cx(0.02), cx(0.02), cx(0.04), cx(0.03), cx(0.03), cx(0.02), cx(0.4),
                     tp) < 1e-12);
}

TEST_CASE("Yang-Baxter sweep across nomes") {
  Rng rng(32);
  double worst = 0.0;
  for (double nome : {0.05, 0.1, 0.2}) {
    const ThetaParams tp = ThetaParams::for_nome(nome);
    for (int i = 0; i < 34; ++i) {
      const cx u(rng.uniform(0.0, 0.05)), v(rng.uniform(0.0, 0.05)), w(rng.uniform(0.0, 0.05));
      const cx p(rng.uniform(0.011, 0.05)), q(rng.uniform(0.011, 0.05)),
          r(rng.uniform(0.011, 0.05));
      const cx h(rng.uniform(0.1, 0.55));
      worst = std::max(worst, ybe_residual(u, v, w, p, q, r, h, tp));
    }
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("apply_B on one site is the hopping weight") {
  const ModelParams mp = ModelParams::make(ThetaParams::for_nome(0.1), cx(0.02), cx(0.3),
                                           {Site{cx(0.01), cx(0.015)}});
  const cx u(0.04);
  const SectorVector out = apply_B(u, mp.h, mp, vacuum(1));
  REQUIRE(out.sector() == 1);
  const RWeights w = r_weights(u, mp.v(1), mp.p, mp.q(1), mp.h, mp.theta);
  CHECK(rel_diff(out.amplitudes[0], w.c_plus) < 1e-15);
}

TEST_CASE("apply_C on one site is the absorbing weight") {
  const ModelParams mp = ModelParams::make(ThetaParams::for_nome(0.1), cx(0.02), cx(0.3),
                                           {Site{cx(0.01), cx(0.015)}});
  const cx u(0.04);
  const SectorVector out = apply_C(u, mp.h, mp, configuration_state(Configuration(1, {1})));
  REQUIRE(out.sector() == 0);
  const RWeights w = r_weights(u, mp.v(1), mp.p, mp.q(1), mp.h, mp.theta);
  CHECK(rel_diff(out.amplitudes[0], w.c_minus) < 1e-15);
}

TEST_CASE("sector overflow and underflow are rejected") {
  const ModelParams mp = two_site_model();
  CHECK_THROWS_AS(apply_B(cx(0.01), mp.h, mp, configuration_state(Configuration(2, {1, 2}))),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_C(cx(0.01), mp.h, mp, vacuum(2)), std::invalid_argument);
}

TEST_CASE("apply_B and apply_C agree with the dense contraction oracle") {
  SuiteConfig cfg = cfg_default();
  Rng rng(37);
  const SafeDraw d = sample_safe_params(cfg, 3, 2, 1, 0, rng);
  const cx u = d.u[0];

  const oracles::DenseMonodromy dense(u, d.mp.h, d.mp);

  // B on the vacuum
  {
    const SectorVector got = apply_B(u, d.mp.h, d.mp, vacuum(3));
    const auto full = dense.apply(dense.b_full, dense.dense(vacuum(3)));
    for (std::size_t i = 0; i < got.basis->dim(); ++i)
      CHECK(rel_diff(got.amplitudes[i], full[got.basis->config(i).mask()]) < 1e-13);
  }

  // C on a random two-particle vector
  {
    auto basis = SectorBasis::make(3, 2);
    std::vector<cx> amps;
    for (std::size_t i = 0; i < basis->dim(); ++i)
      amps.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const SectorVector v(basis, amps);
    const SectorVector got = apply_C(u, d.mp.h, d.mp, v);
    const auto full = dense.apply(dense.c_full, dense.dense(v));
    for (std::size_t i = 0; i < got.basis->dim(); ++i)
      CHECK(rel_diff(got.amplitudes[i], full[got.basis->config(i).mask()]) < 1e-13);
  }

  // B on a random one-particle vector (checks every transition weight)
  {
    auto basis = SectorBasis::make(3, 1);
    std::vector<cx> amps;
    for (std::size_t i = 0; i < basis->dim(); ++i)
      amps.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const SectorVector v(basis, amps);
    const SectorVector got = apply_B(u, d.mp.h, d.mp, v);
    const auto full = dense.apply(dense.b_full, dense.dense(v));
    for (std::size_t i = 0; i < got.basis->dim(); ++i)
      CHECK(rel_diff(got.amplitudes[i], full[got.basis->config(i).mask()]) < 1e-13);
  }
}

TEST_CASE("b_string reduces to apply_B and realizes the domain wall amplitude") {
  const ModelParams mp = two_site_model();
  const std::vector<cx> u{cx(0.005), cx(0.04)};

  const SectorVector one = b_string(std::span<const cx>(u.data(), 1), mp.h, mp, vacuum(2));
  const SectorVector direct = apply_B(u[0], mp.h, mp, vacuum(2));
  for (std::size_t i = 0; i < one.amplitudes.size(); ++i)
    CHECK(one.amplitudes[i] == direct.amplitudes[i]);

  const SectorVector packed = b_string(u, mp.h, mp, vacuum(2));
  CHECK(rel_diff(inner(Configuration(2, {1, 2}), packed), dwbp_brute(u, mp, mp.h)) == 0.0);
}

TEST_CASE("swapping spectral parameters changes the state but not the symmetrized value") {
  SuiteConfig cfg = cfg_default();
  Rng rng(41);
  const SafeDraw d = sample_safe_params(cfg, 3, 2, 2, 0, rng);
  const std::vector<cx> swapped{d.u[1], d.u[0]};
  auto basis = SectorBasis::make(3, 2);

  // the raw vectors differ under the swap
  const SectorVector direct = b_string(d.u, d.mp.h, d.mp, vacuum(3));
  const SectorVector reversed = b_string(swapped, d.mp.h, d.mp, vacuum(3));
  double raw_gap = 0.0;
  for (std::size_t i = 0; i < direct.amplitudes.size(); ++i)
    raw_gap = std::max(raw_gap, std::abs(direct.amplitudes[i] - reversed.amplitudes[i]));
  CHECK(raw_gap > 1e-8);

  for (std::size_t i = 0; i < basis->dim(); ++i) {
    const Configuration& c = basis->config(i);
    const cx w12 = wavefunction_W_brute(d.u, c, d.mp, d.mp.h);
    const cx w21 = wavefunction_W_brute(swapped, c, d.mp, d.mp.h);
    // deformed Vandermonde normalization restores symmetry
    const cx s12 = w12 / bracket(d.u[0] - d.u[1] + 2.0 * d.mp.p, d.mp.theta);
    const cx s21 = w21 / bracket(d.u[1] - d.u[0] + 2.0 * d.mp.p, d.mp.theta);
    CHECK(rel_diff(s12, s21) < 1e-13);
  }
}

TEST_CASE("dwbp golden value at a pinned parameter point") {
  const ModelParams mp = two_site_model();
  const std::vector<cx> u{cx(0.005), cx(0.04)};
  // value from this brute force at doubled theta truncation
  const cx golden(0.00063146610901993719, 0.0);
  CHECK(rel_diff(dwbp_brute(u, mp, mp.h), golden) < 1e-13);
  CHECK_THROWS_AS(dwbp_brute(std::vector<cx>{cx(0.01)}, mp, mp.h), std::invalid_argument);
}

TEST_CASE("scalar product basics") {
  const ModelParams mp = two_site_model();

  // N = 0: empty operator strings on the vacuum
  const std::vector<cx> none;
  CHECK(scalar_product_brute(none, none, mp, mp.h) == cx(1.0));

  // golden value at a pinned point
  const std::vector<cx> u{cx(0.005)}, w{cx(0.045)};
  const cx golden(0.00033531101719867264, 0.0);
  CHECK(rel_diff(scalar_product_brute(u, w, mp, mp.h), golden) < 1e-13);

  // decomposition over intermediate configurations (one-particle states)
  cx sum = 0.0;
  for (int x = 1; x <= 2; ++x) {
    const Configuration c(2, {x});
    sum += wavefunction_V_brute(w, c, mp, mp.h + 2.0 * mp.p) *
           wavefunction_W_brute(u, c, mp, mp.h);
  }
  CHECK(rel_diff(sum, golden) < 1e-13);
}

TEST_CASE("completeness decomposition of the scalar product") {
  SuiteConfig cfg = cfg_default();
  for (auto [m, n, seed] : {std::tuple{4, 2, 43}, {5, 2, 44}, {6, 3, 45}}) {
    Rng rng(seed);
    const SafeDraw d = sample_safe_params(cfg, m, n, n, n, rng);
    const cx direct = scalar_product_brute(d.u, d.w, d.mp, d.mp.h);
    cx sum = 0.0;
    auto basis = SectorBasis::make(m, n);
    const SectorVector bstate = b_string(d.u, d.mp.h, d.mp, vacuum(m));
    for (std::size_t i = 0; i < basis->dim(); ++i) {
      const Configuration& c = basis->config(i);
      sum += wavefunction_V_brute(d.w, c, d.mp, d.mp.h + 2.0 * double(n) * d.mp.p) *
             inner(c, bstate);
    }
    CHECK(rel_diff(direct, sum) < 1e-11);
  }
}

TEST_CASE("intermediate scalar products interpolate") {
  SuiteConfig cfg = cfg_default();
  Rng rng(47);
  const SafeDraw d = sample_safe_params(cfg, 4, 2, 2, 2, rng);

  // n = N is bit-identical to the scalar product (same code path)
  const cx at_n = intermediate_sp_brute(d.u, d.w, d.mp, d.mp.h);
  const cx scalar = scalar_product_brute(d.u, d.w, d.mp, d.mp.h);
  CHECK(at_n.real() == scalar.real());
  CHECK(at_n.imag() == scalar.imag());

  // n = 0 freezes the leading columns (frozen-column factorization)
  const std::vector<cx> none;
  const cx q0 = intermediate_sp_brute(d.u, none, d.mp, d.mp.h);
  cx frozen = 1.0;
  for (int j = 1; j <= 2; ++j)
    for (int k = 1; k <= 2; ++k)
      frozen *= bracket(d.u[j - 1] - d.mp.v(k) + d.mp.p + d.mp.q(k), d.mp.theta);
  const ModelParams tail = d.mp.tail_sites(3);
  const cx dw = dwbp_brute(d.u, tail, d.mp.h + 2.0 * d.mp.qbar[2]);
  CHECK(rel_diff(q0, frozen * dw) < 1e-11);

  CHECK_THROWS_AS(intermediate_sp_brute(d.w, d.u, d.mp.head(1), d.mp.h),
                  std::invalid_argument);
}

TEST_CASE("wavefunctions match the single-site weights") {
  const ModelParams mp = ModelParams::make(ThetaParams::for_nome(0.1), cx(0.02), cx(0.3),
                                           {Site{cx(0.01), cx(0.015)}});
  const cx u(0.04);
  const RWeights w = r_weights(u, mp.v(1), mp.p, mp.q(1), mp.h, mp.theta);
  const std::vector<cx> us{u};
  CHECK(rel_diff(wavefunction_W_brute(us, Configuration(1, {1}), mp, mp.h), w.c_plus) <
        1e-15);
  CHECK(rel_diff(wavefunction_V_brute(us, Configuration(1, {1}), mp, mp.h), w.c_minus) <
        1e-15);
}

TEST_CASE("single C matrix elements match the closed product") {
  SuiteConfig cfg = cfg_default();
  for (auto [m, n_b, seed] : {std::tuple{3, 1, 53}, {4, 2, 54}, {5, 3, 55}}) {
    Rng rng(seed);
    const SafeDraw d = sample_safe_params(cfg, m, n_b, 0, 1, rng);
    const cx w = d.w[0];
    for (int n_c = 1; n_c <= n_b; ++n_c) {
      const cx height = d.mp.h + 2.0 * double(n_b + n_c - 1) * d.mp.p;
      for (int k = 1; k <= m - n_b + n_c; ++k) {
        std::vector<int> pos{k};
        for (int x = m - n_b + n_c + 1; x <= m; ++x) pos.push_back(x);
        const cx brute = inner(mixed_dual(m, n_b, n_c),
                               apply_C(w, height, d.mp, configuration_state(Configuration(m, pos))));
        const cx closed = c_matrix_element_closed(k, w, n_c, n_b, d.mp, d.mp.h);
        CHECK(rel_diff(brute, closed) < 1e-12);
      }
    }
  }
}

TEST_CASE("single-site C matrix element reduces to the absorbing weight") {
  // M = N = n = k = 1: the closed product collapses to the one-site weight at
  // height h + 2p, which also pins the qbar_0 = 0 convention
  const ModelParams mp = ModelParams::make(ThetaParams::for_nome(0.1), cx(0.02), cx(0.3),
                                           {Site{cx(0.01), cx(0.015)}});
  const cx w(0.04);
  const RWeights weights = r_weights(w, mp.v(1), mp.p, mp.q(1), mp.h + 2.0 * mp.p, mp.theta);
  CHECK(rel_diff(c_matrix_element_closed(1, w, 1, 1, mp, mp.h), weights.c_minus) < 1e-15);
}

TEST_CASE("C matrix element carries the frozen overall factor") {
  SuiteConfig cfg = cfg_default();
  Rng rng(59);
  const SafeDraw d = sample_safe_params(cfg, 4, 2, 0, 0, rng);
  // choosing w so that [w - v_j + q_j - p] vanishes for a frozen column j
  const cx w = d.mp.v(4) - d.mp.q(4) + d.mp.p;
  for (int k = 1; k <= 3; ++k)
    CHECK(std::abs(c_matrix_element_closed(k, w, 1, 2, d.mp, d.mp.h)) < 1e-14);
  CHECK_THROWS_AS(c_matrix_element_closed(0, w, 1, 2, d.mp, d.mp.h), std::out_of_range);
  CHECK_THROWS_AS(c_matrix_element_closed(4, w, 1, 2, d.mp, d.mp.h), std::out_of_range);
}

TEST_CASE("single-entry string helpers respect the height ladder") {
  const ModelParams mp = two_site_model();
  const std::vector<cx> w{cx(0.045)};
  const SectorVector in = configuration_state(Configuration(2, {1}));
  const SectorVector via_string = c_string(w, mp.h + 0.17, mp, in);
  const SectorVector direct = apply_C(w[0], mp.h + 0.17, mp, in);
  for (std::size_t i = 0; i < via_string.amplitudes.size(); ++i)
    CHECK(via_string.amplitudes[i] == direct.amplitudes[i]);
}
