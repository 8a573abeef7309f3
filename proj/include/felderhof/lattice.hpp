#pragma once

// Model core: dynamical R-matrix weights, the Yang-Baxter residual, B/C
// operator application as an auxiliary-dimension-2 sweep with per-site
// height shifts, and brute-force evaluation of all partition functions.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "felderhof/statespace.hpp"
#include "felderhof/theta.hpp"

namespace felderhof {

struct Site {
  cx v;  // spectral inhomogeneity
  cx q;  // site parameter
};

/// Global auxiliary parameter p, height h, per-site (v_j, q_j) and the prefix
/// sums qbar_j = q_1 + ... + q_j with qbar_0 = 0.
struct ModelParams {
  ThetaParams theta;
  cx p{};
  cx h{};
  std::vector<Site> sites;
  std::vector<cx> qbar;  // size M+1, qbar[0] = 0

  static ModelParams make(ThetaParams tp, cx p, cx h, std::vector<Site> sites) {
    ModelParams mp;
    mp.theta = tp;
    mp.p = p;
    mp.h = h;
    mp.sites = std::move(sites);
    mp.qbar.assign(mp.sites.size() + 1, cx(0.0));
    for (std::size_t j = 0; j < mp.sites.size(); ++j)
      mp.qbar[j + 1] = mp.qbar[j] + mp.sites[j].q;
    return mp;
  }

  int site_count() const { return static_cast<int>(sites.size()); }
  cx v(int j) const { return sites.at(j - 1).v; }  // 1-indexed
  cx q(int j) const { return sites.at(j - 1).q; }

  /// Model restricted to the first m sites.
  ModelParams head(int m) const {
    if (m < 0 || m > site_count()) throw std::invalid_argument("ModelParams::head");
    return make(theta, p, h, std::vector<Site>(sites.begin(), sites.begin() + m));
  }

  /// Model on sites first..M, with prefix sums rebased to zero.
  ModelParams tail_sites(int first) const {
    if (first < 1 || first > site_count() + 1)
      throw std::invalid_argument("ModelParams::tail_sites");
    return make(theta, p, h, std::vector<Site>(sites.begin() + (first - 1), sites.end()));
  }

  ModelParams with_v_at(int j, cx value) const {
    ModelParams mp = *this;
    mp.sites.at(j - 1).v = value;
    return mp;
  }
};

/// The six nonzero entries of the dynamical R-matrix; every
/// occupation-non-conserving entry vanishes (ice rule).
struct RWeights {
  cx a_plus;   // <00|R|00>
  cx b_plus;   // <01|R|01>
  cx c_plus;   // <01|R|10>
  cx c_minus;  // <10|R|01>
  cx b_minus;  // <10|R|10>
  cx a_minus;  // <11|R|11>
};

/// The six weights at spectral parameters (u, v), hopping parameters (p, q)
/// and height h. branch_warning (optional) is set when any square-rooted
/// bracket lands near the principal cut, i.e. outside the safe domain.
inline RWeights r_weights(cx u, cx v, cx p, cx q, cx h, const ThetaParams& tp,
                          bool* branch_warning = nullptr) {
  const cx bh2p = bracket(h + 2.0 * p, tp);
  const cx bh2q = bracket(h + 2.0 * q, tp);
  if (std::abs(bh2p) < 1e-13 || std::abs(bh2q) < 1e-13)
    throw singular_height_error("r_weights: [h+2p] or [h+2q] vanishes");
  bool warn = false;
  std::array<bool, 4> cut{};
  const cx den = std::sqrt(bh2p) * std::sqrt(bh2q);
  const cx heights =
      bracket_sqrt(h, tp, &cut[0]) * bracket_sqrt(h + 2.0 * p + 2.0 * q, tp, &cut[1]);
  const cx hop = bracket_sqrt(2.0 * p, tp, &cut[2]) * bracket_sqrt(2.0 * q, tp, &cut[3]);
  for (bool c : cut) warn = warn || c;
  if (branch_warning) *branch_warning = warn;
  RWeights w;
  w.a_plus = bracket(u - v + p + q, tp);
  w.b_plus = heights * bracket(u - v + q - p, tp) / den;
  w.c_plus = hop * bracket(-u + v + q + p + h, tp) / den;
  w.c_minus = hop * bracket(u - v + q + p + h, tp) / den;
  w.b_minus = heights * bracket(u - v - q + p, tp) / den;
  w.a_minus = bracket(-u + v + p + q, tp);
  return w;
}

/// Full 4x4 R-matrix, row = outgoing pair (2*gamma + delta), column =
/// incoming pair (2*alpha + beta).
inline std::array<cx, 16> r_matrix4(cx u, cx v, cx p, cx q, cx h, const ThetaParams& tp) {
  const RWeights w = r_weights(u, v, p, q, h, tp);
  std::array<cx, 16> m{};
  m[0 * 4 + 0] = w.a_plus;
  m[1 * 4 + 1] = w.b_plus;
  m[1 * 4 + 2] = w.c_plus;
  m[2 * 4 + 1] = w.c_minus;
  m[2 * 4 + 2] = w.b_minus;
  m[3 * 4 + 3] = w.a_minus;
  return m;
}

namespace detail {

// Lift a two-space R-matrix into the 8x8 operator on spaces (a,b,c); sh1/sh2
// are the bit positions of the two spaces inside the index 4a + 2b + c.
inline std::array<cx, 64> embed_pair(const std::array<cx, 16>& r4, int sh1, int sh2) {
  std::array<cx, 64> m{};
  const int rest = 7 & ~((1 << sh1) | (1 << sh2));
  for (int o = 0; o < 8; ++o)
    for (int i = 0; i < 8; ++i) {
      if ((o & rest) != (i & rest)) continue;
      const int o1 = (o >> sh1) & 1, o2 = (o >> sh2) & 1;
      const int i1 = (i >> sh1) & 1, i2 = (i >> sh2) & 1;
      m[o * 8 + i] = r4[(2 * o1 + o2) * 4 + (2 * i1 + i2)];
    }
  return m;
}

inline std::array<cx, 64> mul8(const std::array<cx, 64>& a, const std::array<cx, 64>& b) {
  std::array<cx, 64> m{};
  for (int i = 0; i < 8; ++i)
    for (int k = 0; k < 8; ++k) {
      const cx aik = a[i * 8 + k];
      if (aik == cx(0.0)) continue;
      for (int j = 0; j < 8; ++j) m[i * 8 + j] += aik * b[k * 8 + j];
    }
  return m;
}

}  // namespace detail

/// Max normalized entrywise difference of the two orderings of the dynamical
/// Yang-Baxter relation on W_a x W_b x W_c.
inline double ybe_residual(cx u, cx v, cx w, cx p, cx q, cx r, cx h, const ThetaParams& tp) {
  using detail::embed_pair;
  using detail::mul8;
  const auto lhs = mul8(mul8(embed_pair(r_matrix4(u, v, p, q, h, tp), 2, 1),
                             embed_pair(r_matrix4(u, w, p, r, h + 2.0 * q, tp), 2, 0)),
                        embed_pair(r_matrix4(v, w, q, r, h, tp), 1, 0));
  const auto rhs = mul8(mul8(embed_pair(r_matrix4(v, w, q, r, h + 2.0 * p, tp), 1, 0),
                             embed_pair(r_matrix4(u, w, p, r, h, tp), 2, 0)),
                        embed_pair(r_matrix4(u, v, p, q, h + 2.0 * r, tp), 2, 1));
  double diff = 0.0, scale = 0.0;
  for (int i = 0; i < 64; ++i) {
    diff = std::max(diff, std::abs(lhs[i] - rhs[i]));
    scale = std::max({scale, std::abs(lhs[i]), std::abs(rhs[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

namespace detail {

// One monodromy matrix element <aux_left| T(u|...|h) |aux_right> applied to a
// sector vector, swept site by site. The running auxiliary index together
// with a hybrid occupation mask (bits below the sweep front already output,
// bits above still input) fully describes an intermediate state; the ice rule
// fixes the admissible transitions.
inline SectorVector monodromy_element(cx u, cx h, const ModelParams& mp,
                                      const SectorVector& vec, int aux_left,
                                      int aux_right) {
  const int m_sites = mp.site_count();
  if (vec.m_sites() != m_sites)
    throw std::invalid_argument("monodromy: site count mismatch");
  const int k_out = vec.sector() + aux_right - aux_left;
  if (k_out < 0 || k_out > m_sites)
    throw std::invalid_argument(aux_right > aux_left
                                    ? "apply_B: sector overflow (k = M)"
                                    : "apply_C: sector underflow (k = 0)");

  // key = (mask << 1) | running auxiliary index
  std::unordered_map<std::uint64_t, cx> cur, next;
  for (std::size_t i = 0; i < vec.basis->dim(); ++i) {
    const cx amp = vec.amplitudes[i];
    if (amp == cx(0.0)) continue;
    cur.emplace((static_cast<std::uint64_t>(vec.basis->config(i).mask()) << 1) |
                    static_cast<unsigned>(aux_left),
                amp);
  }

  for (int j = 1; j <= m_sites; ++j) {
    const RWeights w = r_weights(u, mp.v(j), mp.p, mp.q(j), h + 2.0 * mp.qbar[j - 1], mp.theta);
    next.clear();
    next.reserve(2 * cur.size());
    const std::uint64_t site_bit = 1ull << (j - 1);
    for (const auto& [key, amp] : cur) {
      const int gamma = static_cast<int>(key & 1);
      const std::uint64_t mask = key >> 1;
      const int beta = static_cast<int>((mask >> (j - 1)) & 1);
      for (int alpha = 0; alpha < 2; ++alpha) {
        const int delta = alpha + beta - gamma;
        if (delta < 0 || delta > 1) continue;
        cx coef;
        if (gamma == 0 && delta == 0) coef = w.a_plus;              // alpha=0, beta=0
        else if (gamma == 0 && alpha == 0) coef = w.b_plus;         // delta=1, beta=1
        else if (gamma == 0) coef = w.c_plus;                       // alpha=1, beta=0
        else if (delta == 1) coef = w.a_minus;                      // alpha=1, beta=1
        else if (alpha == 1) coef = w.b_minus;                      // beta=0
        else coef = w.c_minus;                                      // alpha=0, beta=1
        const std::uint64_t new_mask = (mask & ~site_bit) | (static_cast<std::uint64_t>(delta) << (j - 1));
        next[(new_mask << 1) | static_cast<unsigned>(alpha)] += amp * coef;
      }
    }
    cur.swap(next);
  }

  auto basis = SectorBasis::make(m_sites, k_out);
  std::vector<cx> amps(basis->dim(), cx(0.0));
  for (const auto& [key, amp] : cur) {
    if (static_cast<int>(key & 1) != aux_right) continue;
    amps[basis->index_of_mask(static_cast<std::uint32_t>(key >> 1))] += amp;
  }
  return SectorVector(std::move(basis), std::move(amps));
}

}  // namespace detail

/// B(u|...|h) = <0|_a T_a |1>_a : raises the particle number by one. Site j
/// acts at local height h + 2 qbar_{j-1}.
inline SectorVector apply_B(cx u, cx h, const ModelParams& mp, const SectorVector& vec) {
  return detail::monodromy_element(u, h, mp, vec, 0, 1);
}

/// C(u|...|h) = <1|_a T_a |0>_a : lowers the particle number by one.
inline SectorVector apply_C(cx u, cx h, const ModelParams& mp, const SectorVector& vec) {
  return detail::monodromy_element(u, h, mp, vec, 1, 0);
}

/// B(u_N|...|h0 + 2(N-1)p) ... B(u_1|...|h0), u_1 innermost.
inline SectorVector b_string(std::span<const cx> u_list, cx h0, const ModelParams& mp,
                             SectorVector vec) {
  for (std::size_t j = 0; j < u_list.size(); ++j)
    vec = apply_B(u_list[j], h0 + 2.0 * static_cast<double>(j) * mp.p, mp, vec);
  return vec;
}

/// C(w_n|...|h_start + 2(n-1)p) ... C(w_1|...|h_start), w_1 innermost.
inline SectorVector c_string(std::span<const cx> w_list, cx h_start, const ModelParams& mp,
                             SectorVector vec) {
  for (std::size_t j = 0; j < w_list.size(); ++j)
    vec = apply_C(w_list[j], h_start + 2.0 * static_cast<double>(j) * mp.p, mp, vec);
  return vec;
}

/// Domain wall boundary partition function: the fully packed amplitude of N
/// B-operators on the vacuum (requires M = N).
inline cx dwbp_brute(std::span<const cx> u_list, const ModelParams& mp, cx h) {
  const int n = static_cast<int>(u_list.size());
  if (mp.site_count() != n)
    throw std::invalid_argument("dwbp_brute: requires M = N");
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i + 1;
  return inner(Configuration(n, all), b_string(u_list, h, mp, vacuum(n)));
}

/// Intermediate scalar product <0^{M-N+n} 1^{N-n}| C(w_n)...C(w_1) B(u_N)...B(u_1) |Omega>,
/// with the C-ladder starting at height h + 2Np.
inline cx intermediate_sp_brute(std::span<const cx> u_list, std::span<const cx> w_list,
                                const ModelParams& mp, cx h) {
  const int m_sites = mp.site_count();
  const int n_b = static_cast<int>(u_list.size());
  const int n_c = static_cast<int>(w_list.size());
  if (n_c > n_b || n_b > m_sites)
    throw std::invalid_argument("intermediate_sp_brute: need 0 <= n <= N <= M");
  SectorVector state = b_string(u_list, h, mp, vacuum(m_sites));
  state = c_string(w_list, h + 2.0 * static_cast<double>(n_b) * mp.p, mp, std::move(state));
  return inner(mixed_dual(m_sites, n_b, n_c), state);
}

/// Scalar product <Omega| C(w_N)...C(w_1) B(u_N)...B(u_1) |Omega>.
inline cx scalar_product_brute(std::span<const cx> u_list, std::span<const cx> w_list,
                               const ModelParams& mp, cx h) {
  if (u_list.size() != w_list.size())
    throw std::invalid_argument("scalar_product_brute: need |u| = |w|");
  return intermediate_sp_brute(u_list, w_list, mp, h);
}

/// W wavefunction: <x_1...x_N| B(u_N)...B(u_1) |Omega>.
inline cx wavefunction_W_brute(std::span<const cx> u_list, const Configuration& c,
                               const ModelParams& mp, cx h) {
  if (c.particle_count() != static_cast<int>(u_list.size()) || c.m_sites != mp.site_count())
    throw std::invalid_argument("wavefunction_W_brute: configuration mismatch");
  return inner(c, b_string(u_list, h, mp, vacuum(mp.site_count())));
}

/// V wavefunction: <Omega| C(u_N)...C(u_1) |x_1...x_N>, ladder starting at h.
inline cx wavefunction_V_brute(std::span<const cx> w_list, const Configuration& c,
                               const ModelParams& mp, cx h) {
  if (c.particle_count() != static_cast<int>(w_list.size()) || c.m_sites != mp.site_count())
    throw std::invalid_argument("wavefunction_V_brute: configuration mismatch");
  return inner(Configuration(mp.site_count(), {}),
               c_string(w_list, h, mp, configuration_state(c)));
}

/// Closed form of the single C matrix element
/// <0^{M-N+n} 1^{N-n}| C(w|...|h + 2(N+n-1)p) |0^{k-1} 1 0^{M-N+n-k} 1^{N-n}>.
inline cx c_matrix_element_closed(int k, cx w, int n_c, int n_b, const ModelParams& mp, cx h) {
  const int m_sites = mp.site_count();
  if (n_c < 1 || n_c > n_b || n_b > m_sites)
    throw std::invalid_argument("c_matrix_element_closed: need 1 <= n <= N <= M");
  if (k < 1 || k > m_sites - n_b + n_c)
    throw std::out_of_range("c_matrix_element_closed: k out of range");
  const ThetaParams& tp = mp.theta;
  const cx base = h + 2.0 * static_cast<double>(n_b + n_c - 1) * mp.p;
  auto bs = [&](cx t) { return bracket_sqrt(t, tp); };
  auto br = [&](cx t) { return bracket(t, tp); };
  cx acc = 1.0;
  for (int j = 1; j < k; ++j)
    acc *= bs(base + 2.0 * mp.qbar[j - 1]) * bs(base + 2.0 * mp.p + 2.0 * mp.qbar[j]) *
           br(w - mp.v(j) - mp.q(j) + mp.p) /
           (bs(base + 2.0 * mp.p + 2.0 * mp.qbar[j - 1]) * bs(base + 2.0 * mp.qbar[j]));
  acc *= bs(2.0 * mp.p) * bs(2.0 * mp.q(k)) *
         br(w - mp.v(k) + mp.q(k) + mp.p + base + 2.0 * mp.qbar[k - 1]) /
         (bs(base + 2.0 * mp.p + 2.0 * mp.qbar[k - 1]) * bs(base + 2.0 * mp.qbar[k]));
  for (int j = k + 1; j <= m_sites - n_b + n_c; ++j) acc *= br(w - mp.v(j) + mp.p + mp.q(j));
  for (int j = m_sites - n_b + n_c + 1; j <= m_sites; ++j)
    acc *= bs(base + 2.0 * mp.qbar[j - 1]) * bs(base + 2.0 * mp.p + 2.0 * mp.qbar[j]) *
           br(w - mp.v(j) + mp.q(j) - mp.p) /
           (bs(base + 2.0 * mp.p + 2.0 * mp.qbar[j - 1]) * bs(base + 2.0 * mp.qbar[j]));
  return acc;
}

}  // namespace felderhof
