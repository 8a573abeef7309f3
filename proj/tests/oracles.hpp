#pragma once

// Test-only oracles, independent of the library's evaluation paths.
//
//  * bracket_series: the bracket through the Fourier series of the odd theta
//    function (triple-product expansion) instead of the infinite product.
//  * DenseMonodromy: B/C operators assembled as full 2^M x 2^M matrices from
//    per-site 4x4 blocks via an auxiliary 2x2 operator-matrix product; no
//    sector bookkeeping, no sweep.

#include <array>
#include <vector>

#include "felderhof/lattice.hpp"

namespace oracles {

using felderhof::cx;

/// [t] = i/q^{1/4} * theta_1(pi t, q) with
/// theta_1(z,q) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1)z).
inline cx bracket_series(cx t, double nome, int terms = 64) {
  cx sum = 0.0;
  double sign = 1.0;
  for (int n = 0; n < terms; ++n) {
    const double expo = (n + 0.5) * (n + 0.5);
    sum += sign * std::pow(nome, expo) * std::sin((2.0 * n + 1.0) * felderhof::kPi * t);
    sign = -sign;
  }
  return cx(0.0, 2.0) / std::pow(nome, 0.25) * sum;
}

using Mat = std::vector<cx>;  // row-major dim x dim

inline Mat mat_mul(const Mat& a, const Mat& b, int dim) {
  Mat m(static_cast<std::size_t>(dim) * dim, cx(0.0));
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const cx aik = a[static_cast<std::size_t>(i) * dim + k];
      if (aik == cx(0.0)) continue;
      for (int j = 0; j < dim; ++j)
        m[static_cast<std::size_t>(i) * dim + j] += aik * b[static_cast<std::size_t>(k) * dim + j];
    }
  return m;
}

inline Mat mat_add(const Mat& a, const Mat& b) {
  Mat m = a;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] += b[i];
  return m;
}

/// <m_out| (L_j)_{gamma alpha} |m_in> over the full 2^M space.
inline Mat site_element(int site, int gamma, int alpha, const felderhof::RWeights& w, int m_sites) {
  const int dim = 1 << m_sites;
  Mat m(static_cast<std::size_t>(dim) * dim, cx(0.0));
  const int bit = 1 << (site - 1);
  for (int in = 0; in < dim; ++in)
    for (int out = 0; out < dim; ++out) {
      if ((in & ~bit) != (out & ~bit)) continue;
      const int beta = (in & bit) ? 1 : 0;
      const int delta = (out & bit) ? 1 : 0;
      if (gamma + delta != alpha + beta) continue;
      cx val;
      if (gamma == 0 && delta == 0) val = w.a_plus;
      else if (gamma == 0 && delta == 1 && alpha == 0) val = w.b_plus;
      else if (gamma == 0 && delta == 1) val = w.c_plus;
      else if (gamma == 1 && delta == 0 && alpha == 0) val = w.c_minus;
      else if (gamma == 1 && delta == 0) val = w.b_minus;
      else val = w.a_minus;
      m[static_cast<std::size_t>(out) * dim + in] = val;
    }
  return m;
}

struct DenseMonodromy {
  int m_sites;
  Mat b_full, c_full;

  DenseMonodromy(cx u, cx h, const felderhof::ModelParams& mp) : m_sites(mp.site_count()) {
    const int dim = 1 << m_sites;
    std::array<Mat, 4> t;  // t[2*gamma + alpha]
    {
      const auto w = felderhof::r_weights(u, mp.v(1), mp.p, mp.q(1), h, mp.theta);
      for (int g = 0; g < 2; ++g)
        for (int a = 0; a < 2; ++a) t[2 * g + a] = site_element(1, g, a, w, m_sites);
    }
    for (int j = 2; j <= m_sites; ++j) {
      const auto w =
          felderhof::r_weights(u, mp.v(j), mp.p, mp.q(j), h + 2.0 * mp.qbar[j - 1], mp.theta);
      std::array<Mat, 4> l;
      for (int g = 0; g < 2; ++g)
        for (int a = 0; a < 2; ++a) l[2 * g + a] = site_element(j, g, a, w, m_sites);
      std::array<Mat, 4> next;
      for (int g = 0; g < 2; ++g)
        for (int a = 0; a < 2; ++a)
          next[2 * g + a] = mat_add(mat_mul(t[2 * g + 0], l[0 + a], dim),
                                    mat_mul(t[2 * g + 1], l[2 + a], dim));
      t = next;
    }
    b_full = t[0 * 2 + 1];
    c_full = t[1 * 2 + 0];
  }

  std::vector<cx> dense(const felderhof::SectorVector& v) const {
    std::vector<cx> out(1u << m_sites, cx(0.0));
    for (std::size_t i = 0; i < v.basis->dim(); ++i)
      out[v.basis->config(i).mask()] = v.amplitudes[i];
    return out;
  }

  std::vector<cx> apply(const Mat& op, const std::vector<cx>& x) const {
    const int dim = 1 << m_sites;
    std::vector<cx> y(dim, cx(0.0));
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) y[r] += op[static_cast<std::size_t>(r) * dim + c] * x[c];
    return y;
  }
};

}  // namespace oracles
