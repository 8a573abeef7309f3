#pragma once

// Theta function layer: the odd theta function [u] as a truncated infinite
// product, principal-branch square roots of brackets, and quasi-periodicity
// residuals for elliptic-polynomial membership checks.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace felderhof {

using cx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

struct singular_height_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Relative difference |a-b| / max(|a|,|b|); zero when both vanish.
inline double rel_diff(cx a, cx b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Elliptic nome with the truncation policy for the theta product.
/// tau = -i log(nome)/pi is the second quasi-period of the bracket.
struct ThetaParams {
  double nome = 0.1;
  cx tau{0.0, 0.73299};
  int n_max = 10;
  double trunc_tol = 1e-18;

  /// Smallest truncation order with nome^(2 n_max) < trunc_tol, capped at 64.
  /// If the cap bites (nome close to 1) the achieved bound is recorded so the
  /// parameters still certify their own truncation error.
  static ThetaParams for_nome(double nome, double trunc_tol = 1e-18) {
    if (!(nome > 0.0 && nome < 1.0))
      throw std::invalid_argument("ThetaParams: nome must lie in (0,1)");
    if (!(trunc_tol > 0.0))
      throw std::invalid_argument("ThetaParams: trunc_tol must be positive");
    ThetaParams tp;
    tp.nome = nome;
    tp.tau = cx(0.0, -std::log(nome) / kPi);
    int n = 1;
    while (n < 64 && std::pow(nome, 2.0 * n) >= trunc_tol) ++n;
    tp.n_max = n;
    tp.trunc_tol = std::max(trunc_tol, 2.0 * std::pow(nome, 2.0 * n));
    return tp;
  }

  /// Same nome at doubled truncation order; used to separate truncation
  /// error from formula-level disagreement.
  ThetaParams doubled() const {
    ThetaParams tp = *this;
    tp.n_max = std::min(2 * n_max, 128);
    tp.trunc_tol = std::max(trunc_tol * trunc_tol, 1e-30);
    return tp;
  }
};

/// H(u) = 2 sinh(u) prod_{n>=1} (1 - 2 q^{2n} cosh(2u) + q^{4n}) (1 - q^{2n}).
inline cx theta_H(cx u, const ThetaParams& tp) {
  if (!std::isfinite(u.real()) || !std::isfinite(u.imag()))
    throw std::domain_error("theta_H: non-finite argument");
  const cx c2u = std::cosh(2.0 * u);
  const double q2 = tp.nome * tp.nome;
  cx prod = 1.0;
  double q2n = 1.0;
  for (int n = 1; n <= tp.n_max; ++n) {
    q2n *= q2;
    prod *= (1.0 - 2.0 * q2n * c2u + q2n * q2n) * (1.0 - q2n);
  }
  return 2.0 * std::sinh(u) * prod;
}

/// [t] = H(pi i t). Odd in t, with [t+1] = -[t] and
/// [t+tau] = -q^{-1} e^{-2 pi i t} [t].
inline cx bracket(cx t, const ThetaParams& tp) {
  return theta_H(cx(0.0, kPi) * t, tp);
}

/// Principal square root of [t]. For real t in (0,1) the bracket is i*r with
/// r > 0, so the root is e^{i pi/4} sqrt(r); such roots compose
/// multiplicatively, which is what every half-power identity below relies on.
/// near_cut (optional) flags values close to the negative real axis, where
/// the principal branch jumps.
inline cx bracket_sqrt(cx t, const ThetaParams& tp, bool* near_cut = nullptr) {
  const cx b = bracket(t, tp);
  if (near_cut) {
    const double m = std::abs(b);
    *near_cut = m > 0.0 && b.real() < 0.0 && std::abs(b.imag()) < 1e-6 * m;
  }
  return std::sqrt(b);
}

/// Degree and characters of an elliptic polynomial space: holomorphic f with
///   f(y + 1)   = chi(1) f(y),
///   f(y + tau) = chi(tau) e^{-2 pi i N y - pi i N tau} f(y).
struct EllipticPolySpec {
  int degree;
  cx chi_one;
  cx chi_tau;
  cx alpha;  // chi(tau) = (-1)^N e^alpha when that form applies

  EllipticPolySpec(int degree_, cx chi_one_, cx chi_tau_, cx alpha_ = 0.0)
      : degree(degree_), chi_one(chi_one_), chi_tau(chi_tau_), alpha(alpha_) {
    if (degree < 1)
      throw std::invalid_argument("EllipticPolySpec: degree must be >= 1");
    if (chi_one == cx(0.0) || chi_tau == cx(0.0))
      throw std::invalid_argument("EllipticPolySpec: characters must be nonzero");
  }
};

/// Max relative residual of the two quasi-periodicity relations over the
/// sample points. A sample sits near a zero of f when |f(y)| is negligible
/// against |f| probed a short distance away (the shifted points y+1, y+tau
/// are useless as a reference since they are zeros exactly when y is); such
/// samples are skipped (counted in *skipped), and if nothing is left the
/// input is degenerate.
inline double quasi_period_residual(const std::function<cx(cx)>& f,
                                    const EllipticPolySpec& spec,
                                    const ThetaParams& tp,
                                    std::span<const cx> samples,
                                    int* skipped = nullptr) {
  if (samples.empty())
    throw std::invalid_argument("quasi_period_residual: no samples");
  const double nd = static_cast<double>(spec.degree);
  const double delta = 1e-3;
  double worst = 0.0;
  int used = 0, skip = 0;
  for (const cx y : samples) {
    const cx fy = f(y);
    const double here = std::abs(fy);
    const double nearby = std::max({std::abs(f(y + delta)), std::abs(f(y - delta)),
                                    std::abs(f(y + cx(0.0, delta)))});
    if (here < 1e-6 * nearby || (here == 0.0 && nearby == 0.0)) {
      ++skip;
      continue;
    }
    ++used;
    const cx phase = std::exp(cx(0.0, -2.0 * kPi * nd) * y + cx(0.0, -kPi * nd) * tp.tau);
    worst = std::max(worst, std::abs(f(y + 1.0) - spec.chi_one * fy) / here);
    worst = std::max(worst, std::abs(f(y + tp.tau) - spec.chi_tau * phase * fy) / here);
  }
  if (skipped) *skipped = skip;
  if (used == 0)
    throw std::domain_error("quasi_period_residual: every sample sits at a zero of f");
  return worst;
}

}  // namespace felderhof
