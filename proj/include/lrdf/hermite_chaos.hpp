#pragma once

// Probabilists' Hermite polynomials and chaos coefficients J_n = E[G(Z) H_n(Z)].
//
// Coefficients are unnormalized: G = sum_n J_n/n! H_n and E[G^2] = sum_n J_n^2/n!.
// Internally everything runs through h_n = H_n/sqrt(n!), whose three-term
// recurrence stays O(1) where H_n itself would overflow.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"

namespace lrdf {

/// H_n(z) by H_{n+1} = z H_n - n H_{n-1}.
inline double hermite(int n, double z) {
  require(n >= 0, ErrorKind::domain, "hermite: n must be >= 0");
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = z;
  for (int k = 1; k < n; ++k) {
    const double h2 = z * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// h_0(z) ... h_N(z) with h_n = H_n / sqrt(n!).
inline void hermite_normalized_all(int N, double z, std::vector<double>& out) {
  out.assign(N + 1, 0.0);
  out[0] = 1.0;
  if (N >= 1) out[1] = z;
  for (int k = 1; k < N; ++k) out[k + 1] = (z * out[k] - std::sqrt(double(k)) * out[k - 1]) / std::sqrt(k + 1.0);
}

enum class CoeffSource { closed_form_indicator, quadrature };

struct HermiteCoeffs {
  std::vector<double> coeffs;  // J_0 ... J_N
  int rank = 1;
  CoeffSource source = CoeffSource::quadrature;
  int truncation = 0;
  double threshold = 0.0;  // u for indicator coefficients
  // Quadrature bookkeeping: Gauss-Hermite order used, whether order doubling
  // agreed to 1e-8, and whether the adaptive fallback (if used) converged.
  int quad_order = 0;
  bool doubling_stable = true;
  bool adaptive_fallback = false;
  bool converged = true;

  double operator[](int n) const { return coeffs.at(n); }
  /// Partial Parseval sum sum_{n=from}^{to} J_n^2/n!.
  double parseval(int from, int to) const {
    double s = 0.0;
    for (int n = from; n <= std::min(to, truncation); ++n) s += coeffs[n] * coeffs[n] / factorial(n);
    return s;
  }
};

/// Smallest n >= 1 with |J_n|/sqrt(n!) > tol * max_{k>=0} |J_k|/sqrt(k!).
inline int hermite_rank(const HermiteCoeffs& c, double tol = 1e-10) {
  require(c.coeffs.size() >= 2, ErrorKind::domain, "hermite_rank: need at least J_0, J_1");
  std::vector<double> mag(c.coeffs.size(), 0.0);
  double peak = std::abs(c.coeffs[0]);
  for (std::size_t n = 1; n < c.coeffs.size(); ++n) {
    mag[n] = std::abs(c.coeffs[n]) / std::sqrt(factorial(int(n)));
    peak = std::max(peak, mag[n]);
  }
  for (std::size_t n = 1; n < c.coeffs.size(); ++n)
    if (peak > 0 && mag[n] > tol * peak) return int(n);
  fail(ErrorKind::domain, "hermite_rank: all coefficients J_1..J_N are below tolerance (G is a.s. constant)");
}

/// Closed form for G = 1{z >= u}: J_0 = 1 - Phi(u), J_q = phi(u) H_{q-1}(u).
inline HermiteCoeffs indicator_coeffs(double u, int N = 30) {
  require(N >= 1, ErrorKind::domain, "indicator_coeffs: N must be >= 1");
  HermiteCoeffs c;
  c.source = CoeffSource::closed_form_indicator;
  c.truncation = N;
  c.threshold = u;
  c.coeffs.assign(N + 1, 0.0);
  c.coeffs[0] = normal_sf(u);
  if (std::isfinite(u)) {
    // phi(u) H_{q-1}(u) = sqrt((q-1)!) * phi(u) h_{q-1}(u); phi(u) h_k(u) stays representable.
    std::vector<double> h;
    hermite_normalized_all(N - 1, u, h);
    const double ph = normal_pdf(u);
    for (int q = 1; q <= N; ++q) c.coeffs[q] = ph * h[q - 1] * std::sqrt(factorial(q - 1));
  }
  c.rank = 1;  // J_1 = phi(u) > 0 for finite u
  return c;
}

namespace detail {

inline std::vector<double> gh_coeffs(const std::function<double(double)>& G, int N, int order) {
  const auto rule = gauss_hermite_prob(order);
  std::vector<double> acc(N + 1, 0.0), h;
  for (int i = 0; i < order; ++i) {
    const double g = G(rule.nodes[i]) * rule.weights[i];
    if (g == 0.0) continue;
    hermite_normalized_all(N, rule.nodes[i], h);
    for (int n = 0; n <= N; ++n) acc[n] += g * h[n];
  }
  for (int n = 0; n <= N; ++n) acc[n] *= std::sqrt(factorial(n));
  return acc;
}

}  // namespace detail

/// J_n = int G H_n phi by Gauss-Hermite of order quad_order, checked against
/// order 2*quad_order. If any coefficient moves by more than 1e-8 (typical for
/// discontinuous G) the coefficients are recomputed by adaptive Gauss-Kronrod
/// on [-40, 40] and doubling_stable is set to false.
inline HermiteCoeffs chaos_coeffs(const std::function<double(double)>& G, int N = 30, int quad_order = 128,
                                  double rank_tol = 1e-10) {
  require(N >= 1, ErrorKind::domain, "chaos_coeffs: N must be >= 1");
  require(quad_order >= 2, ErrorKind::domain, "chaos_coeffs: quad_order must be >= 2");
  HermiteCoeffs c;
  c.truncation = N;
  c.quad_order = quad_order;
  const auto lo = detail::gh_coeffs(G, N, quad_order);
  const auto hi = detail::gh_coeffs(G, N, 2 * quad_order);
  double moved = 0.0;
  for (int n = 0; n <= N; ++n) moved = std::max(moved, std::abs(hi[n] - lo[n]));
  c.coeffs = hi;
  c.doubling_stable = moved <= 1e-8;
  if (!c.doubling_stable) {
    c.adaptive_fallback = true;
    const QuadOptions opt{1e-14, 1e-13, 5000};
    for (int n = 0; n <= N; ++n) {
      const double scale = std::sqrt(factorial(n));
      std::vector<double> h;
      auto f = [&](double z) {
        hermite_normalized_all(n, z, h);
        return G(z) * h[n] * normal_pdf(z);
      };
      const auto r = integrate(f, -40.0, 40.0, opt);
      c.coeffs[n] = scale * r.value;
      c.converged = c.converged && r.converged;
    }
  }
  c.rank = hermite_rank(c, rank_tol);
  return c;
}

/// `n,J_n` CSV.
inline void write_coeffs_csv(const HermiteCoeffs& c, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "write_coeffs_csv: cannot open " + path);
  os.precision(17);
  os << "n,J_n\n";
  for (std::size_t n = 0; n < c.coeffs.size(); ++n) os << n << ',' << c.coeffs[n] << '\n';
  require(bool(os), ErrorKind::io, "write_coeffs_csv: write failed for " + path);
}

}  // namespace lrdf
