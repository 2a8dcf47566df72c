#pragma once

// Global adaptive Gauss-Kronrod quadrature and fixed Gaussian rules.
//
// The per-interval kernel is the 21-point Kronrod extension of the 10-point
// Gauss rule (nodes and weights taken from Boost.Math). Intervals live in a
// max-heap keyed by their error estimate; the worst one is bisected until the
// total error meets max(abs_tol, rel_tol*|I|) or the interval cap is reached.
// Hitting the cap never throws: the result carries converged=false.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "core.hpp"

namespace lrdf {

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_intervals = 2000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  int intervals = 0;
};

namespace detail {

struct GkSegment {
  double a, b, value, error;
  bool operator<(const GkSegment& o) const { return error < o.error; }
};

template <class F>
GkSegment gk21(F& f, double a, double b) {
  using K = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = K::abscissa();
  const auto& wk = K::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double f0 = f(c);
  double kron = f0 * wk[0], gauss = 0.0;
  // Gauss order 10 is even: odd Kronrod indices are shared with the Gauss rule.
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double dx = h * xk[i];
    const double s = f(c + dx) + f(c - dx);
    kron += s * wk[i];
    if (i & 1) gauss += s * wg[i / 2];
  }
  kron *= h;
  gauss *= h;
  double err = std::abs(kron - gauss);
  err = std::max(err, 50 * std::numeric_limits<double>::epsilon() * std::abs(kron));
  if (!std::isfinite(kron)) err = std::numeric_limits<double>::infinity();
  return {a, b, kron, err};
}

}  // namespace detail

/// Adaptive integral of f over [a,b], optionally seeded with interior break points.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {},
                     const std::vector<double>& breaks = {}) {
  QuadResult r;
  if (a == b) return r;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> knots{a};
  for (double x : breaks)
    if (x > a && x < b) knots.push_back(x);
  knots.push_back(b);
  std::sort(knots.begin(), knots.end());

  std::priority_queue<detail::GkSegment> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i + 1] <= knots[i]) continue;
    auto s = detail::gk21(f, knots[i], knots[i + 1]);
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  int n = static_cast<int>(heap.size());
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (err > target() && n < opt.max_intervals) {
    auto s = heap.top();
    const double m = 0.5 * (s.a + s.b);
    if (!(m > s.a && m < s.b)) break;  // interval below floating resolution
    heap.pop();
    auto l = detail::gk21(f, s.a, m);
    auto rr = detail::gk21(f, m, s.b);
    total += l.value + rr.value - s.value;
    err += l.error + rr.error - s.error;
    heap.push(l);
    heap.push(rr);
    ++n;
  }
  // Recompute sums to shed accumulated round-off from the running updates.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  r.value = sign * total;
  r.error = err;
  r.intervals = n;
  r.converged = std::isfinite(total) && err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
  return r;
}

/// Integral over [a, +inf) through x = a + t/(1-t).
template <class F>
QuadResult integrate_to_inf(F&& f, double a, const QuadOptions& opt = {}) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double u = 1.0 - t;
    const double v = f(a + t / u) / (u * u);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate(g, 0.0, 1.0, opt);
}

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
inline GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = diag(i);
    if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = off(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1,1].
inline GaussRule gauss_legendre(int n) {
  require(n >= 1, ErrorKind::domain, "gauss_legendre: n must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  auto r = detail::golub_welsch(diag, off, 2.0);
  // Polish nodes by Newton on P_n and take weights 2/((1-x^2) P_n'(x)^2); the
  // eigenvector route alone loses accuracy for large n.
  for (int i = 0; i < n; ++i) {
    double x = r.nodes[i], dp = 1.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      if (it < 3) x -= p1 / dp;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // Symmetrize to remove residual asymmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    const double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  if (n % 2) r.nodes[n / 2] = 0.0;
  return r;
}

/// n-point Gauss-Hermite rule for the standard normal weight phi(z); weights sum to 1.
inline GaussRule gauss_hermite_prob(int n) {
  require(n >= 1, ErrorKind::domain, "gauss_hermite_prob: n must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  auto r = detail::golub_welsch(diag, off, 1.0);
  // Newton polish on the orthonormal polynomial h_n (h_n' = sqrt(n) h_{n-1}),
  // then Christoffel weights 1/sum_{k<n} h_k(x)^2.
  for (int i = 0; i < n; ++i) {
    double x = r.nodes[i], sum = 1.0;
    for (int it = 0; it < 4; ++it) {
      double h0 = 1.0, h1 = x;
      sum = 1.0;
      for (int k = 1; k < n; ++k) {
        sum += h1 * h1;
        const double h2 = (x * h1 - std::sqrt(double(k)) * h0) / std::sqrt(k + 1.0);
        h0 = h1;
        h1 = h2;
      }
      if (it < 3) x -= h1 / (std::sqrt(double(n)) * h0);
    }
    r.nodes[i] = x;
    r.weights[i] = 1.0 / sum;
  }
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    const double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  if (n % 2) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace lrdf
