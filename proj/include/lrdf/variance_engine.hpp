#pragma once

// Variance formulas for functionals of Hermite polynomials and indicators of
// the field over [0,T] x T^gamma K, their separable factorization, asymptotic
// constants, growth diagnostics, and exact discrete (pairwise) counterparts.
//
// All space integrals are computed in the scaled variable u = z / T^gamma, so
// the density factor lives on the fixed body K and the covariance carries the
// scaling: int psi_{T^gamma K}(z) g(z) dz = int psi_K(u) g(T^gamma u) du.

#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "covariance.hpp"
#include "geomprob.hpp"
#include "grid.hpp"
#include "hermite_chaos.hpp"
#include "quadrature.hpp"

namespace lrdf {

enum class VarianceMethod { quadrature, closed_form_limit, discrete_pairwise };

inline std::string to_string(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::quadrature: return "quadrature";
    case VarianceMethod::closed_form_limit: return "closed-form-limit";
    case VarianceMethod::discrete_pairwise: return "discrete-pairwise";
  }
  return "?";
}

struct VarianceReport {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  VarianceMethod method = VarianceMethod::quadrature;
  std::optional<double> b1, b2;  // separable components
  int m = 1;
  int d = 2;
  double gamma = 0.0;
  double T = 0.0;
  std::string model;
  std::string body;
};

inline nlohmann::json to_json(const VarianceReport& r) {
  nlohmann::json j{{"value", r.value}, {"error", r.error},     {"converged", r.converged},
                   {"method", to_string(r.method)}, {"m", r.m}, {"d", r.d},
                   {"gamma", r.gamma},  {"T", r.T},             {"model", r.model},
                   {"body", r.body}};
  if (r.b1) j["b1"] = *r.b1;
  if (r.b2) j["b2"] = *r.b2;
  return j;
}

struct VarianceOptions {
  double outer_rel = 1e-7;  // tau integral
  double inner_rel = 1e-8;  // z integral
  int max_intervals = 2000;
};

namespace detail {

struct NestedResult {
  double value = 0.0, error = 0.0;
  bool converged = true;
};

/// int_0^T (1 - tau/T) int_0^{umax} w(u) g(s u, tau) du dtau.
template <class W, class G>
NestedResult body_time_integral(double T, double s, double umax, const std::vector<double>& ubreaks, W&& w, G&& g,
                                const VarianceOptions& opt) {
  NestedResult out;
  double inner_err = 0.0;
  bool inner_ok = true;
  auto outer = [&](double tau) {
    auto r = integrate([&](double u) { return w(u) * g(s * u, tau); }, 0.0, umax,
                       {0.0, opt.inner_rel, opt.max_intervals}, ubreaks);
    inner_err = std::max(inner_err, r.error);
    inner_ok = inner_ok && r.converged;
    return (1.0 - tau / T) * r.value;
  };
  std::vector<double> tbreaks;
  for (double b : {1.0, 10.0, 100.0})
    if (b < T) tbreaks.push_back(b);
  auto r = integrate(outer, 0.0, T, {0.0, opt.outer_rel, opt.max_intervals}, tbreaks);
  out.value = r.value;
  out.error = r.error + T * inner_err;
  out.converged = r.converged && inner_ok;
  return out;
}

/// Break points in u at covariance scales z = 1, 10, 100 and at body features.
inline std::vector<double> scale_breaks(double s, double umax, const std::vector<double>& extra = {}) {
  std::vector<double> b;
  for (double z : {1.0, 10.0, 100.0})
    if (z / s < umax) b.push_back(z / s);
  for (double x : extra)
    if (x > 0 && x < umax) b.push_back(x);
  return b;
}

inline std::vector<double> body_features(const BodySpec& body) {
  if (body.shape == BodyShape::cube) return {1.0, std::sqrt(2.0), std::sqrt(3.0)};
  return {};
}

/// psi_K(u) on the unscaled body.
inline std::function<double(double)> unit_density(const BodySpec& body) {
  if (body.kind == BodyKind::unit_ball) return [d = body.d](double u) { return ball_distance_density(d, 1.0, u); };
  return [&body](double u) { return convex_distance_density(body, 1.0, u); };
}

inline VarianceReport make_report(double value, const NestedResult& r, double prefactor, int m, int d, double gamma,
                                  double T, const CovarianceModel& model, const std::string& body) {
  VarianceReport rep;
  rep.value = std::max(value, 0.0);
  rep.error = std::abs(prefactor) * r.error;
  rep.converged = r.converged;
  rep.m = m;
  rep.d = d;
  rep.gamma = gamma;
  rep.T = T;
  rep.model = model.family();
  rep.body = body;
  return rep;
}

}  // namespace detail

/// sigma^2_{m,B(1)}(T) = 8 m! pi^d/(d Gamma^2(d/2)) T^{gamma d + 1}
///   int_0^T (1 - tau/T) int_0^{2T^gamma} z^{d-1} C^m(z,tau) I_{1-(z/2T^gamma)^2}((d+1)/2, 1/2) dz dtau.
inline VarianceReport sigma2_ball(int m, int d, double gamma, double T, const CovarianceModel& model,
                                  const VarianceOptions& opt = {}) {
  require(m >= 1 && d >= 1, ErrorKind::domain, "sigma2_ball: need m >= 1, d >= 1");
  require(T > 0 && gamma >= 0, ErrorKind::domain, "sigma2_ball: need T > 0, gamma >= 0");
  const double s = std::pow(T, gamma);
  const double a = 0.5 * (d + 1);
  auto w = [d, a](double u) {
    const double mu = 1.0 - 0.25 * u * u;
    return mu <= 0 ? 0.0 : std::pow(u, d - 1) * boost::math::ibeta(a, 0.5, mu);
  };
  auto g = [&](double z, double tau) { return cov_power(model, z, tau, m); };
  auto r = detail::body_time_integral(T, s, 2.0, detail::scale_breaks(s, 2.0), w, g, opt);
  const double pref = 8.0 * factorial(m) * std::pow(pi, d) / (d * std::pow(std::tgamma(0.5 * d), 2)) *
                      std::pow(T, gamma * d + 1.0) * std::pow(s, d);
  return detail::make_report(pref * r.value, r, pref, m, d, gamma, T, model, "unit-ball");
}

/// sigma^2_{m,K}(T) = 2 m! T |K|^2 T^{2 gamma d} int_0^T (1 - tau/T) int psi_{T^gamma K}(z) C^m(z,tau) dz dtau.
inline VarianceReport sigma2_body(int m, const BodySpec& body, double gamma, double T, const CovarianceModel& model,
                                  const VarianceOptions& opt = {}) {
  require(m >= 1, ErrorKind::domain, "sigma2_body: m must be >= 1");
  require(T > 0 && gamma >= 0, ErrorKind::domain, "sigma2_body: need T > 0, gamma >= 0");
  const int d = body.d;
  const double s = std::pow(T, gamma);
  const auto psi = detail::unit_density(body);
  auto g = [&](double z, double tau) { return cov_power(model, z, tau, m); };
  auto r = detail::body_time_integral(T, s, body.diameter,
                                      detail::scale_breaks(s, body.diameter, detail::body_features(body)), psi, g, opt);
  const double pref = 2.0 * factorial(m) * T * body.volume * body.volume * std::pow(s, 2.0 * d);
  return detail::make_report(pref * r.value, r, pref, m, d, gamma, T, model, body.name);
}

struct SeparableFactors {
  double b1 = 0.0, b2 = 0.0;
  double err1 = 0.0, err2 = 0.0;
  bool converged = true;
};

/// b_1m(T) = 2T int_0^T (1 - tau/T) C_time^m dtau,
/// b_2m(T) = |B(1)|^2 d T^{gamma d} int_0^{2T^gamma} z^{d-1} C_space^m(z) I_{1-(z/2T^gamma)^2}((d+1)/2,1/2) dz.
inline SeparableFactors separable_factors(int m, const Separable& model, double T, double gamma, int d,
                                          const QuadOptions& opt = {0.0, 1e-10, 4000}) {
  require(m >= 1 && d >= 1 && T > 0 && gamma >= 0, ErrorKind::domain, "separable_factors: bad arguments");
  SeparableFactors f;
  std::vector<double> tb;
  for (double b : {1.0, 10.0, 100.0, 1e3, 1e4})
    if (b < T) tb.push_back(b);
  auto r1 = integrate([&](double tau) { return (1.0 - tau / T) * std::pow(model.time(tau), m); }, 0.0, T, opt, tb);
  const double s = std::pow(T, gamma);
  const double a = 0.5 * (d + 1);
  std::vector<double> ub;
  for (double z : {1.0, 10.0, 100.0, 1e3, 1e4})
    if (z / s < 2.0) ub.push_back(z / s);
  auto r2 = integrate(
      [&](double u) {
        const double mu = 1.0 - 0.25 * u * u;
        return mu <= 0 ? 0.0 : std::pow(u, d - 1) * std::pow(model.space(s * u), m) * boost::math::ibeta(a, 0.5, mu);
      },
      0.0, 2.0, opt, ub);
  const double vb = unit_ball_volume(d);
  f.b1 = 2.0 * T * r1.value;
  f.err1 = 2.0 * T * r1.error;
  const double p2 = vb * vb * d * std::pow(s, 2.0 * d);
  f.b2 = p2 * r2.value;
  f.err2 = p2 * r2.error;
  f.converged = r1.converged && r2.converged;
  return f;
}

// ---------------------------------------------------------------------------
// Asymptotic constants for separable models on the unit ball

enum class DependenceKind { weak, boundary, lrd };

struct AsymptoticConstants {
  std::optional<double> L1, L2, L3, L4, L5;
  DependenceKind time = DependenceKind::weak, space = DependenceKind::weak;
  Regime regime = Regime::weak_dependence;
  double exponent = 0.0;  // leading power of T in sigma^2 (log factors ignored)

  /// L_i, or a regime error when it is not defined for this configuration.
  double get(int i) const {
    const std::optional<double>* all[] = {&L1, &L2, &L3, &L4, &L5};
    require(i >= 1 && i <= 5, ErrorKind::domain, "asymptotic constant index must be 1..5");
    const auto& v = *all[i - 1];
    require(v.has_value(), ErrorKind::admissibility,
            "L" + std::to_string(i) + " is not defined in this dependence regime");
    return *v;
  }
};

inline AsymptoticConstants asymptotic_constants(const CovarianceModel& model, int m, int d, double gamma) {
  require(model.is<Separable>(), ErrorKind::admissibility, "asymptotic_constants: separable model required");
  require(m >= 1 && d >= 1 && gamma >= 0, ErrorKind::domain, "asymptotic_constants: bad arguments");
  const auto& s = model.as<Separable>();
  AsymptoticConstants c;
  const double mA = m * s.A, ma = m * s.alpha_s;
  const QuadOptions opt{0.0, 1e-10, 4000};
  if (mA > 1) {
    c.time = DependenceKind::weak;
    c.L1 = integrate_to_inf([&](double t) { return std::pow(s.time(t), m); }, 0.0, opt).value;
  } else if (mA == 1) {
    c.time = DependenceKind::boundary;
  } else {
    c.time = DependenceKind::lrd;
    c.L2 = 1.0 / ((1.0 - mA) * (2.0 - mA));
  }
  const double vb = unit_ball_volume(d);
  if (ma > d) {
    c.space = DependenceKind::weak;
    c.L3 = vb * vb * d *
           integrate_to_inf([&](double z) { return std::pow(z, d - 1) * std::pow(s.space(z), m); }, 0.0, opt).value;
  } else if (ma == d) {
    c.space = DependenceKind::boundary;
    c.L4 = 4.0 * std::pow(pi, d) / (d * std::pow(std::tgamma(0.5 * d), 2));
  } else {
    c.space = DependenceKind::lrd;
    const double D = d - ma;
    c.L5 = std::pow(2.0, D + 1) * std::pow(pi, d - 0.5) * std::tgamma(0.5 * (D + 1)) /
           (D * std::tgamma(0.5 * d) * std::tgamma(0.5 * (2 * d - ma + 2)));
  }
  const double et = c.time == DependenceKind::lrd ? 2.0 - mA : 1.0;
  const double es = c.space == DependenceKind::lrd ? gamma * (2.0 * d - ma) : gamma * d;
  c.exponent = et + es;
  if (c.time != DependenceKind::lrd)
    c.regime = Regime::weak_dependence;
  else if (gamma == 0)
    c.regime = Regime::lrd_time_only;
  else
    c.regime = c.space == DependenceKind::lrd ? Regime::lrd_space_time : Regime::weak_dependence;
  return c;
}

// ---------------------------------------------------------------------------
// Indicator functionals

/// (1/2pi) int_0^rho exp(-u^2/(1+v)) / sqrt(1-v^2) dv, computed as
/// (1/2pi) int_0^{asin rho} exp(-u^2/(1+sin t)) dt (no endpoint singularity).
/// Equals P(X >= u, Y >= u) - (1-Phi(u))^2 for standard normals with correlation rho.
inline double joint_exceed_excess(double u, double rho) {
  require(rho >= -1.0 && rho <= 1.0, ErrorKind::domain, "joint_exceed_prob: rho must lie in [-1,1]");
  if (rho == 0.0 || std::isinf(u)) return 0.0;
  const double u2 = u * u;
  const double top = std::asin(rho);
  auto f = [u2](double t) {
    const double den = 1.0 + std::sin(t);
    return den <= 0.0 ? (u2 == 0.0 ? 1.0 : 0.0) : std::exp(-u2 / den);
  };
  const auto r = integrate(f, 0.0, top, {1e-17, 1e-14, 200});
  return r.value / (2.0 * pi);
}

/// P(X >= u, Y >= u) for a standard bivariate normal pair with correlation rho.
inline double joint_exceed_prob(double u, double rho) {
  const double q = normal_sf(u);
  return q * q + joint_exceed_excess(u, rho);
}

/// Var(M(T)) = 2T|K|^2 T^{2 gamma d} int int (1 - tau/T) psi(z) (1/2pi) int_0^{C(z,tau)} ... dv dz dtau
/// for the sojourn measure of {Z >= u} over [0,T] x T^gamma K.
inline VarianceReport var_sojourn_exact(double u, double T, const BodySpec& body, double gamma,
                                        const CovarianceModel& model, const VarianceOptions& opt = {}) {
  require(T > 0 && gamma >= 0, ErrorKind::domain, "var_sojourn_exact: need T > 0, gamma >= 0");
  const int d = body.d;
  const double s = std::pow(T, gamma);
  const double pref = 2.0 * T * body.volume * body.volume * std::pow(s, 2.0 * d);
  if (std::isinf(u)) {
    // The indicator is a.s. constant: no variance.
    VarianceReport rep = detail::make_report(0.0, {}, pref, 1, d, gamma, T, model, body.name);
    rep.method = VarianceMethod::closed_form_limit;
    return rep;
  }
  const auto psi = detail::unit_density(body);
  auto g = [&](double z, double tau) { return joint_exceed_excess(u, std::clamp(model(z, tau), -1.0, 1.0)); };
  auto r = detail::body_time_integral(T, s, body.diameter,
                                      detail::scale_breaks(s, body.diameter, detail::body_features(body)), psi, g, opt);
  return detail::make_report(pref * r.value, r, pref, 1, d, gamma, T, model, body.name);
}

/// Truncated chaos sum sum_{q=1}^{N} J_q^2/(q!)^2 sigma^2_{q,K}(T), evaluated as one
/// nested integral of sum_q J_q^2/q! C^q.
inline VarianceReport chaos_variance_sum(const HermiteCoeffs& c, int N, double T, const BodySpec& body, double gamma,
                                         const CovarianceModel& model, const VarianceOptions& opt = {}) {
  require(N >= 1 && N <= c.truncation, ErrorKind::domain, "chaos_variance_sum: N outside the coefficient range");
  const int d = body.d;
  const double s = std::pow(T, gamma);
  std::vector<double> w(N + 1, 0.0);
  for (int q = 1; q <= N; ++q) w[q] = c.coeffs[q] * c.coeffs[q] / factorial(q);
  auto g = [&](double z, double tau) {
    const double rho = model(z, tau);
    double acc = 0.0, p = 1.0;
    for (int q = 1; q <= N; ++q) {
      p *= rho;
      acc += w[q] * p;
    }
    return acc;
  };
  const auto psi = detail::unit_density(body);
  auto r = detail::body_time_integral(T, s, body.diameter,
                                      detail::scale_breaks(s, body.diameter, detail::body_features(body)), psi, g, opt);
  const double pref = 2.0 * T * body.volume * body.volume * std::pow(s, 2.0 * d);
  return detail::make_report(pref * r.value, r, pref, 1, d, gamma, T, model, body.name);
}

// ---------------------------------------------------------------------------
// Sphere

namespace detail {

/// int_0^T (1 - tau/T) int_0^2 z^{d-2}(1 - z^2/4)^{(d-3)/2} g(z,tau) dz dtau, with z = 2 sin(phi)
/// turning the z-weight into 2^{d-1} (sin phi cos phi)^{d-2}.
template <class G>
NestedResult sphere_time_integral(int d, double T, G&& g, const VarianceOptions& opt) {
  auto w = [d](double phi) { return std::pow(2.0, d - 1) * std::pow(std::sin(phi) * std::cos(phi), d - 2); };
  std::vector<double> pb;
  for (double z : {0.5, 1.0, 1.5}) pb.push_back(std::asin(0.5 * z));
  return body_time_integral(
      T, 1.0, 0.5 * pi, pb, w, [&](double phi, double tau) { return g(2.0 * std::sin(phi), tau); }, opt);
}

inline double sphere_prefactor(int d) {
  return 4.0 * std::pow(pi, d - 0.5) / (std::tgamma(0.5 * d) * std::tgamma(0.5 * (d - 1)));
}

}  // namespace detail

/// sigma^2 of int_0^T int_{S_{d-1}} H_n(Z) dsigma dt:
/// 2 n! T 4 pi^{d-1/2} / (Gamma(d/2) Gamma((d-1)/2)) int int (1 - tau/T) z^{d-2} (1-z^2/4)^{(d-3)/2} C^n dz dtau.
inline VarianceReport sigma2_sphere(int n, int d, double T, const CovarianceModel& model,
                                    const VarianceOptions& opt = {}) {
  require(n >= 1 && d >= 2 && T > 0, ErrorKind::domain, "sigma2_sphere: need n >= 1, d >= 2, T > 0");
  auto r = detail::sphere_time_integral(d, T, [&](double z, double tau) { return cov_power(model, z, tau, n); }, opt);
  const double pref = 2.0 * factorial(n) * T * detail::sphere_prefactor(d);
  return detail::make_report(pref * r.value, r, pref, n, d, 0.0, T, model, "sphere");
}

/// Variance of the sphere sojourn measure int_0^T int_{S_{d-1}} 1{Z >= u} dsigma dt.
inline VarianceReport var_sphere_sojourn_exact(double u, int d, double T, const CovarianceModel& model,
                                               const VarianceOptions& opt = {}) {
  require(d >= 2 && T > 0, ErrorKind::domain, "var_sphere_sojourn_exact: need d >= 2, T > 0");
  const double pref = 2.0 * T * detail::sphere_prefactor(d);
  if (std::isinf(u)) {
    auto rep = detail::make_report(0.0, {}, pref, 1, d, 0.0, T, model, "sphere");
    rep.method = VarianceMethod::closed_form_limit;
    return rep;
  }
  auto r = detail::sphere_time_integral(
      d, T, [&](double z, double tau) { return joint_exceed_excess(u, std::clamp(model(z, tau), -1.0, 1.0)); },
      opt);
  return detail::make_report(pref * r.value, r, pref, 1, d, 0.0, T, model, "sphere");
}

// ---------------------------------------------------------------------------
// Growth diagnostic for the divergence condition

struct GrowthDiagnostic {
  std::vector<double> T, sigma2, ratio;
  double slope = 0.0;  // least-squares slope of log ratio against log T
  bool increasing() const {
    for (std::size_t i = 1; i < ratio.size(); ++i)
      if (!(ratio[i] > ratio[i - 1])) return false;
    return true;
  }
  bool decreasing() const {
    for (std::size_t i = 1; i < ratio.size(); ++i)
      if (!(ratio[i] < ratio[i - 1])) return false;
    return true;
  }
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::domain, "loglog_slope: need >= 2 matching points");
  double mx = 0, my = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]) / n, my += std::log(y[i]) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]) - mx;
    sxy += a * (std::log(y[i]) - my);
    sxx += a * a;
  }
  return sxy / sxx;
}

/// sigma^2_{m,K}(T) / (T^{1+delta1} T^{gamma d (1+delta2)}) on an increasing T grid.
inline GrowthDiagnostic growth_ratio_diagnostic(int m, const BodySpec& body, double gamma, const CovarianceModel& model,
                                                double delta1, double delta2, const std::vector<double>& T_grid,
                                                const VarianceOptions& opt = {}) {
  require(T_grid.size() >= 4, ErrorKind::domain, "growth_ratio_diagnostic: need at least 4 T values");
  for (std::size_t i = 1; i < T_grid.size(); ++i)
    require(T_grid[i] > T_grid[i - 1], ErrorKind::domain, "growth_ratio_diagnostic: T grid must increase");
  GrowthDiagnostic g;
  const int d = body.d;
  for (double T : T_grid) {
    const double s2 = sigma2_body(m, body, gamma, T, model, opt).value;
    g.T.push_back(T);
    g.sigma2.push_back(s2);
    g.ratio.push_back(s2 / (std::pow(T, 1.0 + delta1) * std::pow(T, gamma * d * (1.0 + delta2))));
  }
  g.slope = loglog_slope(g.T, g.ratio);
  return g;
}

// ---------------------------------------------------------------------------
// Exact variances of the discretized (Riemann-sum) functionals on a grid

namespace detail {

/// sum over ordered pairs of grid points of w^2 f(C(|x-y|, |t-s|)).
template <class F>
double pairwise_sum(const GridSpec& g, const CovarianceModel& model, F&& f) {
  const auto lags = spatial_lag_counts(g);
  const double h = g.h(), dt = g.dt(), w = g.cell_volume();
  double total = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    const double tc = time_lag_count(g.nt, k);
    double acc = 0.0;
    for (const auto& [s2, count] : lags) acc += count * f(model(h * std::sqrt(double(s2)), k * dt));
    total += tc * acc;
  }
  return w * w * total;
}

}  // namespace detail

/// Var of sum_cells w 1{Z >= u}: the pairwise sum of joint_exceed_prob - (1-Phi(u))^2.
inline VarianceReport discrete_sojourn_variance(const GridSpec& g, const CovarianceModel& model, double u) {
  VarianceReport rep;
  rep.method = VarianceMethod::discrete_pairwise;
  rep.value = std::isinf(u) ? 0.0 : detail::pairwise_sum(g, model, [u](double rho) {
    return joint_exceed_excess(u, std::clamp(rho, -1.0, 1.0));
  });
  rep.d = g.d;
  rep.gamma = g.gamma;
  rep.T = g.T;
  rep.model = model.family();
  rep.body = g.shape == BodyShape::ball ? "ball-grid" : "cube-grid";
  return rep;
}

/// Var of sum_cells w H_m(Z) = m! sum_pairs w^2 C^m.
inline VarianceReport discrete_hermite_variance(const GridSpec& g, const CovarianceModel& model, int m) {
  require(m >= 1, ErrorKind::domain, "discrete_hermite_variance: m must be >= 1");
  VarianceReport rep;
  rep.method = VarianceMethod::discrete_pairwise;
  rep.m = m;
  rep.value = factorial(m) * detail::pairwise_sum(g, model, [m](double rho) { return std::pow(rho, m); });
  rep.d = g.d;
  rep.gamma = g.gamma;
  rep.T = g.T;
  rep.model = model.family();
  rep.body = g.shape == BodyShape::ball ? "ball-grid" : "cube-grid";
  return rep;
}

/// `T,sigma2,err,ratio` CSV for a growth diagnostic.
inline void write_variance_csv(const GrowthDiagnostic& g, const std::vector<double>& errors, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "write_variance_csv: cannot open " + path);
  os.precision(17);
  os << "T,sigma2,err,ratio\n";
  for (std::size_t i = 0; i < g.T.size(); ++i)
    os << g.T[i] << ',' << g.sigma2[i] << ',' << (i < errors.size() ? errors[i] : 0.0) << ',' << g.ratio[i] << '\n';
  require(bool(os), ErrorKind::io, "write_variance_csv: write failed for " + path);
}

}  // namespace lrdf
