#pragma once

// Sojourn (first Minkowski) functionals of sampled fields, their normalized
// statistics, and fixed or moving excursion thresholds.

#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "covariance.hpp"
#include "field_sim.hpp"
#include "geomprob.hpp"
#include "hermite_chaos.hpp"
#include "sphere.hpp"
#include "variance_engine.hpp"

namespace lrdf {

// ---------------------------------------------------------------------------
// Thresholds

enum class ThresholdKind { fixed, loglog, logpow };

/// fixed u, or u(T) = c (log log T)^{1/2}, or u(T) = c (log T)^{eta/2}.
struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::fixed;
  double u = 1.0;
  double c = 1.0;
  double eta = 0.5;

  static ThresholdSpec fixed(double u) { return {ThresholdKind::fixed, u, 1.0, 0.5}; }
  static ThresholdSpec loglog(double c = 1.0) { return {ThresholdKind::loglog, 0.0, c, 0.5}; }
  static ThresholdSpec logpow(double eta, double c = 1.0) { return {ThresholdKind::logpow, 0.0, c, eta}; }

  bool moving() const { return kind != ThresholdKind::fixed; }
};

inline std::string to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::fixed: return "fixed";
    case ThresholdKind::loglog: return "loglog";
    case ThresholdKind::logpow: return "logpow";
  }
  return "?";
}

inline nlohmann::json to_json(const ThresholdSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}};
  if (s.kind == ThresholdKind::fixed) j["u"] = s.u;
  else j["c"] = s.c;
  if (s.kind == ThresholdKind::logpow) j["eta"] = s.eta;
  return j;
}

inline ThresholdSpec threshold_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "fixed") return ThresholdSpec::fixed(j.at("u").get<double>());
  if (kind == "loglog") return ThresholdSpec::loglog(j.value("c", 1.0));
  if (kind == "logpow") return ThresholdSpec::logpow(j.at("eta").get<double>(), j.value("c", 1.0));
  fail(ErrorKind::config, "threshold: unknown kind '" + kind + "' (expected fixed, loglog or logpow)");
}

/// u(T) for the threshold family; moving families need T > e.
inline double threshold_at(const ThresholdSpec& s, double T) {
  switch (s.kind) {
    case ThresholdKind::fixed: return s.u;
    case ThresholdKind::loglog:
      require(s.c > 0, ErrorKind::parameter, "threshold: c must be positive");
      require(T > std::numbers::e, ErrorKind::domain, "threshold: loglog family needs T > e");
      return s.c * std::sqrt(std::log(std::log(T)));
    case ThresholdKind::logpow:
      require(s.c > 0 && s.eta > 0, ErrorKind::parameter, "threshold: c and eta must be positive");
      require(T > std::numbers::e, ErrorKind::domain, "threshold: logpow family needs T > e");
      return s.c * std::pow(std::log(T), 0.5 * s.eta);
  }
  return s.u;
}

struct ThresholdCheck {
  bool admissible = true;
  std::string condition;  // failing condition, empty when admissible
  double beta1 = 0.0, beta2 = 0.0;
  std::vector<double> T_grid, u, product;  // u(T)^2 sup_cov_outside(T)
};

inline nlohmann::json to_json(const ThresholdCheck& c) {
  return {{"admissible", c.admissible}, {"condition", c.condition}, {"beta1", c.beta1}, {"beta2", c.beta2},
          {"T", c.T_grid},              {"u", c.u},                 {"product", c.product}};
}

/// Default T grid for the numeric decay check: 10^2, 10^3, ..., 10^12.
inline std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (int k = 2; k <= 12; ++k) g.push_back(std::pow(10.0, k));
  return g;
}

/// Admissibility of a moving threshold: u^2(T) = o(log T) decided by family
/// (loglog, or logpow with eta < 1), then a numeric check that
/// u^2(T) sup_cov_outside(model, T, gamma, beta1, beta2) decreases to 0 over the grid
/// (nonincreasing along the grid and the last value below half the first).
inline ThresholdCheck check_threshold(const ThresholdSpec& spec, const CovarianceModel& model, double gamma,
                                      double beta1, double beta2,
                                      const std::vector<double>& T_grid = default_threshold_grid()) {
  ThresholdCheck out;
  out.beta1 = beta1;
  out.beta2 = beta2;
  if (spec.kind == ThresholdKind::fixed) return out;
  if (spec.kind == ThresholdKind::logpow && !(spec.eta < 1.0)) {
    out.admissible = false;
    out.condition = "u^2(T) = o(log T) fails: logpow threshold needs eta < 1 (got eta = " + std::to_string(spec.eta) + ")";
    return out;
  }
  for (double T : T_grid) {
    const double u = threshold_at(spec, T);
    out.T_grid.push_back(T);
    out.u.push_back(u);
    out.product.push_back(u * u * sup_cov_outside(model, T, gamma, beta1, beta2));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < out.product.size(); ++i)
    if (out.product[i] > out.product[i - 1] * (1 + 1e-12)) decreasing = false;
  if (!decreasing || !(out.product.back() < 0.5 * out.product.front())) {
    out.admissible = false;
    out.condition = "u^2(T) sup{C(z,tau): tau >= T^beta1 or z >= T^(gamma beta2)} -> 0 not observed on the T grid";
  }
  return out;
}

/// beta_i = delta_i/2 from the regime check; 0.5 when the regime check gives no interval.
inline ThresholdCheck check_threshold(const ThresholdSpec& spec, const CovarianceModel& model, int m, double gamma, int d,
                                      const std::vector<double>& T_grid = default_threshold_grid()) {
  const auto lrd = check_lrd_conditions(model, m, gamma, d);
  auto mid = [](const Interval& iv) { return iv.empty() ? 0.5 : std::clamp(0.5 * iv.hi, 1e-6, 1.0 - 1e-6); };
  return check_threshold(spec, model, gamma, mid(lrd.delta1), mid(lrd.delta2), T_grid);
}

struct MovingThreshold {
  double u = 0.0;
  ThresholdCheck check;
};

/// u(T) with its admissibility verdict.
inline MovingThreshold moving_threshold(const ThresholdSpec& spec, double T, const CovarianceModel& model, int m,
                                        double gamma, int d) {
  return {threshold_at(spec, T), check_threshold(spec, model, m, gamma, d)};
}

/// Throws ErrorKind::admissibility naming the failing condition.
inline void require_admissible(const ThresholdCheck& c) {
  require(c.admissible, ErrorKind::admissibility, "inadmissible threshold: " + c.condition);
}

// ---------------------------------------------------------------------------
// Statistics

struct SojournStat {
  double raw = 0.0;
  double centered = std::numeric_limits<double>::quiet_NaN();
  double normalized = std::numeric_limits<double>::quiet_NaN();
  double mean_used = std::numeric_limits<double>::quiet_NaN();
  double denominator_used = std::numeric_limits<double>::quiet_NaN();
  double total_measure = 0.0;
  double T = 0.0;
};

/// Riemann sum of G(Z) over the masked space-time grid.
inline SojournStat sojourn_general(const GridField& f, const std::function<double(double)>& G) {
  SojournStat s;
  double acc = 0.0;
  for (double v : f.values) acc += G(v);
  s.raw = acc * f.grid.cell_volume();
  s.total_measure = f.grid.total_measure();
  s.T = f.grid.T;
  return s;
}

/// Riemann sum of 1{Z >= u}.
inline SojournStat minkowski_m1(const GridField& f, double u) {
  std::size_t count = 0;
  for (double v : f.values) count += v >= u ? 1 : 0;
  SojournStat s;
  s.raw = double(count) * f.grid.cell_volume();
  s.total_measure = f.grid.total_measure();
  s.T = f.grid.T;
  return s;
}

/// Riemann sum of H_m(Z).
inline double hermite_sum(const GridField& f, int m) {
  double acc = 0.0;
  for (double v : f.values) acc += hermite(m, v);
  return acc * f.grid.cell_volume();
}

/// Centering and scale applied to a raw functional.
struct Normalizer {
  double mean = 0.0;
  double denominator = 1.0;
  std::string label;
};

inline SojournStat normalized_stat(SojournStat s, const Normalizer& n) {
  require(n.denominator > 0 && std::isfinite(n.denominator), ErrorKind::numeric,
          "normalized_stat: denominator must be positive and finite (" + n.label + ")");
  s.mean_used = n.mean;
  s.denominator_used = n.denominator;
  s.centered = s.raw - n.mean;
  s.normalized = s.centered / n.denominator;
  return s;
}

/// Continuous normalizer: mean J_0 |K| T^{1+gamma d}, scale |J_m| sigma_{m,K}(T) / m!.
inline Normalizer theorem_normalizer(const HermiteCoeffs& J, int m, double T, const BodySpec& body, double gamma,
                                     const CovarianceModel& model, const VarianceOptions& opt = {}) {
  require(m >= 1 && m <= J.truncation, ErrorKind::domain, "theorem_normalizer: rank outside the coefficient table");
  require(std::abs(J[m]) > 0, ErrorKind::numeric, "theorem_normalizer: J_m vanishes (zero denominator)");
  const auto var = sigma2_body(m, body, gamma, T, model, opt);
  Normalizer n;
  n.mean = J[0] * body.volume * std::pow(T, 1.0 + gamma * body.d);
  n.denominator = std::abs(J[m]) * std::sqrt(var.value) / factorial(m);
  n.label = "analytic sigma_" + std::to_string(m) + " on " + body.name;
  return n;
}

/// Discrete normalizer for the indicator on a grid: mean (1 - Phi(u)) x discretized
/// measure, scale the exact standard deviation of the Riemann sum.
inline Normalizer discrete_normalizer(const GridSpec& g, const CovarianceModel& model, double u) {
  Normalizer n;
  n.mean = normal_sf(u) * g.total_measure();
  n.denominator = std::sqrt(discrete_sojourn_variance(g, model, u).value);
  n.label = "discrete pairwise sum";
  return n;
}

/// Y_{m,T} = sgn(J_m) (Riemann sum of H_m(Z)) / sigma_m.
inline SojournStat hermite_projection_stat(const GridField& f, int m, double sigma_m, double sign_Jm) {
  require(sigma_m > 0 && std::isfinite(sigma_m), ErrorKind::numeric,
          "hermite_projection_stat: sigma_m must be positive and finite");
  SojournStat s;
  s.raw = hermite_sum(f, m);
  s.total_measure = f.grid.total_measure();
  s.T = f.grid.T;
  s.mean_used = 0.0;
  s.denominator_used = sigma_m;
  s.centered = s.raw;
  s.normalized = (sign_Jm < 0 ? -1.0 : 1.0) * s.raw / sigma_m;
  return s;
}

// ---------------------------------------------------------------------------
// Sphere

/// Riemann sum of 1{T_R >= u} over (surface-measure pixels) x (time steps).
inline SojournStat sphere_sojourn(const SphereField& f, double u) {
  const std::size_t npix = f.grid.n_pix();
  double acc = 0.0;
  for (int t = 0; t < f.nt; ++t)
    for (std::size_t p = 0; p < npix; ++p)
      if (f.values[std::size_t(t) * npix + p] >= u) acc += f.grid.weights[p];
  SojournStat s;
  s.raw = acc * f.dt;
  s.T = f.T();
  s.total_measure = f.T() * 4.0 * pi;
  return s;
}

/// Mean T (1 - Phi(u)) |S_{d-1}| and scale phi(u) sigma_1 on the sphere.
inline Normalizer sphere_theorem_normalizer(double u, int d, double T, const CovarianceModel& model,
                                            const VarianceOptions& opt = {}) {
  Normalizer n;
  n.mean = T * normal_sf(u) * unit_sphere_area(d);
  n.denominator = normal_pdf(u) * std::sqrt(sigma2_sphere(1, d, T, model, opt).value);
  n.label = "analytic sphere sigma_1";
  return n;
}

// ---------------------------------------------------------------------------
// Export

/// `replicate,raw,centered,normalized` rows.
inline void write_replicates_csv(const std::vector<SojournStat>& stats, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "write_replicates_csv: cannot open " + path);
  os.precision(17);
  os << "replicate,raw,centered,normalized\n";
  for (std::size_t i = 0; i < stats.size(); ++i)
    os << i << ',' << stats[i].raw << ',' << stats[i].centered << ',' << stats[i].normalized << '\n';
  require(bool(os), ErrorKind::io, "write_replicates_csv: write failed for " + path);
}

}  // namespace lrdf
