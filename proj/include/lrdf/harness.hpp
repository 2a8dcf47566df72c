#pragma once

// Monte Carlo experiments over a T ladder: CLT checks of the normalized sojourn
// functional, reduction-principle gaps, normality tests and report export.
//
// Seeds: replicate r of ladder entry i draws from replicate_stream(seed, i, r, purpose),
// purpose 0 for the field and 1 for surrogate statistics, so every replicate is a
// pure function of (seed, i, r) and results do not depend on the worker count.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrdf/covariance.hpp"
#include "lrdf/field_sim.hpp"
#include "lrdf/geomprob.hpp"
#include "lrdf/grid.hpp"
#include "lrdf/hermite_chaos.hpp"
#include "lrdf/parallel.hpp"
#include "lrdf/rng.hpp"
#include "lrdf/sojourn.hpp"
#include "lrdf/sphere.hpp"
#include "lrdf/stats.hpp"
#include "lrdf/variance_engine.hpp"

namespace lrdf {

enum class SpaceKind { euclidean, sphere };
enum class DenominatorKind { analytic, discrete };

struct SphereSetup {
  int n_lat = 24;
  int n_lon = 48;
  int L = 16;
};

struct ExperimentConfig {
  nlohmann::json model_json = to_json(CovarianceModel{});
  SpaceKind space = SpaceKind::euclidean;
  int d = 2;
  BodyShape body = BodyShape::ball;
  double gamma = 0.0;
  std::vector<double> T{50.0};
  int nx = 8;
  std::vector<int> nt;  // per T; filled from dt when empty
  double dt = 0.5;
  SphereSetup sphere;
  ThresholdSpec threshold = ThresholdSpec::fixed(1.0);
  std::string functional = "indicator";  // G = 1{z >= u}, or "hermite" for G = H_m
  int m = 1;
  int truncation = 30;
  int replicates = 500;
  std::uint64_t seed = 1;
  DenominatorKind denominator = DenominatorKind::discrete;
  Generator generator = Generator::exact;
  std::size_t exact_cap = 4096;
  int threads = 0;
  bool surrogate = false;  // test hook: i.i.d. N(0,1) statistics in place of simulations

  CovarianceModel model() const { return model_from_json(model_json); }
  int nt_at(std::size_t i) const {
    if (!nt.empty()) return nt[i];
    return std::max(1, int(std::lround(T[i] / dt)));
  }
};

inline std::string to_string(SpaceKind s) { return s == SpaceKind::sphere ? "sphere" : "euclidean"; }
inline std::string to_string(DenominatorKind k) { return k == DenominatorKind::analytic ? "analytic" : "discrete"; }

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["model"] = c.model_json;
  j["space"] = to_string(c.space);
  j["domain"] = {{"d", c.d}, {"body", c.body == BodyShape::cube ? "cube" : "ball"}, {"gamma", c.gamma}, {"T", c.T}};
  j["grid"] = {{"nx", c.nx}, {"dt", c.dt}};
  if (!c.nt.empty()) j["grid"]["nt"] = c.nt;
  j["sphere"] = {{"n_lat", c.sphere.n_lat}, {"n_lon", c.sphere.n_lon}, {"L", c.sphere.L}};
  j["threshold"] = to_json(c.threshold);
  j["functional"] = c.functional;
  j["chaos"] = {{"m", c.m}, {"truncation", c.truncation}};
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["variance_method"] = to_string(c.denominator);
  j["generator"] = c.generator == Generator::exact ? "exact" : "circulant";
  j["exact_cap"] = c.exact_cap;
  j["threads"] = c.threads;
  j["surrogate"] = c.surrogate;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::config, "experiment config: expected a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("model")) {
      c.model_json = j.at("model");
      (void)c.model();
    }
    const std::string space = j.value("space", "euclidean");
    require(space == "euclidean" || space == "sphere", ErrorKind::config, "experiment config: unknown space '" + space + "'");
    c.space = space == "sphere" ? SpaceKind::sphere : SpaceKind::euclidean;
    if (j.contains("domain")) {
      const auto& dj = j.at("domain");
      c.d = dj.value("d", c.d);
      const std::string body = dj.value("body", "ball");
      require(body == "ball" || body == "cube", ErrorKind::config, "experiment config: unknown body '" + body + "'");
      c.body = body == "cube" ? BodyShape::cube : BodyShape::ball;
      c.gamma = dj.value("gamma", c.gamma);
      if (dj.contains("T")) c.T = dj.at("T").get<std::vector<double>>();
    }
    if (j.contains("grid")) {
      const auto& gj = j.at("grid");
      c.nx = gj.value("nx", c.nx);
      c.dt = gj.value("dt", c.dt);
      if (gj.contains("nt")) {
        if (gj.at("nt").is_array())
          c.nt = gj.at("nt").get<std::vector<int>>();
        else
          c.nt.assign(c.T.size(), gj.at("nt").get<int>());
      }
    }
    if (j.contains("sphere")) {
      const auto& sj = j.at("sphere");
      c.sphere.n_lat = sj.value("n_lat", c.sphere.n_lat);
      c.sphere.n_lon = sj.value("n_lon", c.sphere.n_lon);
      c.sphere.L = sj.value("L", c.sphere.L);
    }
    if (j.contains("threshold")) c.threshold = threshold_from_json(j.at("threshold"));
    c.functional = j.value("functional", c.functional);
    require(c.functional == "indicator" || c.functional == "hermite", ErrorKind::config,
            "experiment config: functional must be 'indicator' or 'hermite'");
    if (j.contains("chaos")) {
      c.m = j.at("chaos").value("m", c.m);
      c.truncation = j.at("chaos").value("truncation", c.truncation);
    }
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    const std::string method = j.value("variance_method", "discrete");
    require(method == "analytic" || method == "discrete", ErrorKind::config,
            "experiment config: variance_method must be 'analytic' or 'discrete'");
    c.denominator = method == "analytic" ? DenominatorKind::analytic : DenominatorKind::discrete;
    const std::string gen = j.value("generator", "exact");
    require(gen == "exact" || gen == "circulant", ErrorKind::config, "experiment config: unknown generator '" + gen + "'");
    c.generator = gen == "exact" ? Generator::exact : Generator::circulant;
    c.exact_cap = j.value("exact_cap", c.exact_cap);
    c.threads = j.value("threads", c.threads);
    c.surrogate = j.value("surrogate", c.surrogate);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("experiment config: ") + e.what());
  }
  require(c.replicates >= 1, ErrorKind::config, "experiment config: replicates must be >= 1");
  require(!c.T.empty(), ErrorKind::config, "experiment config: empty T list");
  for (std::size_t i = 0; i < c.T.size(); ++i) {
    require(c.T[i] > 0, ErrorKind::config, "experiment config: T must be positive");
    if (i > 0) require(c.T[i] > c.T[i - 1], ErrorKind::config, "experiment config: T list must be increasing");
  }
  require(c.nt.empty() || c.nt.size() == c.T.size(), ErrorKind::config,
          "experiment config: grid.nt must have one entry per T");
  for (std::size_t i = 0; i < c.T.size(); ++i)
    require(c.nt_at(i) >= 1, ErrorKind::config, "experiment config: nt must be >= 1");
  require(c.dt > 0, ErrorKind::config, "experiment config: dt must be positive");
  require(c.nx >= 1 && c.d >= 1, ErrorKind::config, "experiment config: nx and d must be >= 1");
  require(c.m >= 1 && c.m <= c.truncation, ErrorKind::config, "experiment config: need 1 <= m <= truncation");
  if (c.space == SpaceKind::sphere) {
    require(c.d == 3, ErrorKind::config, "experiment config: sphere runs need d = 3");
    require(c.functional == "indicator", ErrorKind::config, "experiment config: sphere runs use the indicator functional");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), ErrorKind::io, "cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, "config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Report

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TBlock {
  double T = 0.0;
  std::uint32_t t_index = 0;
  double u = 0.0;
  int nx = 0, nt = 0;
  std::size_t points = 0;
  double embedding_defect = 0.0;
  double sigma2_theory = kNaN;    // denominator^2 used for Y_T
  double sigma2_analytic = kNaN;  // (|J_m| sigma_m / m!)^2, continuous first-chaos formula
  double sigma2_discrete = kNaN;  // exact variance of the computed Riemann sum
  double mean_used = kNaN;
  double mean_theory = kNaN;      // J_0 |K| T^{1 + gamma d} (or T (1 - Phi(u)) |S|)
  double mean_discrete = kNaN;    // exact mean of the computed Riemann sum
  double discretization_bias = kNaN;
  double mean_M = kNaN, se_M = kNaN, var_empirical = kNaN;
  double mean_Y = kNaN, var_Y = kNaN, mean_Ym = kNaN, var_Ym = kNaN;
  bool has_tests = false;
  double ks_stat = kNaN, ks_p = kNaN, ad_stat = kNaN, ad_p = kNaN;
  double reduction_gap = kNaN, gap_se = kNaN;
  std::size_t failures = 0;
  double runtime_s = 0.0;
  std::vector<double> Y, Ym;
};

struct ReplicateReport {
  std::string kind = "clt";
  nlohmann::json config;
  std::string verdict = "indeterminate";
  std::string regime = "unclassified";
  std::string regime_label;
  bool gated = true;
  bool partial = false;
  std::string denominator;
  std::vector<TBlock> blocks;
  // Reduction trend across the ladder.
  double gap_slope = kNaN;
  bool gap_decreasing = false;        // point estimates strictly decreasing
  bool gap_decreasing_slack = false;  // decreasing up to 2 SE per step
  std::string note = "acceptance gates are trend- and threshold-based, not convergence proofs";
};

namespace detail {

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
inline double num_back(const nlohmann::json& j, const char* key) {
  return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : kNaN;
}

}  // namespace detail

inline nlohmann::json to_json(const TBlock& b, bool include_runtime = true) {
  using detail::num;
  nlohmann::json j{{"T", b.T},
                   {"t_index", b.t_index},
                   {"u", b.u},
                   {"nx", b.nx},
                   {"nt", b.nt},
                   {"points", b.points},
                   {"embedding_defect", b.embedding_defect},
                   {"sigma2_theory", num(b.sigma2_theory)},
                   {"sigma2_analytic", num(b.sigma2_analytic)},
                   {"sigma2_discrete", num(b.sigma2_discrete)},
                   {"mean_used", num(b.mean_used)},
                   {"mean_theory", num(b.mean_theory)},
                   {"mean_discrete", num(b.mean_discrete)},
                   {"discretization_bias", num(b.discretization_bias)},
                   {"mean_M", num(b.mean_M)},
                   {"se_M", num(b.se_M)},
                   {"var_empirical", num(b.var_empirical)},
                   {"mean_Y", num(b.mean_Y)},
                   {"var_Y", num(b.var_Y)},
                   {"mean_Ym", num(b.mean_Ym)},
                   {"var_Ym", num(b.var_Ym)},
                   {"has_tests", b.has_tests},
                   {"ks_stat", num(b.ks_stat)},
                   {"ks_p", num(b.ks_p)},
                   {"ad_stat", num(b.ad_stat)},
                   {"ad_p", num(b.ad_p)},
                   {"reduction_gap", num(b.reduction_gap)},
                   {"gap_se", num(b.gap_se)},
                   {"failures", b.failures},
                   {"Y", b.Y},
                   {"Ym", b.Ym}};
  if (include_runtime) j["runtime_s"] = b.runtime_s;
  return j;
}

inline TBlock tblock_from_json(const nlohmann::json& j) {
  using detail::num_back;
  TBlock b;
  b.T = j.at("T").get<double>();
  b.t_index = j.at("t_index").get<std::uint32_t>();
  b.u = j.at("u").get<double>();
  b.nx = j.at("nx").get<int>();
  b.nt = j.at("nt").get<int>();
  b.points = j.at("points").get<std::size_t>();
  b.embedding_defect = j.at("embedding_defect").get<double>();
  b.sigma2_theory = num_back(j, "sigma2_theory");
  b.sigma2_analytic = num_back(j, "sigma2_analytic");
  b.sigma2_discrete = num_back(j, "sigma2_discrete");
  b.mean_used = num_back(j, "mean_used");
  b.mean_theory = num_back(j, "mean_theory");
  b.mean_discrete = num_back(j, "mean_discrete");
  b.discretization_bias = num_back(j, "discretization_bias");
  b.mean_M = num_back(j, "mean_M");
  b.se_M = num_back(j, "se_M");
  b.var_empirical = num_back(j, "var_empirical");
  b.mean_Y = num_back(j, "mean_Y");
  b.var_Y = num_back(j, "var_Y");
  b.mean_Ym = num_back(j, "mean_Ym");
  b.var_Ym = num_back(j, "var_Ym");
  b.has_tests = j.at("has_tests").get<bool>();
  b.ks_stat = num_back(j, "ks_stat");
  b.ks_p = num_back(j, "ks_p");
  b.ad_stat = num_back(j, "ad_stat");
  b.ad_p = num_back(j, "ad_p");
  b.reduction_gap = num_back(j, "reduction_gap");
  b.gap_se = num_back(j, "gap_se");
  b.failures = j.at("failures").get<std::size_t>();
  b.runtime_s = j.value("runtime_s", 0.0);
  b.Y = j.at("Y").get<std::vector<double>>();
  b.Ym = j.at("Ym").get<std::vector<double>>();
  return b;
}

inline nlohmann::json to_json(const ReplicateReport& r, bool include_runtime = true) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : r.blocks) blocks.push_back(to_json(b, include_runtime));
  return {{"kind", r.kind},
          {"config", r.config},
          {"verdict", r.verdict},
          {"regime", r.regime},
          {"regime_label", r.regime_label},
          {"gated", r.gated},
          {"partial", r.partial},
          {"denominator", r.denominator},
          {"gap_slope", detail::num(r.gap_slope)},
          {"gap_decreasing", r.gap_decreasing},
          {"gap_decreasing_slack", r.gap_decreasing_slack},
          {"note", r.note},
          {"blocks", blocks}};
}

inline ReplicateReport report_from_json(const nlohmann::json& j) {
  ReplicateReport r;
  try {
    r.kind = j.at("kind").get<std::string>();
    r.config = j.at("config");
    r.verdict = j.at("verdict").get<std::string>();
    r.regime = j.at("regime").get<std::string>();
    r.regime_label = j.at("regime_label").get<std::string>();
    r.gated = j.at("gated").get<bool>();
    r.partial = j.at("partial").get<bool>();
    r.denominator = j.at("denominator").get<std::string>();
    r.gap_slope = detail::num_back(j, "gap_slope");
    r.gap_decreasing = j.at("gap_decreasing").get<bool>();
    r.gap_decreasing_slack = j.at("gap_decreasing_slack").get<bool>();
    r.note = j.at("note").get<std::string>();
    for (const auto& b : j.at("blocks")) r.blocks.push_back(tblock_from_json(b));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("report JSON: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Experiment

namespace detail {

/// Var of the sphere Riemann sum dt sum_pixels w 1{T >= u}: pairwise sum over
/// (latitude a, latitude b, longitude offset, time lag), using longitude invariance.
inline double sphere_discrete_variance(const SphericalSpectrum& s, int L, const SphereGrid& g, int nt, double dt,
                                       double u, double sigma_L) {
  const int nl = g.n_lat, nlon = g.n_lon;
  std::vector<double> P(L + 1);
  double total = 0.0;
  for (int a = 0; a < nl; ++a)
    for (int b = a; b < nl; ++b) {
      const double wa = g.weights[std::size_t(a) * nlon], wb = g.weights[std::size_t(b) * nlon];
      const double mult = (a == b ? 1.0 : 2.0) * wa * wb * nlon;
      for (int k = 0; k < nlon; ++k) {
        const double c = std::clamp(std::cos(g.theta[a]) * std::cos(g.theta[b]) +
                                        std::sin(g.theta[a]) * std::sin(g.theta[b]) * std::cos(g.phi[k]),
                                    -1.0, 1.0);
        for (int l = 0; l <= L; ++l) P[l] = s.h(l) * gegenbauer_normalized(l, s.d, std::acos(c));
        for (int lag = 0; lag < nt; ++lag) {
          double cov = 0.0;
          for (int l = 0; l <= L; ++l) cov += P[l] * s.A[l][lag];
          cov /= unit_sphere_area(s.d);
          const double rho = std::clamp(cov / (sigma_L * sigma_L), -1.0, 1.0);
          total += mult * time_lag_count(nt, lag) * joint_exceed_excess(u / sigma_L, rho);
        }
      }
    }
  return total * dt * dt;
}

inline BodySpec body_for(int d, BodyShape shape) {
  if (shape == BodyShape::ball) return unit_ball_body(d);
  return d == 2 ? unit_square_body() : monte_carlo_cube_body(d);
}

inline double fourth_central(const std::vector<double>& x, double mean) {
  double s = 0.0;
  for (double v : x) s += std::pow(v - mean, 4);
  return s / double(x.size());
}

// One replicate: the raw functional and the Riemann sum of H_m.
struct RawPair {
  double M = kNaN, H = kNaN;
  bool ok = false;
};

}  // namespace detail

/// Simulates R replicates per T and fills the normalized statistics of one ladder entry.
inline TBlock run_ladder_entry(const ExperimentConfig& cfg, std::size_t i, const CovarianceModel& model,
                               const std::optional<BodySpec>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  TBlock b;
  b.T = cfg.T[i];
  b.t_index = std::uint32_t(i);
  b.u = threshold_at(cfg.threshold, b.T);
  const int m = cfg.m;
  const bool hermite_G = cfg.functional == "hermite";
  HermiteCoeffs J = indicator_coeffs(b.u, std::max(cfg.truncation, m));
  if (hermite_G) {
    // G = H_m: J_m = m!, every other coefficient 0.
    J.coeffs.assign(std::size_t(m) + 1, 0.0);
    J.coeffs[m] = factorial(m);
    J.truncation = m;
  }
  const std::size_t R = std::size_t(cfg.replicates);
  std::vector<detail::RawPair> raw(R);
  Normalizer norm;
  b.nt = cfg.nt_at(i);

  if (cfg.surrogate) {
    b.nx = cfg.nx;
    parallel_for(R, cfg.threads, [&](std::size_t r) {
      auto rng = replicate_stream(cfg.seed, b.t_index, std::uint32_t(r), 1);
      raw[r].M = rng.normal();
      raw[r].H = raw[r].M;
      raw[r].ok = true;
    });
    norm = {0.0, 1.0, "surrogate N(0,1)"};
  } else if (cfg.space == SpaceKind::euclidean) {
    b.nx = cfg.nx;
    const GridSpec g = make_grid(cfg.d, cfg.body, cfg.gamma, b.T, cfg.nx, b.nt);
    b.points = g.n_points();
    b.discretization_bias = g.discretization_bias();
    b.mean_discrete = J[0] * g.total_measure();
    b.mean_theory = J[0] * g.body_measure() * b.T;
    std::function<std::vector<double>(PhiloxStream&)> draw;
    std::shared_ptr<const ExactSampler> exact;
    std::shared_ptr<const CirculantSampler> circ;
    if (cfg.generator == Generator::exact) {
      exact = std::make_shared<const ExactSampler>(model, g, cfg.exact_cap);
      draw = [&](PhiloxStream& rng) { return exact->draw(rng); };
    } else {
      circ = std::make_shared<const CirculantSampler>(model, g);
      b.embedding_defect = circ->defect();
      draw = [&](PhiloxStream& rng) { return circ->draw(rng); };
    }
    b.sigma2_discrete = hermite_G ? discrete_hermite_variance(g, model, m).value
                                  : discrete_sojourn_variance(g, model, b.u).value;
    if (body) {
      const auto tn = theorem_normalizer(J, m, b.T, *body, cfg.gamma, model);
      b.sigma2_analytic = tn.denominator * tn.denominator;
      if (cfg.denominator == DenominatorKind::analytic) norm = tn;
    }
    if (cfg.denominator == DenominatorKind::discrete) norm = {b.mean_discrete, std::sqrt(b.sigma2_discrete), "discrete pairwise sum"};
    parallel_for(R, cfg.threads, [&](std::size_t r) {
      auto rng = replicate_stream(cfg.seed, b.t_index, std::uint32_t(r), 0);
      try {
        GridField f;
        f.grid = g;
        f.values = draw(rng);
        const double H = hermite_sum(f, m);
        raw[r] = {hermite_G ? H : minkowski_m1(f, b.u).raw, H, true};
      } catch (const Error&) {
        raw[r].ok = false;
      }
    });
  } else {
    const int L = cfg.sphere.L;
    std::vector<double> taus;
    for (int k = 0; k < b.nt; ++k) taus.push_back(k * (b.T / b.nt));
    const auto spec = spectrum_from_model(model, 3, L, taus);
    const SphereSampler sampler(spec, L, make_sphere_grid(cfg.sphere.n_lat, cfg.sphere.n_lon), b.nt);
    b.nx = cfg.sphere.n_lat;
    b.points = sampler.grid().n_pix() * std::size_t(b.nt);
    const double sigma_L = std::sqrt(spec.partial_variance(L, 0));
    b.mean_discrete = 4.0 * pi * b.T * normal_sf(b.u / sigma_L);
    b.mean_theory = 4.0 * pi * b.T * J[0];
    b.discretization_bias = spec.tail_bound(L);
    const auto tn = sphere_theorem_normalizer(b.u, 3, b.T, model);
    b.sigma2_analytic = tn.denominator * tn.denominator;
    if (cfg.denominator == DenominatorKind::analytic) {
      norm = tn;
    } else {
      b.sigma2_discrete =
          detail::sphere_discrete_variance(spec, L, sampler.grid(), b.nt, b.T / b.nt, b.u, sigma_L);
      norm = {b.mean_discrete, std::sqrt(b.sigma2_discrete), "discrete pairwise sum (sphere)"};
    }
    const auto& grid = sampler.grid();
    parallel_for(R, cfg.threads, [&](std::size_t r) {
      auto rng = replicate_stream(cfg.seed, b.t_index, std::uint32_t(r), 0);
      try {
        const auto f = sampler.sample(rng, cfg.seed);
        double H = 0.0;
        for (int t = 0; t < f.nt; ++t)
          for (std::size_t p = 0; p < grid.n_pix(); ++p) H += grid.weights[p] * hermite(m, f.at(p, t));
        raw[r] = {sphere_sojourn(f, b.u).raw, H * f.dt, true};
      } catch (const Error&) {
        raw[r].ok = false;
      }
    });
  }

  b.sigma2_theory = norm.denominator * norm.denominator;
  b.mean_used = norm.mean;
  require(norm.denominator > 0 && std::isfinite(norm.denominator), ErrorKind::numeric,
          "experiment: non-positive denominator (" + norm.label + ")");
  const double scale_m = cfg.surrogate ? 1.0 : J[m] / factorial(m);
  std::vector<double> M, gap;
  for (const auto& p : raw) {
    if (!p.ok) {
      ++b.failures;
      continue;
    }
    M.push_back(p.M);
    b.Y.push_back((p.M - norm.mean) / norm.denominator);
    b.Ym.push_back(scale_m * p.H / norm.denominator);
    gap.push_back(b.Y.back() - b.Ym.back());
  }
  if (!M.empty()) {
    const auto mm = sample_moments(M), my = sample_moments(b.Y), mym = sample_moments(b.Ym), mg = sample_moments(gap);
    b.mean_M = mm.mean;
    b.se_M = mm.se_mean;
    b.var_empirical = M.size() > 1 ? mm.variance : kNaN;
    b.mean_Y = my.mean;
    b.var_Y = M.size() > 1 ? my.variance : kNaN;
    b.mean_Ym = mym.mean;
    b.var_Ym = M.size() > 1 ? mym.variance : kNaN;
    if (gap.size() > 1) {
      b.reduction_gap = mg.variance;
      const double mu4 = detail::fourth_central(gap, mg.mean);
      b.gap_se = std::sqrt(std::max(mu4 - mg.variance * mg.variance, 0.0) / double(gap.size()));
    }
  }
  if (b.Y.size() >= kMinTestSamples) {
    const auto nt = normality_tests(b.Y);
    b.has_tests = true;
    b.ks_stat = nt.ks_stat;
    b.ks_p = nt.ks_p;
    b.ad_stat = nt.ad_stat;
    b.ad_p = nt.ad_p;
  }
  b.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return b;
}

namespace detail {

inline ReplicateReport run_experiment(const ExperimentConfig& cfg, const std::string& kind) {
  ReplicateReport rep;
  rep.kind = kind;
  rep.config = to_json(cfg);
  rep.denominator = cfg.surrogate ? "surrogate" : to_string(cfg.denominator);
  const CovarianceModel model = cfg.model();
  const int regime_d = cfg.space == SpaceKind::sphere ? 3 : cfg.d;
  try {
    const auto lrd = check_lrd_conditions(model, cfg.m, cfg.space == SpaceKind::sphere ? 0.0 : cfg.gamma, regime_d);
    rep.verdict = to_string(lrd.verdict);
    rep.regime = to_string(lrd.regime);
  } catch (const Error&) {
    rep.verdict = "indeterminate";
  }
  if (!cfg.surrogate && cfg.threshold.moving()) {
    const auto check = check_threshold(cfg.threshold, model, cfg.m, cfg.gamma, regime_d);
    require_admissible(check);
  }
  std::optional<BodySpec> body;
  if (!cfg.surrogate && cfg.space == SpaceKind::euclidean &&
      (cfg.denominator == DenominatorKind::analytic || kind == "reduction"))
    body = body_for(cfg.d, cfg.body);
  for (std::size_t i = 0; i < cfg.T.size(); ++i) rep.blocks.push_back(run_ladder_entry(cfg, i, model, body));
  std::size_t failures = 0;
  for (const auto& b : rep.blocks) failures += b.failures;
  rep.partial = double(failures) > 0.01 * double(cfg.replicates) * double(cfg.T.size());
  return rep;
}

}  // namespace detail

/// Normalized sojourn statistics and normality tests for every T of the ladder.
inline ReplicateReport run_clt_experiment(const ExperimentConfig& cfg) { return detail::run_experiment(cfg, "clt"); }

/// Empirical Var(Y_T - Y_{m,T}) across the ladder and its trend.
inline ReplicateReport run_reduction_check(const ExperimentConfig& cfg) {
  auto rep = detail::run_experiment(cfg, "reduction");
  if (rep.verdict != "accepted") {
    rep.regime_label = "outside the LRD regime";
    rep.gated = false;
  } else {
    rep.regime_label = "long-range dependent (LRD conditions accepted)";
  }
  std::vector<double> Ts, gaps;
  bool dec = rep.blocks.size() > 1, dec_slack = dec;
  for (std::size_t i = 0; i < rep.blocks.size(); ++i) {
    const auto& b = rep.blocks[i];
    if (!(b.reduction_gap > 0)) continue;
    Ts.push_back(b.T);
    gaps.push_back(b.reduction_gap);
    if (i > 0) {
      const auto& a = rep.blocks[i - 1];
      dec = dec && b.reduction_gap < a.reduction_gap;
      dec_slack = dec_slack && b.reduction_gap < a.reduction_gap + 2.0 * std::hypot(a.gap_se, b.gap_se);
    }
  }
  rep.gap_decreasing = dec;
  rep.gap_decreasing_slack = dec_slack;
  if (Ts.size() >= 2) rep.gap_slope = loglog_slope(Ts, gaps);
  return rep;
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

inline std::string csv_num(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  require(bool(os), ErrorKind::io, "cannot write " + p.string());
  return os;
}

struct Series {
  std::vector<double> x, y;
  std::string label;
  bool points = false;
};

// Minimal vector plot: axes with min/max labels, one polyline (or dot cloud) per series.
inline std::string svg_plot(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                            const std::string& ylabel, bool identity = false) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
  if (!(x1 > x0)) x0 -= 1, x1 += 1;
  if (!(y1 > y0)) y0 -= 1, y1 += 1;
  const double W = 480, H = 360, pad = 50;
  auto X = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
  auto Y = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
     << "</text>\n";
  os << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << H / 2 << ")\">" << ylabel
     << "</text>\n";
  os << "<text x=\"" << pad << "\" y=\"" << H - pad + 15 << "\" font-size=\"10\">" << x0 << "</text>\n";
  os << "<text x=\"" << W - pad << "\" y=\"" << H - pad + 15 << "\" font-size=\"10\" text-anchor=\"end\">" << x1
     << "</text>\n";
  os << "<text x=\"" << pad - 4 << "\" y=\"" << H - pad << "\" font-size=\"10\" text-anchor=\"end\">" << y0 << "</text>\n";
  os << "<text x=\"" << pad - 4 << "\" y=\"" << pad + 4 << "\" font-size=\"10\" text-anchor=\"end\">" << y1 << "</text>\n";
  if (identity) {
    const double a = std::max(x0, y0), c = std::min(x1, y1);
    if (c > a)
      os << "<line x1=\"" << X(a) << "\" y1=\"" << Y(a) << "\" x2=\"" << X(c) << "\" y2=\"" << Y(c)
         << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* col = colors[k % 6];
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"1.5\" fill=\"" << col << "\"/>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
      os << "\"/>\n";
    }
    os << "<text x=\"" << W - pad - 4 << "\" y=\"" << pad + 14 * (k + 1) << "\" font-size=\"11\" text-anchor=\"end\" fill=\""
       << col << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace detail

/// `T,sigma2_theory,var_empirical,ks_stat,ks_p,reduction_gap`; absent values are empty fields.
inline std::string summary_csv(const ReplicateReport& r) {
  using detail::csv_num;
  std::string out = "T,sigma2_theory,var_empirical,ks_stat,ks_p,reduction_gap\n";
  for (const auto& b : r.blocks)
    out += csv_num(b.T) + ',' + csv_num(b.sigma2_theory) + ',' + csv_num(b.var_empirical) + ',' + csv_num(b.ks_stat) +
           ',' + csv_num(b.ks_p) + ',' + csv_num(b.reduction_gap) + '\n';
  return out;
}

/// `quantile_theoretical,quantile_empirical` rows for one sample.
inline std::string qq_csv(const std::vector<double>& sample) {
  std::string out = "quantile_theoretical,quantile_empirical\n";
  for (const auto& [q, x] : qq_points(sample)) out += detail::csv_num(q) + ',' + detail::csv_num(x) + '\n';
  return out;
}

struct ExportPaths {
  std::filesystem::path report_json, summary_csv;
  std::vector<std::filesystem::path> qq_csv;
  std::filesystem::path qq_svg, variance_svg;
};

/// Writes report.json, summary.csv, qq_T<i>.csv per ladder entry, qq.svg and variance_growth.svg into `dir`.
inline ExportPaths export_report(const ReplicateReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  ExportPaths p;
  p.report_json = dir / "report.json";
  p.summary_csv = dir / "summary.csv";
  p.qq_svg = dir / "qq.svg";
  p.variance_svg = dir / "variance_growth.svg";
  detail::open_out(p.report_json) << to_json(r).dump(2) << '\n';
  detail::open_out(p.summary_csv) << summary_csv(r);
  std::vector<detail::Series> qq;
  detail::Series emp{{}, {}, "empirical Var M", false}, th{{}, {}, "sigma2 theory", false};
  for (const auto& b : r.blocks) {
    const auto path = dir / ("qq_T" + std::to_string(b.t_index) + ".csv");
    detail::open_out(path) << qq_csv(b.Y);
    p.qq_csv.push_back(path);
    detail::Series s;
    s.points = true;
    s.label = "T=" + detail::csv_num(b.T);
    for (const auto& [q, x] : qq_points(b.Y)) {
      s.x.push_back(q);
      s.y.push_back(x);
    }
    qq.push_back(std::move(s));
    if (b.T > 0 && b.var_empirical > 0) {
      emp.x.push_back(std::log10(b.T));
      emp.y.push_back(std::log10(b.var_empirical));
    }
    if (b.T > 0 && b.sigma2_theory > 0) {
      th.x.push_back(std::log10(b.T));
      th.y.push_back(std::log10(b.sigma2_theory));
    }
  }
  detail::open_out(p.qq_svg) << detail::svg_plot(qq, "Normal QQ plot of Y_T", "N(0,1) quantile", "empirical quantile", true);
  detail::open_out(p.variance_svg) << detail::svg_plot({emp, th}, "Variance growth", "log10 T", "log10 variance");
  return p;
}

}  // namespace lrdf
