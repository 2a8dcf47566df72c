#pragma once

// Spatiotemporal covariance families C(z, tau), special functions they need,
// and the parameter-level long-range-dependence classification.

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <string>
#include <variant>

#include "core.hpp"
#include "quadrature.hpp"

namespace lrdf {

// ---------------------------------------------------------------------------
// Special functions

struct MlEnvelope {
  double lower, upper;
};

/// Two-sided bound on E_nu(-x) for nu in (0,1).
inline MlEnvelope mittag_leffler_envelope(double nu, double x) {
  return {1.0 / (1.0 + std::tgamma(1.0 - nu) * x), 1.0 / (1.0 + x / std::tgamma(1.0 + nu))};
}

/// E_nu(-x) for 0 < nu <= 1, x >= 0.
///
/// Power series while t = x^{1/nu} <= 7 (terms stay below e^7, so at most ~3
/// digits are lost to cancellation); otherwise the integral representation
///   E_nu(-x) = sin(nu pi)/(nu pi) * int_0^inf exp(-t s^{1/nu}) / (s^2 + 2 s cos(nu pi) + 1) ds.
inline double mittag_leffler_neg(double nu, double x) {
  require(nu > 0.0 && nu <= 1.0, ErrorKind::domain, "mittag_leffler_neg: nu must lie in (0,1]");
  require(x >= 0.0, ErrorKind::domain, "mittag_leffler_neg: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (nu == 1.0) return std::exp(-x);
  const double t = std::pow(x, 1.0 / nu);
  if (t <= 7.0) {
    double sum = 1.0;
    const double lx = std::log(x);
    for (int k = 1; k < 5000; ++k) {
      const double mag = std::exp(k * lx - std::lgamma(nu * k + 1.0));
      sum += (k & 1) ? -mag : mag;
      if (mag < 1e-17 * std::max(std::abs(sum), 1e-300) && nu * k > t + 2.0) break;
    }
    return sum;
  }
  const double c = std::cos(nu * pi);
  const double upper = std::pow(50.0 / t, nu);
  auto f = [&](double s) { return std::exp(-t * std::pow(s, 1.0 / nu)) / (s * s + 2.0 * s * c + 1.0); };
  std::vector<double> breaks;
  if (c < 0.0 && -c < upper) breaks.push_back(-c);
  auto r = integrate(f, 0.0, upper, {1e-17, 1e-13, 4000}, breaks);
  return std::sin(nu * pi) / (nu * pi) * r.value;
}

/// Matern correlation in the squared-distance argument u: phi(0) = 1.
inline double matern_phi(double c, double nu, double u) {
  require(c > 0 && nu > 0, ErrorKind::domain, "matern_phi: c and nu must be positive");
  require(u >= 0, ErrorKind::domain, "matern_phi: u must be nonnegative");
  const double x = c * std::sqrt(u);
  if (x == 0.0) return 1.0;
  if (x > 700.0) return 0.0;
  if (nu == 0.5) return std::exp(-x);
  const double logv = nu * std::log(x) + std::log(std::cyl_bessel_k(nu, x)) - (nu - 1) * std::log(2.0) - std::lgamma(nu);
  return std::min(std::exp(logv), 1.0);
}

/// Isotropic spectral density of the Matern correlation in R^d, normalized so that
/// int_{R^d} f(lambda) d lambda = 1 (i.e. C(h) = int e^{i<lambda,h>} f(lambda) d lambda).
inline double matern_spectral(double c, double nu, int d, double lambda) {
  require(c > 0 && nu > 0 && d >= 1, ErrorKind::domain, "matern_spectral: invalid parameters");
  require(lambda >= 0, ErrorKind::domain, "matern_spectral: lambda must be nonnegative");
  const double logM = 2 * nu * std::log(c) + std::lgamma(nu + 0.5 * d) - 0.5 * d * std::log(pi) - std::lgamma(nu);
  return std::exp(logM - (nu + 0.5 * d) * std::log(c * c + lambda * lambda));
}

// ---------------------------------------------------------------------------
// Model families

/// Slowly varying modulation (log(e + x))^kappa; kappa <= 0 keeps it bounded by 1.
inline double slowly_varying(double kappa, double x) {
  return kappa == 0.0 ? 1.0 : std::pow(std::log(std::numbers::e + x), kappa);
}

/// C(z,tau) = (1+z^2)^{-alpha_s/2} L(z) * (1+tau^2)^{-A/2} L1(tau).
struct Separable {
  double alpha_s = 1.0;  // spatial exponent
  double kappa_s = 0.0;
  double A = 0.4;  // temporal exponent
  double kappa_t = 0.0;

  double space(double z) const { return std::pow(1.0 + z * z, -0.5 * alpha_s) * slowly_varying(kappa_s, z); }
  double time(double tau) const { return std::pow(1.0 + tau * tau, -0.5 * A) * slowly_varying(kappa_t, tau); }
};

/// psi(tau^2) = (1 + a tau^{2 alpha})^beta shared by the Gneiting families.
struct GneitingPsi {
  double a = 1.0, alpha = 0.5, beta = 0.5;
  double operator()(double tau) const { return std::pow(1.0 + a * std::pow(tau, 2.0 * alpha), beta); }
};

struct GneitingML {
  double nu = 0.5, gamma_tilde = 0.5;
  GneitingPsi psi;
  double sigma2 = 1.0;
  int d = 2;
  double phi(double s) const { return mittag_leffler_neg(nu, std::pow(s, gamma_tilde)); }
};

struct GneitingRational {
  double c_tilde = 1.0, gamma_tilde = 0.5, nu = 1.0;
  GneitingPsi psi;
  double sigma2 = 1.0;
  int d = 2;
  double phi(double s) const { return std::pow(1.0 + c_tilde * std::pow(s, gamma_tilde), -nu); }
};

struct GneitingMatern {
  double c = 1.0, nu = 0.5;
  GneitingPsi psi;
  double sigma2 = 1.0;
  int d = 2;
  double phi(double s) const { return matern_phi(c, nu, s); }
};

/// Weak-dependence control: C = exp(-theta_s z - theta_t tau).
struct ExponentialBaseline {
  double theta_s = 1.0, theta_t = 1.0;
};

/// Test hook: C == 1 (rank-one field).
struct ConstantOne {};
/// Test hook: C = 1 at the origin and 0 elsewhere.
struct OriginOnly {};

using ModelVariant =
    std::variant<Separable, GneitingML, GneitingRational, GneitingMatern, ExponentialBaseline, ConstantOne, OriginOnly>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace detail {

template <class G>
double gneiting_eval(const G& g, double z, double tau) {
  const double p = g.psi(tau);
  return g.sigma2 * g.phi(z * z / p) / std::pow(p, 0.5 * g.d);
}

inline void check_psi(const GneitingPsi& p, const std::string& who) {
  require(p.a > 0, ErrorKind::parameter, who + ": a must be positive");
  require(p.alpha > 0 && p.alpha <= 1, ErrorKind::parameter, who + ": alpha must lie in (0,1]");
  require(p.beta > 0 && p.beta <= 1, ErrorKind::parameter, who + ": beta must lie in (0,1]");
}

}  // namespace detail

class CovarianceModel {
 public:
  CovarianceModel() : v_(ExponentialBaseline{}) {}
  template <class M, class = std::enable_if_t<!std::is_same_v<std::decay_t<M>, CovarianceModel>>>
  CovarianceModel(M m) : v_(std::move(m)) {
    validate();
  }

  const ModelVariant& variant() const { return v_; }
  template <class M>
  bool is() const {
    return std::holds_alternative<M>(v_);
  }
  template <class M>
  const M& as() const {
    return std::get<M>(v_);
  }

  std::string family() const {
    return std::visit(overloaded{[](const Separable&) { return "separable"; },
                                 [](const GneitingML&) { return "gneiting_ml"; },
                                 [](const GneitingRational&) { return "gneiting_rational"; },
                                 [](const GneitingMatern&) { return "gneiting_matern"; },
                                 [](const ExponentialBaseline&) { return "exponential"; },
                                 [](const ConstantOne&) { return "constant_one"; },
                                 [](const OriginOnly&) { return "origin_only"; }},
                      v_);
  }

  bool is_test_hook() const { return is<ConstantOne>() || is<OriginOnly>(); }

  double sigma2() const {
    return std::visit(overloaded{[](const GneitingML& g) { return g.sigma2; },
                                 [](const GneitingRational& g) { return g.sigma2; },
                                 [](const GneitingMatern& g) { return g.sigma2; }, [](const auto&) { return 1.0; }},
                      v_);
  }

  /// C(z, tau) for z, tau >= 0.
  double operator()(double z, double tau) const {
    return std::visit(
        overloaded{[&](const Separable& s) { return s.space(z) * s.time(tau); },
                   [&](const GneitingML& g) { return detail::gneiting_eval(g, z, tau); },
                   [&](const GneitingRational& g) { return detail::gneiting_eval(g, z, tau); },
                   [&](const GneitingMatern& g) { return detail::gneiting_eval(g, z, tau); },
                   [&](const ExponentialBaseline& e) { return std::exp(-e.theta_s * z - e.theta_t * tau); },
                   [](const ConstantOne&) { return 1.0; },
                   [&](const OriginOnly&) { return (z == 0.0 && tau == 0.0) ? 1.0 : 0.0; }},
        v_);
  }

  void validate() const {
    std::visit(overloaded{
                   [](const Separable& s) {
                     require(s.alpha_s >= 0 && s.A >= 0, ErrorKind::parameter,
                             "separable: exponents must be nonnegative");
                     require(s.kappa_s <= 0 && s.kappa_t <= 0, ErrorKind::parameter,
                             "separable: slowly varying exponents must be <= 0 (bounded modulation)");
                   },
                   [](const GneitingML& g) {
                     require(g.nu > 0 && g.nu <= 1, ErrorKind::parameter, "gneiting_ml: nu must lie in (0,1]");
                     require(g.gamma_tilde > 0 && g.gamma_tilde <= 1, ErrorKind::parameter,
                             "gneiting_ml: gamma_tilde must lie in (0,1]");
                     require(g.sigma2 > 0 && g.d >= 1, ErrorKind::parameter, "gneiting_ml: need sigma2 > 0, d >= 1");
                     detail::check_psi(g.psi, "gneiting_ml");
                   },
                   [](const GneitingRational& g) {
                     require(g.c_tilde > 0 && g.nu > 0, ErrorKind::parameter,
                             "gneiting_rational: c_tilde and nu must be positive");
                     require(g.gamma_tilde > 0 && g.gamma_tilde <= 1, ErrorKind::parameter,
                             "gneiting_rational: gamma_tilde must lie in (0,1]");
                     require(g.sigma2 > 0 && g.d >= 1, ErrorKind::parameter,
                             "gneiting_rational: need sigma2 > 0, d >= 1");
                     detail::check_psi(g.psi, "gneiting_rational");
                   },
                   [](const GneitingMatern& g) {
                     require(g.c > 0 && g.nu > 0, ErrorKind::parameter, "gneiting_matern: c and nu must be positive");
                     require(g.sigma2 > 0 && g.d >= 1, ErrorKind::parameter,
                             "gneiting_matern: need sigma2 > 0, d >= 1");
                     detail::check_psi(g.psi, "gneiting_matern");
                   },
                   [](const ExponentialBaseline& e) {
                     require(e.theta_s > 0 && e.theta_t > 0, ErrorKind::parameter,
                             "exponential: theta_s and theta_t must be positive");
                   },
                   [](const auto&) {}},
               v_);
  }

 private:
  ModelVariant v_;
};

inline double eval_cov(const CovarianceModel& model, double z, double tau) {
  require(z >= 0 && tau >= 0, ErrorKind::domain, "eval_cov: z and tau must be nonnegative");
  return model(z, tau);
}

/// C^m computed through logarithms so large m underflows gracefully to 0.
inline double cov_power(const CovarianceModel& model, double z, double tau, int m) {
  const double c = model(z, tau);
  if (m == 1) return c;
  if (c <= 0.0) return c == 0.0 ? 0.0 : std::pow(c, m);
  return std::exp(m * std::log(c));
}

// ---------------------------------------------------------------------------
// Long-range-dependence classification

enum class Verdict { accepted, rejected, indeterminate };
enum class Regime { lrd_time_only, lrd_space_time, weak_dependence, unclassified };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accepted: return "accepted";
    case Verdict::rejected: return "rejected";
    default: return "indeterminate";
  }
}

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::lrd_time_only: return "LRD-time-only";
    case Regime::lrd_space_time: return "LRD-space-time";
    case Regime::weak_dependence: return "weak-dependence";
    default: return "unclassified";
  }
}

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool empty() const { return !(hi > lo); }
  bool contains(double x) const { return x > lo && x < hi; }
};

struct LrdCheckResult {
  Verdict verdict = Verdict::indeterminate;
  Interval delta1, delta2;
  Regime regime = Regime::unclassified;
  std::string explanation;
};

namespace detail {

inline LrdCheckResult gneiting_rule(double gamma_eff, const GneitingPsi& psi, int m, double gamma,
                                    const std::string& label) {
  LrdCheckResult r;
  const double ab = psi.alpha * psi.beta;
  if (m != 1) {
    r.explanation = label + ": no sufficient condition is available for Hermite rank m >= 2";
    return r;
  }
  if (!(gamma > ab) || !(gamma_eff < 1.0 / (2.0 * (gamma - ab)))) {
    std::ostringstream os;
    os << label << ": sufficient condition gamma > alpha*beta and gamma_tilde_eff < 1/(2(gamma - alpha*beta)) "
       << "not met (gamma=" << gamma << ", alpha*beta=" << ab << ", gamma_tilde_eff=" << gamma_eff
       << "); the family is not classified outside it";
    r.explanation = os.str();
    return r;
  }
  r.verdict = Verdict::accepted;
  r.regime = Regime::lrd_space_time;
  r.delta2 = {0.0, 1.0 - ab / gamma};
  r.delta1 = {0.0, std::clamp(1.0 - 2.0 * gamma_eff * (gamma - 2.0 * ab), 0.0, 1.0)};
  if (r.delta1.empty()) {
    r.verdict = Verdict::indeterminate;
    r.regime = Regime::unclassified;
    r.explanation = label + ": sufficient condition met but the delta1 interval is empty";
    return r;
  }
  r.explanation = label + ": sufficient condition gamma > alpha*beta, gamma_tilde_eff < 1/(2(gamma - alpha*beta)) holds";
  return r;
}

}  // namespace detail

inline LrdCheckResult check_lrd_conditions(const CovarianceModel& model, int m, double gamma, int d) {
  require(m >= 1, ErrorKind::domain, "check_lrd_conditions: m must be >= 1");
  require(gamma >= 0, ErrorKind::domain, "check_lrd_conditions: gamma must be >= 0");
  require(d >= 1, ErrorKind::domain, "check_lrd_conditions: d must be >= 1");
  return std::visit(
      overloaded{
          [&](const Separable& s) {
            LrdCheckResult r;
            std::ostringstream os;
            if (!(s.A > 0)) {
              r.verdict = Verdict::rejected;
              r.regime = Regime::unclassified;
              r.explanation = "separable: A = 0 gives no temporal decay (covariance does not vanish at infinity)";
              return r;
            }
            if (s.A >= 1.0 / m) {
              r.verdict = Verdict::rejected;
              r.regime = Regime::weak_dependence;
              os << "separable: A = " << s.A << " >= 1/m = " << 1.0 / m
                 << ": temporal covariance power is integrable (weak dependence in time)";
              r.explanation = os.str();
              return r;
            }
            r.delta1 = {0.0, 1.0 - m * s.A};
            if (gamma == 0.0) {
              r.verdict = Verdict::accepted;
              r.regime = Regime::lrd_time_only;
              r.delta2 = {0.0, 1.0};
              os << "separable: 0 < A < 1/m with gamma = 0 (LRD in time); delta1 < 1 - mA = " << 1.0 - m * s.A;
              r.explanation = os.str();
              return r;
            }
            if (!(s.alpha_s > 0) || s.alpha_s >= double(d) / m) {
              r.verdict = Verdict::rejected;
              r.regime = Regime::weak_dependence;
              r.delta1 = {};
              os << "separable: gamma > 0 requires 0 < alpha_s < d/m = " << double(d) / m << " (got alpha_s = "
                 << s.alpha_s << ")";
              r.explanation = os.str();
              return r;
            }
            r.verdict = Verdict::accepted;
            r.regime = Regime::lrd_space_time;
            r.delta2 = {0.0, 1.0 - m * s.alpha_s / d};
            os << "separable: LRD in time and space; delta1 < " << r.delta1.hi << ", delta2 < " << r.delta2.hi;
            r.explanation = os.str();
            return r;
          },
          [&](const GneitingML& g) {
            return detail::gneiting_rule(g.gamma_tilde, g.psi, m, gamma, "gneiting_ml");
          },
          [&](const GneitingRational& g) {
            return detail::gneiting_rule(g.gamma_tilde * g.nu, g.psi, m, gamma, "gneiting_rational");
          },
          [&](const GneitingMatern&) {
            LrdCheckResult r;
            r.explanation = "gneiting_matern: no parameter-level classification available";
            return r;
          },
          [&](const ExponentialBaseline&) {
            LrdCheckResult r;
            r.verdict = Verdict::rejected;
            r.regime = Regime::weak_dependence;
            r.explanation = "exponential: integrable covariance (weak dependence)";
            return r;
          },
          [&](const auto&) {
            LrdCheckResult r;
            r.verdict = Verdict::rejected;
            r.explanation = "test hook: violates decay at infinity; excluded from limit experiments";
            return r;
          }},
      model.variant());
}

namespace detail {

// sup_{tau >= tau0} f(tau) for a smooth function of tau: log-spaced scan with
// golden-section refinement around the best scan point.
template <class F>
double sup_over_tau(F&& f, double tau0) {
  const int n = 400;
  const double lo = std::log(std::max(tau0, 1e-8)), hi = lo + std::log(1e8);
  double best = f(tau0), best_t = tau0;
  std::vector<double> ts(n + 1);
  for (int i = 0; i <= n; ++i) {
    ts[i] = std::exp(lo + (hi - lo) * i / n);
    if (ts[i] < tau0) ts[i] = tau0;
    const double v = f(ts[i]);
    if (v > best) best = v, best_t = ts[i];
  }
  auto it = std::find(ts.begin(), ts.end(), best_t);
  if (it == ts.end()) return best;
  const std::size_t k = std::size_t(it - ts.begin());
  double a = ts[k > 0 ? k - 1 : 0], b = ts[std::min<std::size_t>(k + 1, n)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a), f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 100 && (b - a) > 1e-12 * (1 + b); ++i) {
    if (f1 > f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = f(x2);
    }
  }
  return std::max({best, f1, f2});
}

}  // namespace detail

/// Upper bound of sup C over {tau >= T^beta1 or z >= T^{gamma beta2}}.
/// Covariances are nonincreasing in z, so the spatial part is the sup over tau
/// along the ray z = T^{gamma beta2}; the temporal part is C(0, T^beta1) for
/// families decreasing in tau at z = 0. With gamma = 0 the spatial window does
/// not grow, distances stay bounded, and only the temporal set is used.
inline double sup_cov_outside(const CovarianceModel& model, double T, double gamma, double beta1, double beta2) {
  require(T > 1, ErrorKind::domain, "sup_cov_outside: T must exceed 1");
  require(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1, ErrorKind::domain,
          "sup_cov_outside: beta1, beta2 must lie in (0,1)");
  const double tau0 = std::pow(T, beta1);
  double s = model(0.0, tau0);
  if (!model.is<Separable>() && !model.is<ExponentialBaseline>() && !model.is_test_hook())
    s = std::max(s, detail::sup_over_tau([&](double t) { return model(0.0, t); }, tau0));
  if (gamma > 0) {
    const double z0 = std::pow(T, gamma * beta2);
    s = std::max(s, detail::sup_over_tau([&](double t) { return model(z0, t); }, 0.0));
  }
  return std::max(s, 0.0);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json psi_json(const GneitingPsi& p) { return {{"a", p.a}, {"alpha", p.alpha}, {"beta", p.beta}}; }

inline nlohmann::json to_json(const CovarianceModel& m) {
  using nlohmann::json;
  json params = std::visit(
      overloaded{[](const Separable& s) {
                   return json{{"alpha_s", s.alpha_s}, {"kappa_s", s.kappa_s}, {"A", s.A}, {"kappa_t", s.kappa_t}};
                 },
                 [](const GneitingML& g) {
                   json j = psi_json(g.psi);
                   j.update({{"nu", g.nu}, {"gamma_tilde", g.gamma_tilde}, {"sigma2", g.sigma2}, {"d", g.d}});
                   return j;
                 },
                 [](const GneitingRational& g) {
                   json j = psi_json(g.psi);
                   j.update({{"c_tilde", g.c_tilde},
                             {"gamma_tilde", g.gamma_tilde},
                             {"nu", g.nu},
                             {"sigma2", g.sigma2},
                             {"d", g.d}});
                   return j;
                 },
                 [](const GneitingMatern& g) {
                   json j = psi_json(g.psi);
                   j.update({{"c", g.c}, {"nu", g.nu}, {"sigma2", g.sigma2}, {"d", g.d}});
                   return j;
                 },
                 [](const ExponentialBaseline& e) { return json{{"theta_s", e.theta_s}, {"theta_t", e.theta_t}}; },
                 [](const auto&) { return json::object(); }},
      m.variant());
  return {{"family", m.family()}, {"params", params}};
}

inline CovarianceModel model_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("family"), ErrorKind::config, "covariance model: missing 'family'");
  const std::string fam = j.at("family").get<std::string>();
  const nlohmann::json p = j.value("params", nlohmann::json::object());
  auto num = [&](const char* key, double def) {
    if (!p.contains(key)) return def;
    require(p.at(key).is_number(), ErrorKind::config, std::string("covariance model: '") + key + "' must be numeric");
    return p.at(key).get<double>();
  };
  auto psi = [&] { return GneitingPsi{num("a", 1.0), num("alpha", 0.5), num("beta", 0.5)}; };
  for (const auto& [key, _] : p.items()) {
    static const char* known[] = {"alpha_s", "kappa_s", "A",     "kappa_t", "nu",      "gamma_tilde", "a",
                                  "alpha",   "beta",    "sigma2", "d",      "c_tilde", "c",           "theta_s",
                                  "theta_t"};
    require(std::find(std::begin(known), std::end(known), key) != std::end(known), ErrorKind::config,
            "covariance model: unknown parameter '" + key + "'");
  }
  try {
    if (fam == "separable") return Separable{num("alpha_s", 1.0), num("kappa_s", 0.0), num("A", 0.4), num("kappa_t", 0.0)};
    if (fam == "gneiting_ml")
      return GneitingML{num("nu", 0.5), num("gamma_tilde", 0.5), psi(), num("sigma2", 1.0), int(num("d", 2))};
    if (fam == "gneiting_rational")
      return GneitingRational{num("c_tilde", 1.0), num("gamma_tilde", 0.5), num("nu", 1.0), psi(), num("sigma2", 1.0),
                              int(num("d", 2))};
    if (fam == "gneiting_matern")
      return GneitingMatern{num("c", 1.0), num("nu", 0.5), psi(), num("sigma2", 1.0), int(num("d", 2))};
    if (fam == "exponential") return ExponentialBaseline{num("theta_s", 1.0), num("theta_t", 1.0)};
    if (fam == "constant_one") return ConstantOne{};
    if (fam == "origin_only") return OriginOnly{};
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("covariance model: ") + e.what());
  }
  fail(ErrorKind::config, "covariance model: unknown family '" + fam + "'");
}

}  // namespace lrdf
