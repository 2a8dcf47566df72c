#pragma once

// Restriction of a spatiotemporal field to the unit sphere S^{d-1}.
//
// Conventions: with G_l the Gegenbauer polynomial normalized by G_l(1) = 1 and
// h(l,d) the multiplicity of degree-l harmonics,
//   C(2 sin(theta/2), tau) = sum_l h(l,d) A_l(tau) G_l(cos theta) / |S_{d-1}|,
// and for a bimeasure G(dlambda, dmu)
//   A_l(tau) = 2^d Gamma(d/2) pi^{d/2} int int cos(mu tau) [J_{l+(d-2)/2}(lambda)/lambda^{(d-2)/2}]^2 G.
// Synthesis is implemented for d = 3 with real spherical harmonics on a
// Gauss-Legendre latitude by uniform longitude grid.

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gegenbauer.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/special_functions/spherical_harmonic.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "covariance.hpp"
#include "field_sim.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace lrdf {

/// h(l,d) = (2l+d-2)(l+d-3)!/((d-2)! l!); h(0,2) = 1, h(l,2) = 2.
inline double sphere_multiplicity(int l, int d) {
  require(l >= 0 && d >= 2, ErrorKind::domain, "sphere_multiplicity: need l >= 0, d >= 2");
  if (d == 2) return l == 0 ? 1.0 : 2.0;
  return (2.0 * l + d - 2) / (d - 2) * boost::math::binomial_coefficient<double>(unsigned(l + d - 3), unsigned(l));
}

/// G_l(cos theta) with G_l(1) = 1: cos(l theta) for d = 2, P_l for d = 3.
inline double gegenbauer_normalized(int l, int d, double theta) {
  if (d == 2) return std::cos(l * theta);
  const double x = std::cos(theta);
  if (d == 3) return boost::math::legendre_p(l, x);
  const double a = 0.5 * (d - 2);
  return boost::math::gegenbauer(unsigned(l), a, x) / boost::math::gegenbauer(unsigned(l), a, 1.0);
}

/// J_{l+(d-2)/2}(x) / x^{(d-2)/2}, continuous at x = 0.
inline double bessel_ratio(int l, int d, double x) {
  const double p = 0.5 * (d - 2);
  if (x == 0.0) return l == 0 ? 1.0 / (std::pow(2.0, p) * std::tgamma(0.5 * d)) : 0.0;
  return boost::math::cyl_bessel_j(l + p, x) / std::pow(x, p);
}

inline double spectrum_prefactor(int d) { return std::pow(2.0, d) * std::tgamma(0.5 * d) * std::pow(pi, 0.5 * d); }

// ---------------------------------------------------------------------------
// Spectral measures

struct PointMass {
  double lambda = 0.0, mu = 0.0, weight = 0.0;
};

/// Bimeasure G(dlambda, dmu) on (0,inf)^2: a product of densities g(lambda) f(mu),
/// or finitely many point masses.
struct SpectralMeasure {
  enum class Kind { separable, point_masses };
  Kind kind = Kind::point_masses;
  std::function<double(double)> g, f;
  std::vector<PointMass> masses;
  double spatial_mass = 0.0, temporal_mass = 0.0;

  static SpectralMeasure separable(std::function<double(double)> g, std::function<double(double)> f) {
    SpectralMeasure m;
    m.kind = Kind::separable;
    m.g = std::move(g);
    m.f = std::move(f);
    const QuadOptions opt{1e-14, 1e-11, 4000};
    const auto rg = integrate_to_inf(m.g, 0.0, opt), rf = integrate_to_inf(m.f, 0.0, opt);
    require(rg.converged && rf.converged && std::isfinite(rg.value) && std::isfinite(rf.value), ErrorKind::domain,
            "spectral measure: total mass is not finite (divergent density)");
    m.spatial_mass = rg.value;
    m.temporal_mass = rf.value;
    return m;
  }

  static SpectralMeasure point_masses(std::vector<PointMass> pts) {
    SpectralMeasure m;
    m.kind = Kind::point_masses;
    for (const auto& p : pts)
      require(p.weight >= 0 && p.lambda >= 0 && p.mu >= 0 && std::isfinite(p.weight), ErrorKind::domain,
              "spectral measure: point masses need finite nonnegative weights and locations");
    m.masses = std::move(pts);
    return m;
  }

  double total_mass() const {
    if (kind == Kind::separable) return spatial_mass * temporal_mass;
    double s = 0;
    for (const auto& p : masses) s += p.weight;
    return s;
  }

  /// int cos(mu tau) f(mu) dmu (separable kind).
  double temporal_factor(double tau) const {
    if (tau == 0.0) return temporal_mass;
    const auto r = integrate_to_inf([&](double mu) { return std::cos(mu * tau) * f(mu); }, 0.0, {1e-14, 1e-11, 8000});
    return r.value;
  }
};

inline double angular_power_spectrum(const SpectralMeasure& m, int l, double tau, int d) {
  require(l >= 0 && d >= 2, ErrorKind::domain, "angular_power_spectrum: need l >= 0, d >= 2");
  const double pref = spectrum_prefactor(d);
  if (m.kind == SpectralMeasure::Kind::point_masses) {
    double s = 0;
    for (const auto& p : m.masses) {
      const double b = bessel_ratio(l, d, p.lambda);
      s += p.weight * std::cos(p.mu * tau) * b * b;
    }
    return pref * s;
  }
  const auto sp = integrate_to_inf(
      [&](double lam) {
        const double b = bessel_ratio(l, d, lam);
        return b * b * m.g(lam);
      },
      0.0, {1e-15, 1e-11, 8000});
  return pref * sp.value * m.temporal_factor(tau);
}

/// Covariance of the restriction at angle theta from the bimeasure representation.
inline double restricted_cov_direct(const SpectralMeasure& m, int d, double theta, double tau) {
  require(theta >= 0 && theta <= pi, ErrorKind::domain, "restricted_cov_direct: theta must lie in [0, pi]");
  const double r = 2.0 * std::sin(0.5 * theta);
  const double pref = std::pow(2.0, 0.5 * (d - 2) + 1.0) * std::tgamma(0.5 * d);
  if (m.kind == SpectralMeasure::Kind::point_masses) {
    double s = 0;
    for (const auto& p : m.masses) s += p.weight * std::cos(p.mu * tau) * bessel_ratio(0, d, p.lambda * r);
    return pref * s;
  }
  const auto sp = integrate_to_inf([&](double lam) { return bessel_ratio(0, d, lam * r) * m.g(lam); }, 0.0,
                                   {1e-15, 1e-11, 8000});
  return pref * sp.value * m.temporal_factor(tau);
}

/// Covariance of the restriction of a Euclidean model: C(2 sin(theta/2), tau).
inline double restricted_cov_direct(const CovarianceModel& model, double theta, double tau) {
  require(theta >= 0 && theta <= pi, ErrorKind::domain, "restricted_cov_direct: theta must lie in [0, pi]");
  return model(2.0 * std::sin(0.5 * theta), tau);
}

// ---------------------------------------------------------------------------
// Tabulated spectra

struct SphericalSpectrum {
  int d = 3;
  std::vector<double> taus;            // lag grid
  std::vector<std::vector<double>> A;  // A[l][j] = A_l(taus[j])
  double variance0 = std::numeric_limits<double>::quiet_NaN();  // C(0,0) of the untruncated field, if known

  int L() const { return int(A.size()) - 1; }
  double h(int l) const { return sphere_multiplicity(l, d); }
  /// sum_{l <= L} h(l,d) A_l(tau_j) / |S_{d-1}|: the truncated field's covariance at angle 0.
  double partial_variance(int L, std::size_t j = 0) const {
    double s = 0;
    for (int l = 0; l <= std::min(L, this->L()); ++l) s += h(l) * A[l][j];
    return s / unit_sphere_area(d);
  }
  /// sum_{l > L} h(l,d) A_l(0) / |S_{d-1}| (NaN when the untruncated variance is unknown).
  double tail_bound(int L) const { return std::max(variance0 - partial_variance(L, 0), 0.0); }
};

inline SphericalSpectrum spectrum_from_measure(const SpectralMeasure& m, int d, int L, const std::vector<double>& taus) {
  require(L >= 0 && !taus.empty(), ErrorKind::domain, "spectrum_from_measure: need L >= 0 and a tau grid");
  SphericalSpectrum s;
  s.d = d;
  s.taus = taus;
  s.A.assign(L + 1, std::vector<double>(taus.size()));
  for (int l = 0; l <= L; ++l)
    for (std::size_t j = 0; j < taus.size(); ++j) s.A[l][j] = angular_power_spectrum(m, l, taus[j], d);
  s.variance0 = 2.0 * m.total_mass();
  return s;
}

/// A_l(tau) = |S_{d-2}| int_0^pi C(2 sin(theta/2), tau) G_l(cos theta) sin^{d-2}(theta) dtheta
/// by composite Gauss-Legendre in theta (panels x order nodes).
inline SphericalSpectrum spectrum_from_model(const CovarianceModel& model, int d, int L, const std::vector<double>& taus,
                                             int panels = 16, int order = 32) {
  require(d >= 2 && L >= 0 && !taus.empty(), ErrorKind::domain, "spectrum_from_model: need d >= 2, L >= 0, taus");
  const auto rule = gauss_legendre(order);
  std::vector<double> theta, weight;
  for (int p = 0; p < panels; ++p) {
    const double a = pi * p / panels, b = pi * (p + 1) / panels;
    for (int k = 0; k < order; ++k) {
      theta.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k]);
      weight.push_back(0.5 * (b - a) * rule.weights[k] * std::pow(std::sin(theta.back()), d - 2));
    }
  }
  std::vector<std::vector<double>> G(L + 1, std::vector<double>(theta.size()));
  for (int l = 0; l <= L; ++l)
    for (std::size_t k = 0; k < theta.size(); ++k) G[l][k] = gegenbauer_normalized(l, d, theta[k]);
  const double area = unit_sphere_area(d - 1);
  SphericalSpectrum s;
  s.d = d;
  s.taus = taus;
  s.A.assign(L + 1, std::vector<double>(taus.size()));
  std::vector<double> c(theta.size());
  for (std::size_t j = 0; j < taus.size(); ++j) {
    for (std::size_t k = 0; k < theta.size(); ++k) c[k] = model(2.0 * std::sin(0.5 * theta[k]), taus[j]);
    for (int l = 0; l <= L; ++l) {
      double acc = 0;
      for (std::size_t k = 0; k < theta.size(); ++k) acc += weight[k] * c[k] * G[l][k];
      s.A[l][j] = area * acc;
    }
  }
  s.variance0 = model(0.0, 0.0);
  return s;
}

/// `l,tau,A` rows.
inline void write_spectrum_csv(const SphericalSpectrum& s, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "write_spectrum_csv: cannot open " + path);
  os.precision(17);
  os << "l,tau,A\n";
  for (int l = 0; l <= s.L(); ++l)
    for (std::size_t j = 0; j < s.taus.size(); ++j) os << l << ',' << s.taus[j] << ',' << s.A[l][j] << '\n';
  require(bool(os), ErrorKind::io, "write_spectrum_csv: write failed for " + path);
}

inline SphericalSpectrum load_spectrum_csv(const std::string& path, int d) {
  std::ifstream is(path);
  require(bool(is), ErrorKind::io, "load_spectrum_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);
  require(line == "l,tau,A", ErrorKind::io, "load_spectrum_csv: expected header l,tau,A in " + path);
  std::map<int, std::map<double, double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    rows[std::stoi(a)][std::stod(b)] = std::stod(c);
  }
  require(!rows.empty() && rows.begin()->first == 0, ErrorKind::io, "load_spectrum_csv: no rows starting at l = 0");
  SphericalSpectrum s;
  s.d = d;
  for (const auto& [tau, v] : rows.begin()->second) s.taus.push_back(tau);
  int expect = 0;
  for (const auto& [l, col] : rows) {
    require(l == expect++ && col.size() == s.taus.size(), ErrorKind::io,
            "load_spectrum_csv: every degree 0..L needs the same tau grid in " + path);
    std::vector<double> a;
    for (double tau : s.taus) {
      const auto it = col.find(tau);
      require(it != col.end(), ErrorKind::io, "load_spectrum_csv: tau grids differ between degrees in " + path);
      a.push_back(it->second);
    }
    s.A.push_back(std::move(a));
  }
  return s;
}

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;
  bool tail_warning = false;  // tail bound above the requested tolerance (or unknown)
};

/// Truncated series for the restricted covariance at angle theta and lag taus[j].
inline SeriesValue restricted_cov_series(const SphericalSpectrum& s, double theta, std::size_t j, int L_max,
                                         double tolerance = 1e-4) {
  require(theta >= 0 && theta <= pi, ErrorKind::domain, "restricted_cov_series: theta must lie in [0, pi]");
  require(j < s.taus.size() && L_max >= 0 && L_max <= s.L(), ErrorKind::domain,
          "restricted_cov_series: lag index or truncation outside the tabulated spectrum");
  SeriesValue v;
  for (int l = 0; l <= L_max; ++l) v.value += s.h(l) * s.A[l][j] * gegenbauer_normalized(l, s.d, theta);
  v.value /= unit_sphere_area(s.d);
  v.tail_bound = s.tail_bound(L_max);
  v.tail_warning = !(v.tail_bound <= tolerance);
  return v;
}

// ---------------------------------------------------------------------------
// Real spherical harmonics on S^2

/// Orthonormal real harmonic S_lm, m in [-l, l]: cos(m phi) for m > 0, sin(|m| phi) for m < 0.
inline double real_spherical_harmonic(int l, int m, double theta, double phi) {
  const unsigned am = unsigned(std::abs(m));
  const double base = boost::math::spherical_harmonic_r<double>(unsigned(l), int(am), theta, 0.0);
  if (m == 0) return base;
  return std::sqrt(2.0) * base * (m > 0 ? std::cos(am * phi) : std::sin(am * phi));
}

/// |Y_3(lambda rho) - c_1^2(3) sum_{l <= L} sum_m S_lm(u) S_lm(v) J-products| for x, y in R^3.
inline double addition_theorem_residual(double lambda, const std::vector<double>& x, const std::vector<double>& y,
                                        int L_max) {
  require(x.size() == 3 && y.size() == 3, ErrorKind::domain, "addition_theorem_residual: points must lie in R^3");
  auto norm = [](const std::vector<double>& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); };
  const double r1 = norm(x), r2 = norm(y);
  require(r1 > 0 && r2 > 0, ErrorKind::domain, "addition_theorem_residual: points must be nonzero");
  auto angles = [](const std::vector<double>& v, double r) {
    return std::pair<double, double>{std::acos(std::clamp(v[2] / r, -1.0, 1.0)), std::atan2(v[1], v[0])};
  };
  const auto [t1, p1] = angles(x, r1);
  const auto [t2, p2] = angles(y, r2);
  double rho2 = 0;
  for (int k = 0; k < 3; ++k) rho2 += (x[k] - y[k]) * (x[k] - y[k]);
  const double arg = lambda * std::sqrt(rho2);
  const double lhs = arg == 0.0 ? 1.0 : std::sin(arg) / arg;  // Y_3(z) = sin z / z
  const double c1sq = 4.0 * std::tgamma(1.5) * std::pow(pi, 1.5);
  double series = 0;
  for (int l = 0; l <= L_max; ++l) {
    double sm = 0;
    for (int m = -l; m <= l; ++m) sm += real_spherical_harmonic(l, m, t1, p1) * real_spherical_harmonic(l, m, t2, p2);
    series += sm * bessel_ratio(l, 3, lambda * r1) * bessel_ratio(l, 3, lambda * r2);
  }
  return std::abs(lhs - c1sq * series);
}

// ---------------------------------------------------------------------------
// Sphere-cross-time synthesis (d = 3)

struct SphereGrid {
  int n_lat = 64, n_lon = 128;
  std::vector<double> theta;    // colatitudes (Gauss-Legendre in cos theta)
  std::vector<double> phi;      // longitudes
  std::vector<double> weights;  // per pixel area weights, summing to 4 pi
  std::size_t n_pix() const { return std::size_t(n_lat) * n_lon; }
};

inline SphereGrid make_sphere_grid(int n_lat, int n_lon) {
  require(n_lat >= 2 && n_lon >= 3, ErrorKind::config, "sphere grid: need n_lat >= 2 and n_lon >= 3");
  SphereGrid g;
  g.n_lat = n_lat;
  g.n_lon = n_lon;
  const auto rule = gauss_legendre(n_lat);
  for (int i = 0; i < n_lat; ++i) g.theta.push_back(std::acos(rule.nodes[i]));
  for (int j = 0; j < n_lon; ++j) g.phi.push_back(2.0 * pi * j / n_lon);
  for (int i = 0; i < n_lat; ++i)
    for (int j = 0; j < n_lon; ++j) g.weights.push_back(rule.weights[i] * 2.0 * pi / n_lon);
  return g;
}

struct SphereField {
  SphereGrid grid;
  int nt = 1;
  double dt = 1.0;
  int L_max = 0;
  std::vector<double> values;  // values[t * n_pix + pixel], pixel = lat * n_lon + lon
  std::uint64_t seed = 0;
  double tail_bound = 0.0;

  double at(std::size_t pixel, int t) const { return values[std::size_t(t) * grid.n_pix() + pixel]; }
  double T() const { return nt * dt; }
};

/// Draws a_lm(t) with Cov(a_lm(t), a_lm(s)) = A_l(|t-s|) on t_k = k dt, k < nt
/// (one factorization per degree, shared across orders m) and synthesizes
/// sum_{l <= L} sum_m a_lm(t) S_lm(x) on the grid. Requires taus[k] = k dt.
class SphereSampler {
 public:
  SphereSampler(const SphericalSpectrum& spectrum, int L_max, SphereGrid grid, int nt)
      : grid_(std::move(grid)), L_(L_max), nt_(nt) {
    require(spectrum.d == 3, ErrorKind::config, "sphere synthesis is implemented for d = 3 only");
    require(L_max >= 0 && L_max <= spectrum.L(), ErrorKind::config, "sphere synthesis: L_max exceeds the spectrum");
    require(nt >= 1 && spectrum.taus.size() >= std::size_t(nt), ErrorKind::config,
            "sphere synthesis: the spectrum tau grid must cover nt lags");
    dt_ = nt > 1 ? spectrum.taus[1] - spectrum.taus[0] : 1.0;
    for (int k = 0; k < nt; ++k)
      require(std::abs(spectrum.taus[k] - k * dt_) <= 1e-12 * std::max(1.0, k * dt_), ErrorKind::config,
              "sphere synthesis: spectrum taus must be the uniform lags k*dt starting at 0");
    tail_ = spectrum.tail_bound(L_max);
    for (int l = 0; l <= L_max; ++l) {
      Eigen::MatrixXd A(nt, nt);
      for (int a = 0; a < nt; ++a)
        for (int b = 0; b < nt; ++b) A(a, b) = spectrum.A[l][std::abs(a - b)];
      factors_.push_back(psd_factor(A, "sphere synthesis: temporal covariance A_" + std::to_string(l)));
    }
    // Normalized associated Legendre values N_lm P_l^m(cos theta_i), m >= 0.
    plm_.assign(grid_.n_lat, std::vector<double>((L_max + 1) * (L_max + 1), 0.0));
    for (int i = 0; i < grid_.n_lat; ++i)
      for (int l = 0; l <= L_max; ++l)
        for (int m = 0; m <= l; ++m)
          plm_[i][l * (L_max + 1) + m] = boost::math::spherical_harmonic_r<double>(unsigned(l), m, grid_.theta[i], 0.0);
    cosm_.assign(std::size_t(L_max + 1) * grid_.n_lon, 0.0);
    sinm_.assign(std::size_t(L_max + 1) * grid_.n_lon, 0.0);
    for (int m = 0; m <= L_max; ++m)
      for (int j = 0; j < grid_.n_lon; ++j) {
        cosm_[std::size_t(m) * grid_.n_lon + j] = std::cos(m * grid_.phi[j]);
        sinm_[std::size_t(m) * grid_.n_lon + j] = std::sin(m * grid_.phi[j]);
      }
  }

  SphereField sample(std::uint64_t seed, std::uint32_t stream = 0, std::uint32_t substream = 0) const {
    PhiloxStream rng(seed, stream, substream);
    return sample(rng, seed);
  }

  SphereField sample(PhiloxStream& rng, std::uint64_t seed_echo = 0) const {
    const int L = L_, stride = L + 1;
    // a[(l * (2L+1) + (m + L)) * nt + t]
    std::vector<double> a(std::size_t(stride) * (2 * L + 1) * nt_, 0.0);
    Eigen::VectorXd z(nt_);
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) {
        for (int t = 0; t < nt_; ++t) z(t) = rng.normal();
        const Eigen::VectorXd v = factors_[l].apply(z);
        for (int t = 0; t < nt_; ++t) a[(std::size_t(l) * (2 * L + 1) + (m + L)) * nt_ + t] = v(t);
      }
    SphereField f;
    f.grid = grid_;
    f.nt = nt_;
    f.dt = dt_;
    f.L_max = L;
    f.seed = seed_echo;
    f.tail_bound = tail_;
    const std::size_t npix = grid_.n_pix();
    f.values.assign(npix * nt_, 0.0);
    std::vector<double> c(stride), s(stride);
    const double r2 = std::sqrt(2.0);
    for (int t = 0; t < nt_; ++t)
      for (int i = 0; i < grid_.n_lat; ++i) {
        for (int m = 0; m <= L; ++m) {
          double cm = 0, sm = 0;
          for (int l = m; l <= L; ++l) {
            const double p = plm_[i][l * stride + m];
            cm += a[(std::size_t(l) * (2 * L + 1) + (m + L)) * nt_ + t] * p;
            if (m > 0) sm += a[(std::size_t(l) * (2 * L + 1) + (L - m)) * nt_ + t] * p;
          }
          c[m] = m == 0 ? cm : r2 * cm;
          s[m] = r2 * sm;
        }
        double* row = &f.values[std::size_t(t) * npix + std::size_t(i) * grid_.n_lon];
        for (int j = 0; j < grid_.n_lon; ++j) {
          double v = c[0];
          for (int m = 1; m <= L; ++m)
            v += c[m] * cosm_[std::size_t(m) * grid_.n_lon + j] + s[m] * sinm_[std::size_t(m) * grid_.n_lon + j];
          row[j] = v;
        }
      }
    return f;
  }

  double dt() const { return dt_; }
  double tail_bound() const { return tail_; }
  const SphereGrid& grid() const { return grid_; }

 private:
  SphereGrid grid_;
  int L_ = 0, nt_ = 1;
  double dt_ = 1.0, tail_ = 0.0;
  std::vector<PsdFactor> factors_;
  std::vector<std::vector<double>> plm_;
  std::vector<double> cosm_, sinm_;
};

inline SphereField simulate_sphere_field(const SphericalSpectrum& spectrum, int L_max, const SphereGrid& grid, int nt,
                                         std::uint64_t seed) {
  return SphereSampler(spectrum, L_max, grid, nt).sample(seed);
}

/// A-hat_l = sum_m a_lm^2 / (2l+1) with a_lm = sum_pixels w T(x, t) S_lm(x), computed
/// as longitude Fourier sums per latitude followed by associated Legendre sums.
inline std::vector<double> estimate_angular_spectrum(const SphereField& f, int t, int L) {
  const auto& g = f.grid;
  // fc[i][m] = sum_j w_ij T cos(m phi_j), fs likewise with sin.
  std::vector<std::vector<double>> fc(g.n_lat, std::vector<double>(L + 1, 0.0)), fs = fc;
  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      const std::size_t p = std::size_t(i) * g.n_lon + j;
      const double v = g.weights[p] * f.at(p, t);
      for (int m = 0; m <= L; ++m) {
        fc[i][m] += v * std::cos(m * g.phi[j]);
        fs[i][m] += v * std::sin(m * g.phi[j]);
      }
    }
  std::vector<double> out(L + 1, 0.0);
  for (int l = 0; l <= L; ++l) {
    for (int m = 0; m <= l; ++m) {
      double ac = 0, as = 0;
      for (int i = 0; i < g.n_lat; ++i) {
        const double p = boost::math::spherical_harmonic_r<double>(unsigned(l), m, g.theta[i], 0.0);
        ac += p * fc[i][m];
        as += p * fs[i][m];
      }
      out[l] += m == 0 ? ac * ac : 2.0 * (ac * ac + as * as);
    }
    out[l] /= (2.0 * l + 1);
  }
  return out;
}

inline void write_sphere_field_binary(const SphereField& f, const std::string& path) {
  nlohmann::json h{{"n_lat", f.grid.n_lat}, {"n_lon", f.grid.n_lon}, {"nt", f.nt},          {"dt", f.dt},
                   {"L_max", f.L_max},      {"seed", f.seed},         {"tail_bound", f.tail_bound},
                   {"dtype", "<f8"},        {"latitudes", "gauss-legendre"},
                   {"layout", "time-major: value[t * n_lat * n_lon + lat * n_lon + lon]"}};
  write_binary_record(path, "STSPHERE", h, f.values);
}

// ---------------------------------------------------------------------------
// Geodesic-distance family

/// sigma2 / psi(u^2) * phi(theta / psi(u^2)).
inline double white_cov(double theta, double u, const std::function<double(double)>& phi,
                        const std::function<double(double)>& psi, double sigma2) {
  require(theta >= 0 && theta <= pi, ErrorKind::domain, "white_cov: theta must lie in [0, pi]");
  const double p = psi(u * u);
  require(p > 0, ErrorKind::domain, "white_cov: psi must be positive");
  return sigma2 / p * phi(theta / p);
}

}  // namespace lrdf
