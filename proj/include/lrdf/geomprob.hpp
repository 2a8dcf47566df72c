#pragma once

// Inter-point distance laws: uniform pairs in (scaled) balls and convex
// bodies, and on the unit sphere surface.

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace lrdf {

/// Regularized incomplete beta I_mu(p,q).
inline double incomplete_beta(double mu, double p, double q) {
  require(mu > 0.0 && mu <= 1.0, ErrorKind::domain, "incomplete_beta: mu must lie in (0,1]");
  require(p > 0.0 && q > 0.0, ErrorKind::domain, "incomplete_beta: p and q must be positive");
  return boost::math::ibeta(p, q, mu);
}

/// psi_{Lambda,B(1)}(z): density of |P1-P2| for uniform P1,P2 in the ball of radius `scale`.
inline double ball_distance_density(int d, double scale, double z) {
  require(d >= 2, ErrorKind::domain, "ball_distance_density: d must be >= 2");
  require(scale > 0.0, ErrorKind::domain, "ball_distance_density: scale must be positive");
  require(z >= 0.0 && z <= 2.0 * scale, ErrorKind::domain, "ball_distance_density: z outside [0, 2*scale]");
  const double r = z / (2.0 * scale);
  const double mu = 1.0 - r * r;
  if (mu <= 0.0 || z == 0.0) return 0.0;
  return d / std::pow(scale, d) * std::pow(z, d - 1) * boost::math::ibeta(0.5 * (d + 1), 0.5, mu);
}

/// Membership shape used to build grid masks; the geometric law itself only
/// needs the scalar fields and the chord table.
enum class BodyShape { ball, cube, none };
enum class BodyKind { unit_ball, tabulated };

struct ChordTable {
  std::vector<double> v;
  std::vector<double> F;
  std::vector<double> tail;  // cumulative integral of 1 - F from 0 to v[i]

  void finalize() {
    require(v.size() >= 2 && v.size() == F.size(), ErrorKind::config, "chord table needs >= 2 matching knots");
    require(v.front() == 0.0, ErrorKind::config, "chord table must start at v = 0");
    for (std::size_t i = 1; i < v.size(); ++i) {
      require(v[i] > v[i - 1], ErrorKind::config, "chord table: v must be strictly increasing");
      require(F[i] >= F[i - 1], ErrorKind::config, "chord table: F must be nondecreasing");
    }
    require(std::abs(F.front()) < 1e-12 && std::abs(F.back() - 1.0) < 1e-9, ErrorKind::config,
            "chord table: F must run from 0 to 1");
    tail.assign(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i)
      tail[i] = tail[i - 1] + 0.5 * (v[i] - v[i - 1]) * ((1 - F[i]) + (1 - F[i - 1]));
  }

  double cdf(double x) const {
    if (x <= v.front()) return 0.0;
    if (x >= v.back()) return 1.0;
    const auto i = std::size_t(std::upper_bound(v.begin(), v.end(), x) - v.begin()) - 1;
    const double t = (x - v[i]) / (v[i + 1] - v[i]);
    return F[i] + t * (F[i + 1] - F[i]);
  }

  /// Integral of 1 - F over [0, x]; exact for the piecewise-linear table.
  double tail_integral(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= v.back()) return tail.back();
    const auto i = std::size_t(std::upper_bound(v.begin(), v.end(), x) - v.begin()) - 1;
    const double gx = 1.0 - cdf(x);
    return tail[i] + 0.5 * (x - v[i]) * ((1 - F[i]) + gx);
  }
};

struct BodySpec {
  int d = 2;
  BodyKind kind = BodyKind::unit_ball;
  BodyShape shape = BodyShape::ball;
  double volume = 0.0;
  double surface = 0.0;
  double diameter = 0.0;
  std::optional<ChordTable> chord;
  double sandwich_inner = 1.0;  // S1
  double sandwich_outer = 1.0;  // S2
  // Divisor applied to the chord-representation density. 1 for exact tables;
  // Monte Carlo tables store their numerically integrated total mass here.
  double density_norm = 1.0;
  std::string name = "unit-ball";
};

inline BodySpec unit_ball_body(int d) {
  require(d >= 2, ErrorKind::domain, "unit_ball_body: d must be >= 2");
  BodySpec b;
  b.d = d;
  b.volume = unit_ball_volume(d);
  b.surface = unit_sphere_area(d);
  b.diameter = 2.0;
  b.name = "unit-ball";
  return b;
}

/// Tabulated body with caller-supplied geometry and chord-length CDF.
inline BodySpec tabulated_body(int d, double volume, double surface, ChordTable table, double s1, double s2,
                               BodyShape shape = BodyShape::none, std::string name = "tabulated") {
  require(d >= 2, ErrorKind::domain, "tabulated_body: d must be >= 2");
  require(volume > 0 && surface > 0, ErrorKind::parameter, "tabulated_body: volume and surface must be positive");
  require(s1 > 0 && s1 <= s2, ErrorKind::parameter, "tabulated_body: need 0 < S1 <= S2");
  table.finalize();
  BodySpec b;
  b.d = d;
  b.kind = BodyKind::tabulated;
  b.shape = shape;
  b.volume = volume;
  b.surface = surface;
  b.diameter = table.v.back();
  b.chord = std::move(table);
  b.sandwich_inner = s1;
  b.sandwich_outer = s2;
  b.name = std::move(name);
  return b;
}

/// Chord table from a `v,F` CSV file.
inline ChordTable load_chord_csv(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorKind::io, "cannot open chord table: " + path);
  std::string line;
  std::getline(in, line);
  require(line.rfind("v,F", 0) == 0, ErrorKind::config, path + ": expected header 'v,F'");
  ChordTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v, F;
    char comma;
    require(bool(ss >> v >> comma >> F) && comma == ',', ErrorKind::config, path + ": malformed row '" + line + "'");
    t.v.push_back(v);
    t.F.push_back(F);
  }
  t.finalize();
  return t;
}

/// Square [-1/2,1/2]^2 with its exact chord-length CDF tabulated on `knots` points
/// (denser near the kink at v = 1).
inline BodySpec unit_square_body(int knots = 20001) {
  const double D = std::sqrt(2.0);
  ChordTable t;
  const int n1 = 64, n2 = std::max(knots - n1, 16);
  for (int i = 0; i < n1; ++i) {
    const double v = double(i) / n1;
    t.v.push_back(v);
    t.F.push_back(0.5 * v);
  }
  for (int i = 0; i <= n2; ++i) {
    const double s = double(i) / n2;
    const double v = (i == n2) ? D : 1.0 + (D - 1.0) * s * s;
    t.v.push_back(v);
    t.F.push_back(i == n2 ? 1.0 : 1.0 - 0.5 * v + std::sqrt(std::max(v * v - 1.0, 0.0)) / v);
  }
  return tabulated_body(2, 1.0, 4.0, std::move(t), 0.5, 0.5 * D, BodyShape::cube, "unit-square");
}

/// Monte Carlo chord table for the cube [-1/2,1/2]^d: isotropic uniform random
/// lines through the circumscribed ball, clipped to the cube.
inline ChordTable monte_carlo_cube_chords(int d, int n_chords, std::uint64_t seed, int knots = 2001) {
  require(d >= 2 && n_chords > 100, ErrorKind::domain, "monte_carlo_cube_chords: bad arguments");
  PhiloxStream rng(seed, 0xC0BEu);
  const double R = 0.5 * std::sqrt(double(d));
  std::vector<double> lengths;
  lengths.reserve(n_chords);
  std::vector<double> w(d), p(d);
  while (int(lengths.size()) < n_chords) {
    double nw = 0;
    for (auto& x : w) {
      x = rng.normal();
      nw += x * x;
    }
    nw = std::sqrt(nw);
    for (auto& x : w) x /= nw;
    // Uniform point in the (d-1)-ball of radius R orthogonal to w: Gaussian
    // direction projected onto the hyperplane, radius by inversion.
    for (int i = 0; i < d; ++i) p[i] = rng.normal();
    double dot = 0;
    for (int i = 0; i < d; ++i) dot += p[i] * w[i];
    for (int i = 0; i < d; ++i) p[i] -= dot * w[i];
    double pn = 0;
    for (double x : p) pn += x * x;
    pn = std::sqrt(pn);
    const double rad = R * std::pow(rng.uniform(), 1.0 / (d - 1));
    for (auto& x : p) x *= rad / pn;
    double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
    bool miss = false;
    for (int i = 0; i < d && !miss; ++i) {
      if (std::abs(w[i]) < 1e-300) {
        if (std::abs(p[i]) > 0.5) miss = true;
        continue;
      }
      double a = (-0.5 - p[i]) / w[i], b = (0.5 - p[i]) / w[i];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 >= t1) miss = true;
    }
    if (!miss) lengths.push_back(t1 - t0);
  }
  // Pin the mean chord to its exact value (d-1)|K||S_{d-1}| / (|S_{d-2}| U(K)),
  // which makes the derived density vanish at the diameter.
  const double exact_mean = (d - 1) * unit_sphere_area(d) / (unit_sphere_area(d - 1) * 2.0 * d);
  double mean = 0;
  for (double l : lengths) mean += l;
  mean /= lengths.size();
  for (auto& l : lengths) l *= exact_mean / mean;
  std::sort(lengths.begin(), lengths.end());
  ChordTable t;
  const double D = std::sqrt(double(d));
  for (int i = 0; i < knots; ++i) {
    const double v = D * i / (knots - 1);
    const double F = double(std::upper_bound(lengths.begin(), lengths.end(), v) - lengths.begin()) / lengths.size();
    t.v.push_back(v);
    t.F.push_back(i == knots - 1 ? 1.0 : F);
  }
  return t;
}


/// psi_{Lambda,K}(z) from the chord-length representation with the scaled body Lambda*K.
inline double convex_distance_density(const BodySpec& body, double scale, double z) {
  if (body.kind == BodyKind::unit_ball) return ball_distance_density(body.d, scale, z);
  require(body.chord.has_value(), ErrorKind::parameter, "convex_distance_density: body '" + body.name +
                                                            "' has no chord-length table");
  require(scale > 0, ErrorKind::domain, "convex_distance_density: scale must be positive");
  const double D = body.diameter * scale;
  require(z >= 0 && z <= D * (1 + 1e-14), ErrorKind::domain, "convex_distance_density: z outside support");
  const int d = body.d;
  const double vol = body.volume * std::pow(scale, d);
  const double surf = body.surface * std::pow(scale, d - 1);
  const double zd1 = std::pow(z, d - 1);
  // F_{Lambda K}(v) = F_K(v/Lambda)  =>  int_0^z (1-F_{Lambda K}) = Lambda * int_0^{z/Lambda} (1-F_K).
  const double tail = scale * body.chord->tail_integral(z / scale);
  const double val =
      (vol * zd1 * unit_sphere_area(d) - unit_sphere_area(d - 1) * zd1 * surf / (d - 1) * tail) / (vol * vol);
  return std::max(val, 0.0) / body.density_norm;
}

/// Cube [-1/2,1/2]^d with a Monte Carlo chord table. The sampled table carries
/// O(n^{-1/2}) noise that the chord representation amplifies near the diameter,
/// so the resulting density is renormalized to unit mass.
inline BodySpec monte_carlo_cube_body(int d, int n_chords = 1000000, std::uint64_t seed = 1) {
  const double s2 = 0.5 * std::sqrt(double(d));
  auto b = tabulated_body(d, 1.0, 2.0 * d, monte_carlo_cube_chords(d, n_chords, seed), 0.5, s2, BodyShape::cube,
                          "cube-mc");
  const auto& v = b.chord->v;
  auto mass = integrate([&](double z) { return convex_distance_density(b, 1.0, z); }, 0.0, b.diameter,
                        {1e-12, 1e-12, 20000}, std::vector<double>(v.begin() + 1, v.end() - 1));
  b.density_norm = mass.value;
  return b;
}

struct SandwichReport {
  bool pass = true;
  double c1 = 0.0, c2 = 0.0;
  double worst_violation = 0.0;
  double worst_z = 0.0;
  std::string message;
};

/// Checks C1 psi_{B(S1)} <= psi_K <= C2 psi_{B(S2)} on z_grid. With no declared
/// constants, C1 and C2 are fitted as the extreme ratios; the check then fails
/// when a finite positive pair does not exist.
inline SandwichReport lord_sandwich_check(const BodySpec& body, double scale, const std::vector<double>& z_grid,
                                          std::optional<double> c1 = {}, std::optional<double> c2 = {},
                                          double tol = 1e-9) {
  SandwichReport rep;
  const double s1 = body.sandwich_inner * scale, s2 = body.sandwich_outer * scale;
  const int d = body.d;
  auto ball = [&](double S, double z) { return z <= 2 * S ? ball_distance_density(d, S, z) : 0.0; };
  auto psi = [&](double z) { return z <= body.diameter * scale ? convex_distance_density(body, scale, z) : 0.0; };

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  double lo_z = 0, hi_z = 0;
  for (double z : z_grid) {
    if (z <= 0) continue;
    const double pk = psi(z), b1 = ball(s1, z), b2 = ball(s2, z);
    if (b1 > 0 && pk / b1 < lo) lo = pk / b1, lo_z = z;
    if (b2 > 0) {
      if (pk / b2 > hi) hi = pk / b2, hi_z = z;
    } else if (pk > tol) {
      hi = std::numeric_limits<double>::infinity();
      hi_z = z;
    }
  }
  rep.c1 = c1.value_or(lo);
  rep.c2 = c2.value_or(hi);
  if (!(rep.c1 > 0) || !std::isfinite(rep.c2)) {
    rep.pass = false;
    rep.worst_z = !(rep.c1 > 0) ? lo_z : hi_z;
    rep.worst_violation = std::isfinite(rep.c2) ? (rep.c1 > 0 ? 0.0 : ball(s1, lo_z)) : psi(hi_z);
    rep.message = !(rep.c1 > 0) ? "density vanishes inside the declared inner ball"
                                : "density is positive outside the declared outer ball";
    return rep;
  }
  for (double z : z_grid) {
    const double pk = psi(z);
    const double v1 = rep.c1 * ball(s1, z) - pk;
    const double v2 = pk - rep.c2 * ball(s2, z);
    const double v = std::max(v1, v2);
    if (v > rep.worst_violation) rep.worst_violation = v, rep.worst_z = z;
  }
  rep.pass = rep.worst_violation <= tol;
  if (!rep.pass) rep.message = "sandwich inequality violated";
  return rep;
}

/// Density of the chord |x-y| for x,y uniform on the unit sphere S_{d-1} in R^d.
inline double sphere_chord_density(int d, double z) {
  require(d >= 2, ErrorKind::domain, "sphere_chord_density: d must be >= 2");
  require(z >= 0 && z <= 2, ErrorKind::domain, "sphere_chord_density: z outside [0,2]");
  if (d == 3) return 0.5 * z;
  const double c = std::exp(std::lgamma(0.5 * d) - std::lgamma(0.5 * (d - 1))) / std::sqrt(pi);
  const double w = 1.0 - 0.25 * z * z;
  if (w <= 0) return d > 3 ? 0.0 : std::numeric_limits<double>::infinity();
  return c * std::pow(z, d - 2) * std::pow(w, 0.5 * (d - 3));
}

/// Closed form of int_0^2 u^{d-1} I_{1-(u/2)^2}((d+1)/2, 1/2) du.
inline double ball_moment_integral(int d) {
  require(d >= 2, ErrorKind::domain, "ball_moment_integral: d must be >= 2");
  const double a = 0.5 * (d + 1);
  return std::pow(2.0, d) * std::beta(a, a) / (d * std::beta(a, 0.5));
}

/// The same integral by adaptive quadrature.
inline QuadResult ball_moment_quadrature(int d, const QuadOptions& opt = {1e-13, 1e-12, 2000}) {
  return integrate(
      [d](double u) {
        const double mu = 1.0 - 0.25 * u * u;
        return mu <= 0 ? 0.0 : std::pow(u, d - 1) * boost::math::ibeta(0.5 * (d + 1), 0.5, mu);
      },
      0.0, 2.0, opt);
}

}  // namespace lrdf
