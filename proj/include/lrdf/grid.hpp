#pragma once

// Space-time lattice discretizing [0,T] x Lambda(T)K with Lambda(T) = T^gamma.
//
// Spatial cells are the nx^d cells of the bounding box of the scaled body;
// a cell belongs to the body when its center does. Time points sit at the
// midpoints of nt equal steps of [0,T].

#include <cmath>
#include <cstdint>
#include <map>
#include <json.hpp>
#include <string>
#include <vector>

#include "core.hpp"
#include "geomprob.hpp"

namespace lrdf {

struct GridSpec {
  int d = 2;
  BodyShape shape = BodyShape::ball;
  double gamma = 0.0;
  double T = 1.0;
  double scale = 1.0;   // Lambda(T) = T^gamma
  double extent = 2.0;  // side of the bounding box
  int nx = 8;
  int nt = 8;
  std::vector<std::int64_t> mask;  // flat box indices of cells inside the body
  std::vector<double> centers;     // mask.size() x d cell centers

  double h() const { return extent / nx; }
  double dt() const { return T / nt; }
  std::int64_t box_cells() const { return std::int64_t(std::llround(std::pow(double(nx), d))); }
  std::size_t n_space() const { return mask.size(); }
  std::size_t n_points() const { return mask.size() * std::size_t(nt); }
  double cell_volume() const { return std::pow(h(), d) * dt(); }
  double time_of(int k) const { return (k + 0.5) * dt(); }
  /// Exact measure |Lambda(T)K| of the spatial body.
  double body_measure() const {
    return shape == BodyShape::ball ? unit_ball_volume(d) * std::pow(scale, d) : std::pow(scale, d);
  }
  double masked_measure() const { return double(mask.size()) * std::pow(h(), d); }
  /// (masked volume - |Lambda(T)K|)/|Lambda(T)K|.
  double discretization_bias() const { return (masked_measure() - body_measure()) / body_measure(); }
  /// Total space-time measure of the discretized domain.
  double total_measure() const { return masked_measure() * T; }
};

/// Grid over the homothety T^gamma K of the unit ball (shape ball) or the unit
/// cube centered at the origin (shape cube).
inline GridSpec make_grid(int d, BodyShape shape, double gamma, double T, int nx, int nt) {
  require(d >= 1 && d <= 4, ErrorKind::config, "grid: d must lie in 1..4");
  require(nx >= 2 && nt >= 2, ErrorKind::config, "grid: nx and nt must be >= 2");
  require(T > 0 && gamma >= 0, ErrorKind::config, "grid: need T > 0 and gamma >= 0");
  require(shape == BodyShape::ball || shape == BodyShape::cube, ErrorKind::config,
          "grid: only ball and cube bodies can be masked");
  GridSpec g;
  g.d = d;
  g.shape = shape;
  g.gamma = gamma;
  g.T = T;
  g.scale = std::pow(T, gamma);
  g.extent = shape == BodyShape::ball ? 2.0 * g.scale : g.scale;
  g.nx = nx;
  g.nt = nt;
  const double h = g.h(), half = 0.5 * g.extent;
  const std::int64_t n = g.box_cells();
  std::vector<double> x(d);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    std::int64_t r = idx;
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      x[a] = -half + (double(r % nx) + 0.5) * h;
      r /= nx;
      r2 += x[a] * x[a];
    }
    if (shape == BodyShape::ball && r2 > g.scale * g.scale) continue;
    g.mask.push_back(idx);
    g.centers.insert(g.centers.end(), x.begin(), x.end());
  }
  require(!g.mask.empty(), ErrorKind::config, "grid: body mask is empty (increase nx)");
  return g;
}

/// Multiplicities of squared integer offsets |i - j|^2 over ordered pairs of masked cells.
inline std::map<std::int64_t, double> spatial_lag_counts(const GridSpec& g) {
  std::map<std::int64_t, double> counts;
  std::vector<std::vector<int>> idx(g.mask.size(), std::vector<int>(g.d));
  for (std::size_t i = 0; i < g.mask.size(); ++i) {
    std::int64_t r = g.mask[i];
    for (int a = 0; a < g.d; ++a) {
      idx[i][a] = int(r % g.nx);
      r /= g.nx;
    }
  }
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) {
      std::int64_t s = 0;
      for (int a = 0; a < g.d; ++a) {
        const std::int64_t k = idx[i][a] - idx[j][a];
        s += k * k;
      }
      counts[s] += 1.0;
    }
  return counts;
}

/// Multiplicity of time lag k (in steps) over ordered pairs of time points.
inline double time_lag_count(int nt, int k) { return k == 0 ? double(nt) : 2.0 * (nt - k); }

inline nlohmann::json to_json(const GridSpec& g) {
  return {{"d", g.d},
          {"body", g.shape == BodyShape::ball ? "ball" : "cube"},
          {"gamma", g.gamma},
          {"T", g.T},
          {"nx", g.nx},
          {"nt", g.nt},
          {"extent", g.extent},
          {"masked_cells", g.mask.size()},
          {"discretization_bias", g.discretization_bias()}};
}

}  // namespace lrdf
