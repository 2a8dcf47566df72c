#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lrdf {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  domain,         // argument outside the mathematical domain
  parameter,      // model or configuration parameters violate an invariant
  config,         // malformed configuration / input file
  admissibility,  // threshold or regime rejected
  numeric,        // quadrature, factorization or embedding failure
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

inline constexpr double pi = std::numbers::pi;
inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;

struct NormalValues {
  double density;
  double cdf;
};

/// Standard normal density and distribution function.
inline NormalValues std_normal(double u) {
  if (std::isinf(u)) return {0.0, u > 0 ? 1.0 : 0.0};
  return {inv_sqrt_2pi * std::exp(-0.5 * u * u), 0.5 * std::erfc(-u / std::numbers::sqrt2)};
}

inline double normal_pdf(double u) { return std_normal(u).density; }
inline double normal_cdf(double u) { return std_normal(u).cdf; }
/// Upper tail 1 - Phi(u) without cancellation.
inline double normal_sf(double u) {
  if (std::isinf(u)) return u > 0 ? 0.0 : 1.0;
  return 0.5 * std::erfc(u / std::numbers::sqrt2);
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface area |S_{d-1}(1)| of the unit sphere in R^d.
inline double unit_sphere_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }

inline double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace lrdf
