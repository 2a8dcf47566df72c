#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lrdf/hermite_chaos.hpp"

using namespace lrdf;

namespace {

// Independent oracle: J_n = int G H_n phi by adaptive quadrature on a wide
// window, with the polynomial from its explicit sum
// H_n(z) = n! sum_k (-1)^k z^{n-2k} / (k! (n-2k)! 2^k).
double hermite_explicit(int n, double z) {
  double s = 0.0;
  for (int k = 0; 2 * k <= n; ++k)
    s += (k % 2 ? -1.0 : 1.0) * std::pow(z, n - 2 * k) / (factorial(k) * factorial(n - 2 * k) * std::pow(2.0, k));
  return factorial(n) * s;
}

}  // namespace

TEST(Hermite, LowOrderValues) {
  for (double z : {-2.5, -1.0, 0.0, 0.3, 4.0}) EXPECT_DOUBLE_EQ(hermite(2, z), z * z - 1);
  EXPECT_EQ(hermite(1, 3.0), 3.0);
  EXPECT_EQ(hermite(0, 7.0), 1.0);
  EXPECT_EQ(hermite(4, 0.0), 3.0);
  EXPECT_THROW(hermite(-1, 0.0), Error);
}

TEST(Hermite, MatchesExplicitSum) {
  for (int n = 0; n <= 14; ++n)
    for (double z : {-3.0, -0.7, 0.0, 1.1, 2.9}) {
      const double ref = hermite_explicit(n, z);
      EXPECT_NEAR(hermite(n, z), ref, 1e-11 * std::max(1.0, std::abs(ref))) << n << " " << z;
    }
}

TEST(Hermite, FourthMomentStructure) {
  // E[H_4(Z)] = E Z^4 - 6 E Z^2 + 3 = 3 - 6 + 3 = 0, and H_4(0) = 3.
  auto r = gauss_hermite_prob(20);
  double m = 0;
  for (int i = 0; i < 20; ++i) m += r.weights[i] * hermite(4, r.nodes[i]);
  EXPECT_NEAR(m, 0.0, 1e-12);
}

TEST(Hermite, OrthogonalityUnderQuadrature) {
  auto r = gauss_hermite_prob(128);
  for (int n = 0; n <= 12; ++n)
    for (int k = 0; k <= 12; ++k) {
      double s = 0;
      for (int i = 0; i < 128; ++i) s += r.weights[i] * hermite(n, r.nodes[i]) * hermite(k, r.nodes[i]);
      EXPECT_NEAR(s, n == k ? factorial(n) : 0.0, 1e-8 * std::max(1.0, n == k ? factorial(n) : 1.0))
          << n << "," << k;
    }
}

TEST(ChaosCoeffs, Identity) {
  auto c = chaos_coeffs([](double z) { return z; }, 10);
  EXPECT_NEAR(c[1], 1.0, 1e-12);
  for (int n = 0; n <= 10; ++n)
    if (n != 1) EXPECT_NEAR(c[n], 0.0, 1e-10) << n;
  EXPECT_EQ(c.rank, 1);
  EXPECT_TRUE(c.doubling_stable);
}

TEST(ChaosCoeffs, SecondHermite) {
  auto c = chaos_coeffs([](double z) { return z * z - 1; }, 10);
  EXPECT_NEAR(c[2], 2.0, 1e-12);
  EXPECT_NEAR(c[0], 0.0, 1e-12);
  EXPECT_EQ(c.rank, 2);
}

TEST(ChaosCoeffs, RankExamples) {
  EXPECT_EQ(chaos_coeffs([](double z) { return hermite(3, z); }, 10).rank, 3);
  EXPECT_EQ(chaos_coeffs([](double z) { return z * z; }, 10).rank, 2);
  for (double u : {-2.0, 0.0, 1.5}) EXPECT_EQ(hermite_rank(indicator_coeffs(u, 20)), 1);
  EXPECT_THROW(chaos_coeffs([](double) { return 4.0; }, 10), Error);
}

TEST(ChaosCoeffs, IndicatorMatchesClosedForm) {
  for (double u : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    auto q = chaos_coeffs([u](double z) { return z >= u ? 1.0 : 0.0; }, 10);
    auto e = indicator_coeffs(u, 10);
    for (int n = 0; n <= 10; ++n) EXPECT_NEAR(q[n], e[n], 1e-8) << "u=" << u << " n=" << n;
    EXPECT_FALSE(q.doubling_stable);  // the jump defeats Gauss-Hermite, so the fallback ran
    EXPECT_TRUE(q.adaptive_fallback);
  }
}

TEST(IndicatorCoeffs, Examples) {
  auto c0 = indicator_coeffs(0.0, 5);
  EXPECT_DOUBLE_EQ(c0[0], 0.5);
  EXPECT_NEAR(c0[1], 1 / std::sqrt(2 * pi), 1e-16);
  EXPECT_NEAR(c0[2], 0.0, 1e-16);
  // phi(1) from quadrature of the normalizing integral: phi(1) = phi(0) * exp(-1/2).
  auto c1 = indicator_coeffs(1.0, 5);
  EXPECT_NEAR(c1[2], 0.2419707, 5e-8);
  auto inf = indicator_coeffs(INFINITY, 8);
  for (int n = 0; n <= 8; ++n) EXPECT_EQ(inf[n], 0.0);
  auto far = indicator_coeffs(40.0, 8);
  for (int n = 0; n <= 8; ++n) EXPECT_LT(std::abs(far[n]), 1e-300);
}

TEST(IndicatorCoeffs, MatchesIndependentQuadrature) {
  for (double u : {-1.5, 0.4, 2.2})
    for (int n = 1; n <= 8; ++n) {
      auto r = integrate([&](double z) { return hermite_explicit(n, z) * normal_pdf(z); }, u, 40.0,
                         {1e-13, 1e-12, 4000});
      EXPECT_NEAR(indicator_coeffs(u, 8)[n], r.value, 1e-10) << u << " " << n;
    }
}

TEST(IndicatorCoeffs, ParsevalMonotoneAndBounded) {
  for (double u : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    auto c = indicator_coeffs(u, 60);
    const double total = normal_sf(u);
    double prev = -1;
    for (int N = 0; N <= 60; ++N) {
      const double s = c.parseval(0, N);
      EXPECT_GE(s, prev);
      EXPECT_LE(s, total + 1e-10) << u << " " << N;
      prev = s;
    }
    EXPECT_NEAR(prev, total, 0.02);  // slow (N^{-1/2}) convergence for a jump
  }
}

TEST(IndicatorCoeffs, LargeOrderStaysFinite) {
  auto c = indicator_coeffs(1.3, 120);
  for (double v : c.coeffs) EXPECT_TRUE(std::isfinite(v));
}

TEST(ChaosCoeffs, CsvExport) {
  const auto path = std::filesystem::temp_directory_path() / "lrdf_coeffs.csv";
  write_coeffs_csv(indicator_coeffs(0.0, 3), path.string());
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n,J_n");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
  std::filesystem::remove(path);
}
