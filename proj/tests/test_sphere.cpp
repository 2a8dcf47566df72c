#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <cstdio>
#include <vector>

#include "lrdf/sphere.hpp"

using namespace lrdf;

namespace {

std::vector<double> lag_grid(int n, double dt) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(k * dt);
  return t;
}

SpectralMeasure three_masses() { return SpectralMeasure::point_masses({{0.7, 0.3, 0.5}, {2.0, 1.1, 0.3}, {4.5, 0.0, 0.2}}); }

// Smooth spatial density and exponential temporal density.
SpectralMeasure smooth_separable() {
  return SpectralMeasure::separable([](double l) { return l * l * std::exp(-l); }, [](double m) { return std::exp(-m); });
}

CovarianceModel example_ml() {
  GneitingML g;
  g.nu = 0.5;
  g.gamma_tilde = 1.0;
  g.psi = {1.0, 0.5, 0.5};
  g.d = 3;
  return g;
}

}  // namespace

TEST(SphereMultiplicity, KnownDimensions) {
  for (int l = 0; l < 12; ++l) {
    EXPECT_DOUBLE_EQ(sphere_multiplicity(l, 3), 2 * l + 1);
    EXPECT_DOUBLE_EQ(sphere_multiplicity(l, 4), (l + 1.0) * (l + 1.0));
    EXPECT_DOUBLE_EQ(sphere_multiplicity(l, 2), l == 0 ? 1.0 : 2.0);
  }
}

TEST(AngularPowerSpectrum, PointMassSubstitution) {
  // d = 3: [J_{l+1/2}(x)/x^{1/2}]^2 = (2/pi) j_l(x)^2 and 2^3 Gamma(3/2) pi^{3/2} = 4 pi^2.
  const double lam = 1.7, mu = 0.8, w = 0.4;
  const auto m = SpectralMeasure::point_masses({{lam, mu, w}});
  for (int l : {0, 1, 4, 9})
    for (double tau : {0.0, 0.5, 3.0}) {
      const double j = boost::math::sph_bessel(unsigned(l), lam);
      const double expect = 8.0 * pi * w * std::cos(mu * tau) * j * j;
      EXPECT_NEAR(angular_power_spectrum(m, l, tau, 3), expect, 1e-13 * std::max(1.0, std::abs(expect)));
    }
}

TEST(AngularPowerSpectrum, CosineBound) {
  for (const auto& m : {three_masses(), smooth_separable()})
    for (int d : {2, 3, 4})
      for (int l : {0, 2, 5}) {
        const double a0 = angular_power_spectrum(m, l, 0.0, d);
        EXPECT_GE(a0, 0.0);
        for (double tau : {0.3, 1.0, 4.0}) EXPECT_LE(std::abs(angular_power_spectrum(m, l, tau, d)), a0 * (1 + 1e-12));
      }
}

TEST(AngularPowerSpectrum, SeparableFactorization) {
  const auto m = smooth_separable();
  for (double tau : {0.5, 1.0, 2.5}) {
    const double expect = 1.0 / (1.0 + tau * tau);  // int cos(mu tau) e^{-mu} / int e^{-mu}
    for (int l : {0, 1, 3, 6}) {
      const double ratio = angular_power_spectrum(m, l, tau, 3) / angular_power_spectrum(m, l, 0.0, 3);
      EXPECT_NEAR(ratio, expect, 1e-6) << l << " " << tau;
    }
  }
}

TEST(SpectralMeasure, DivergentDensityRejected) {
  EXPECT_THROW(SpectralMeasure::separable([](double l) { return 1.0 / (1.0 + l); }, [](double m) { return std::exp(-m); }),
               Error);
}

TEST(RestrictedCov, DirectModelValues) {
  const auto model = example_ml();
  EXPECT_DOUBLE_EQ(restricted_cov_direct(model, 0.0, 1.5), model(0.0, 1.5));
  EXPECT_NEAR(restricted_cov_direct(model, pi, 1.5), model(2.0, 1.5), 1e-15);
  EXPECT_NEAR(restricted_cov_direct(model, pi / 3, 1.0), eval_cov(model, 1.0, 1.0), 1e-15);
}

TEST(RestrictedCov, SeriesMatchesDirectForPointMasses) {
  for (int d : {2, 3, 4}) {
    const auto m = three_masses();
    const std::vector<double> taus{0.0, 0.4, 1.3, 2.9};
    const auto s = spectrum_from_measure(m, d, 40, taus);
    PhiloxStream rng(3);
    for (int k = 0; k < 20; ++k) {
      const double theta = pi * rng.uniform();
      const std::size_t j = std::size_t(rng.uniform() * taus.size());
      const auto v = restricted_cov_series(s, theta, j, 40);
      const double direct = restricted_cov_direct(m, d, theta, taus[j]);
      EXPECT_LE(std::abs(v.value - direct), v.tail_bound + 1e-4) << d << " " << theta;
      EXPECT_LT(std::abs(v.value - direct), 1e-10);  // masses at lambda <= 4.5 converge fast
    }
  }
}

TEST(RestrictedCov, SeriesAtZeroAngleIsPartialVariance) {
  const auto s = spectrum_from_measure(three_masses(), 3, 20, {0.0, 1.0});
  for (std::size_t j : {0u, 1u})
    EXPECT_NEAR(restricted_cov_series(s, 0.0, j, 20).value, s.partial_variance(20, j), 1e-14);
}

TEST(RestrictedCov, MonopoleOnlyIsConstantInAngle) {
  SphericalSpectrum s;
  s.d = 3;
  s.taus = {0.0};
  s.A = {{2.0}, {0.0}, {0.0}, {0.0}};
  const double c0 = restricted_cov_series(s, 0.0, 0, 3).value;
  EXPECT_NEAR(c0, 2.0 / (4 * pi), 1e-15);
  for (double th : {0.3, 1.2, 2.0, pi}) EXPECT_NEAR(restricted_cov_series(s, th, 0, 3).value, c0, 1e-15);
}

TEST(SpectrumFromModel, MatchesAdaptiveProjection) {
  const CovarianceModel model = ExponentialBaseline{1.0, 1.0};
  const auto s = spectrum_from_model(model, 3, 12, {0.0, 0.7});
  for (int l : {0, 3, 12})
    for (std::size_t j : {0u, 1u}) {
      const double tau = s.taus[j];
      const auto r = integrate(
          [&](double th) {
            return model(2 * std::sin(th / 2), tau) * boost::math::legendre_p(l, std::cos(th)) * std::sin(th);
          },
          0.0, pi, {1e-15, 1e-13, 4000});
      EXPECT_NEAR(s.A[l][j], 2 * pi * r.value, 1e-10) << l;
    }
}

TEST(SpectrumFromModel, SeriesReconstructsCovariance) {
  for (int d : {2, 3}) {
    const auto model = example_ml();
    const auto s = spectrum_from_model(model, d, 40, {0.0, 2.0});
    for (double th : {0.0, 0.4, 1.1, 2.5, pi})
      for (std::size_t j : {0u, 1u}) {
        const auto v = restricted_cov_series(s, th, j, 40);
        EXPECT_LE(std::abs(v.value - model(2 * std::sin(th / 2), s.taus[j])), v.tail_bound + 1e-8) << d << " " << th;
      }
    EXPECT_LT(s.tail_bound(40), 1e-8);
  }
}

TEST(SpectrumFromModel, TemporalMatricesArePsd) {
  const auto s = spectrum_from_model(example_ml(), 3, 16, lag_grid(40, 0.5));
  for (int l = 0; l <= 16; ++l) {
    Eigen::MatrixXd A(40, 40);
    for (int a = 0; a < 40; ++a)
      for (int b = 0; b < 40; ++b) A(a, b) = s.A[l][std::abs(a - b)];
    EXPECT_LE(psd_factor(A, "A_l").jitter, 1e-10) << l;
  }
}

TEST(AdditionTheorem, ZeroFrequency) {
  EXPECT_LT(addition_theorem_residual(0.0, {0.3, 0.4, 0.5}, {-1.0, 0.2, 0.1}, 10), 1e-10);
}

TEST(AdditionTheorem, CoincidentUnitPointsConverge) {
  const std::vector<double> x{0.0, 0.6, 0.8};
  double prev = INFINITY;
  for (int L : {0, 2, 5, 10, 20, 40}) {
    const double r = addition_theorem_residual(0.5, x, x, L);
    EXPECT_LE(r, prev + 1e-15) << L;
    prev = r;
  }
  EXPECT_LT(prev, 1e-8);
}

TEST(AdditionTheorem, AntipodalUnitPoints) {
  EXPECT_LT(addition_theorem_residual(1.0, {0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}, 40), 1e-8);
  EXPECT_LT(addition_theorem_residual(1.0, {0.48, 0.6, 0.64}, {-0.48, -0.6, -0.64}, 40), 1e-8);
}

TEST(SphereGrid, RealHarmonicsOrthonormalOnGrid) {
  const auto g = make_sphere_grid(10, 20);
  double wsum = 0;
  for (double w : g.weights) wsum += w;
  EXPECT_NEAR(wsum, 4 * pi, 1e-13);
  for (int l1 = 0; l1 <= 4; ++l1)
    for (int m1 = -l1; m1 <= l1; ++m1)
      for (int l2 = 0; l2 <= 4; ++l2)
        for (int m2 = -l2; m2 <= l2; ++m2) {
          double s = 0;
          for (int i = 0; i < g.n_lat; ++i)
            for (int j = 0; j < g.n_lon; ++j)
              s += g.weights[std::size_t(i) * g.n_lon + j] * real_spherical_harmonic(l1, m1, g.theta[i], g.phi[j]) *
                   real_spherical_harmonic(l2, m2, g.theta[i], g.phi[j]);
          EXPECT_NEAR(s, (l1 == l2 && m1 == m2) ? 1.0 : 0.0, 1e-12);
        }
}

TEST(SphereSimulation, MonopoleOnlyIsConstant) {
  SphericalSpectrum s;
  s.d = 3;
  s.taus = {0.0, 1.0, 2.0};
  s.A = {{4 * pi, 2 * pi, pi}, {0, 0, 0}, {0, 0, 0}};
  const auto f = simulate_sphere_field(s, 2, make_sphere_grid(6, 12), 3, 5);
  for (int t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < f.grid.n_pix(); ++p) EXPECT_NEAR(f.at(p, t), f.at(0, t), 1e-12);
}

TEST(SphereSimulation, DeterministicPerSeed) {
  const auto s = spectrum_from_model(example_ml(), 3, 8, lag_grid(4, 0.5));
  const SphereSampler sampler(s, 8, make_sphere_grid(10, 20), 4);
  EXPECT_EQ(sampler.sample(9).values, sampler.sample(9).values);
  EXPECT_NE(sampler.sample(9).values, sampler.sample(10).values);
}

TEST(SphereSimulation, PointVarianceAndSpectrumRecovery) {
  const int L = 8, reps = 2000;
  const auto s = spectrum_from_model(example_ml(), 3, L, lag_grid(2, 0.5));
  const SphereSampler sampler(s, L, make_sphere_grid(12, 24), 2);
  const double target = s.partial_variance(L);
  std::vector<double> v, v2, ahat(L + 1, 0.0), ahat2(L + 1, 0.0);
  double sum = 0, sum2 = 0, lag = 0;
  for (int r = 0; r < reps; ++r) {
    const auto f = sampler.sample(77, std::uint32_t(r));
    const double x = f.at(37, 0);
    sum += x * x;
    sum2 += x * x * x * x;
    lag += x * f.at(37, 1);
    const auto a = estimate_angular_spectrum(f, 0, L);
    for (int l = 0; l <= L; ++l) {
      ahat[l] += a[l];
      ahat2[l] += a[l] * a[l];
    }
  }
  const double mean = sum / reps, se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  EXPECT_LT(std::abs(mean - target), 4 * se);
  for (int l = 0; l <= L; ++l) {
    const double m = ahat[l] / reps, e = std::sqrt((ahat2[l] / reps - m * m) / (reps - 1));
    EXPECT_LT(std::abs(m - s.A[l][0]), 4 * e) << "l = " << l;
  }
}

TEST(SpectrumCsv, RoundTrip) {
  const auto s = spectrum_from_model(example_ml(), 3, 5, {0.0, 0.5, 1.0});
  const std::string path = ::testing::TempDir() + "spectrum.csv";
  write_spectrum_csv(s, path);
  const auto back = load_spectrum_csv(path, 3);
  EXPECT_EQ(back.taus, s.taus);
  ASSERT_EQ(back.L(), s.L());
  for (int l = 0; l <= s.L(); ++l) EXPECT_EQ(back.A[l], s.A[l]);
  std::remove(path.c_str());
}

TEST(WhiteCov, ReferenceValues) {
  auto phi = [](double x) { return std::exp(-x); };
  auto psi = [](double x) { return std::pow(1 + x, 0.5); };
  EXPECT_DOUBLE_EQ(white_cov(0.0, 2.0, phi, psi, 1.5), 1.5 / psi(4.0));
  EXPECT_DOUBLE_EQ(white_cov(0.8, 0.0, phi, psi, 1.5), 1.5 * phi(0.8));
  for (double u : {0.0, 1.0, 3.0}) {
    double prev = INFINITY;
    for (int k = 0; k <= 100; ++k) {
      const double v = white_cov(pi * k / 100, u, phi, psi, 1.0);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}
