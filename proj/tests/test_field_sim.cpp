#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lrdf/field_sim.hpp"

using namespace lrdf;

namespace {

const CovarianceModel kExp = ExponentialBaseline{1.0, 1.0};

struct Moments {
  double mean = 0, se = 0;
};

// Replicate mean of x*y and its standard error.
Moments product_moments(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0, s2 = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] * y[i];
    s += v;
    s2 += v * v;
  }
  Moments m;
  m.mean = s / n;
  m.se = std::sqrt((s2 / n - m.mean * m.mean) / (n - 1));
  return m;
}

double center_distance(const GridSpec& g, std::size_t a, std::size_t b) {
  double r2 = 0;
  for (int k = 0; k < g.d; ++k) {
    const double dx = g.centers[a * g.d + k] - g.centers[b * g.d + k];
    r2 += dx * dx;
  }
  return std::sqrt(r2);
}

template <class Sampler>
std::vector<GridField> draws(const Sampler& s, int reps, std::uint64_t seed) {
  std::vector<GridField> out;
  for (int r = 0; r < reps; ++r) out.push_back(s.sample(seed, std::uint32_t(r)));
  return out;
}

}  // namespace

TEST(ExactSampler, Deterministic) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 4.0, 4, 4);
  const ExactSampler s(kExp, g);
  const auto a = s.sample(7), b = s.sample(7), c = s.sample(8);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_EQ(a.values.size(), g.n_points());
}

TEST(ExactSampler, ConstantHookGivesConstantField) {
  const auto g = make_grid(2, BodyShape::ball, 0.5, 4.0, 6, 5);
  const auto f = simulate_grid_exact(ConstantOne{}, g, 3);
  for (double v : f.values) EXPECT_NEAR(v, f.values.front(), 1e-5);
}

TEST(ExactSampler, CapEnforced) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 4.0, 16, 20);
  try {
    ExactSampler s(kExp, g);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(ExactSampler, PairCovariancesMatchModel) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 4.0, 4, 4);
  const ExactSampler s(kExp, g);
  const int reps = 2000;
  // (cell a, time a, cell b, time b)
  const int probes[][4] = {{0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 5, 0}, {3, 0, 3, 1}, {0, 1, 15, 3}};
  std::vector<std::vector<double>> xs(5), ys(5);
  for (int r = 0; r < reps; ++r) {
    const auto f = s.sample(11, std::uint32_t(r));
    for (int p = 0; p < 5; ++p) {
      xs[p].push_back(f.at(probes[p][0], probes[p][1]));
      ys[p].push_back(f.at(probes[p][2], probes[p][3]));
    }
  }
  for (int p = 0; p < 5; ++p) {
    const double z = center_distance(g, probes[p][0], probes[p][2]);
    const double tau = std::abs(probes[p][1] - probes[p][3]) * g.dt();
    const double expect = std::exp(-z - tau);
    const auto m = product_moments(xs[p], ys[p]);
    EXPECT_LT(std::abs(m.mean - expect), 3.5 * m.se) << "probe " << p << " mean " << m.mean << " expect " << expect;
  }
}

TEST(CirculantSampler, DefectWithinBoundAndDeterministic) {
  const auto g = make_grid(2, BodyShape::ball, 0.0, 8.0, 8, 8);
  const CirculantSampler s(kExp, g);
  EXPECT_LE(s.defect(), 1e-3);
  EXPECT_EQ(s.dims().size(), 3u);
  EXPECT_GE(s.dims()[0], 16);
  const auto a = s.sample(5), b = s.sample(5);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values.size(), g.n_points());
}

TEST(CirculantSampler, ExponentialEmbedsWithoutDefect) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 8.0, 8, 8);
  EXPECT_EQ(CirculantSampler(kExp, g).defect(), 0.0);
}

TEST(CirculantSampler, AgreesWithExactOnSmallGrid) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 8.0, 8, 8);
  const CirculantSampler fast(kExp, g);
  const ExactSampler exact(kExp, g);
  const int reps = 3000;
  std::vector<std::vector<double>> fv, ev;
  for (int r = 0; r < reps / 2; ++r) {
    PhiloxStream rng(21, std::uint32_t(r));
    auto [a, b] = fast.draw_pair(rng);
    fv.push_back(std::move(a));
    fv.push_back(std::move(b));
  }
  for (int r = 0; r < reps; ++r) ev.push_back(exact.sample(22, std::uint32_t(r)).values);
  const std::size_t ns = g.n_space();
  auto point = [&](int cell, int t) { return std::size_t(t) * ns + std::size_t(cell); };
  // Ten per-cell variances (p == q) and ten pair covariances.
  std::vector<std::pair<std::size_t, std::size_t>> probes;
  for (int k = 0; k < 10; ++k) probes.emplace_back(point(7 * k, k % 8), point(7 * k, k % 8));
  const int pairs[][4] = {{0, 0, 1, 0},  {9, 2, 18, 2}, {27, 0, 27, 1}, {0, 0, 63, 7}, {12, 3, 21, 5},
                          {35, 4, 36, 4}, {8, 0, 16, 0}, {40, 6, 41, 7}, {5, 1, 13, 2}, {63, 7, 62, 6}};
  for (const auto& p : pairs) probes.emplace_back(point(p[0], p[1]), point(p[2], p[3]));
  for (const auto& [p, q] : probes) {
    std::vector<double> fx, fy, ex, ey;
    for (int r = 0; r < reps; ++r) {
      fx.push_back(fv[r][p]);
      fy.push_back(fv[r][q]);
      ex.push_back(ev[r][p]);
      ey.push_back(ev[r][q]);
    }
    const auto mf = product_moments(fx, fy), me = product_moments(ex, ey);
    EXPECT_LT(std::abs(mf.mean - me.mean), 4 * std::hypot(mf.se, me.se)) << "points " << p << "," << q;
  }
}

TEST(CirculantSampler, EmpiricalCovarianceCheckPasses) {
  const auto g = make_grid(2, BodyShape::ball, 0.0, 8.0, 8, 8);
  const CirculantSampler s(kExp, g);
  const auto fields = draws(s, 400, 9);
  const std::vector<Lag> lags = {{{0, 0}, 0}, {{1, 0}, 0}, {{1, 1}, 0}, {{0, 0}, 2}, {{2, 1}, 3}};
  const auto rep = empirical_cov_check(fields, kExp, lags);
  EXPECT_LT(rep.max_abs_studentized, 4.0);
  EXPECT_EQ(rep.replicates, 400u);
}

TEST(CirculantSampler, DefectBoundViolationIsAnError) {
  // Slowly decaying covariance on a fine 3-D grid: the clipped spectral mass
  // stays above the bound at every padding admitted by the memory cap.
  const auto g = make_grid(3, BodyShape::cube, 0.0, 4.0, 4, 6);
  try {
    CirculantSampler s(Separable{1.0, 0.0, 0.4, 0.0}, g);
    FAIL() << "expected an embedding-defect error, defect " << s.defect();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
    EXPECT_NE(std::string(e.what()).find("enlarge"), std::string::npos);
  }
}

TEST(ExactSampler, MarginalLaw) {
  const auto g = make_grid(2, BodyShape::ball, 0.0, 4.0, 4, 3);
  const ExactSampler s(Separable{1.0, 0.0, 0.4, 0.0}, g);
  const int reps = 1000;
  std::vector<double> sum(g.n_points(), 0.0), sum2(g.n_points(), 0.0), sum4(g.n_points(), 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto f = s.sample(31, std::uint32_t(r));
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      const double v = f.values[k];
      sum[k] += v;
      sum2[k] += v * v;
      sum4[k] += v * v * v * v;
    }
  }
  for (std::size_t k = 0; k < g.n_points(); ++k) {
    const double mean = sum[k] / reps, m2 = sum2[k] / reps;
    EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(double(reps))) << k;
    const double se_var = std::sqrt((sum4[k] / reps - m2 * m2) / (reps - 1));
    EXPECT_LT(std::abs(m2 - 1.0), 4.0 * se_var) << k;
  }
}

TEST(EmpiricalCovCheck, DetectsWrongModel) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 4.0, 4, 4);
  const ExactSampler s(kExp, g);
  const auto fields = draws(s, 400, 13);
  const std::vector<Lag> lags = {{{1, 0}, 0}, {{0, 0}, 1}};
  EXPECT_LT(empirical_cov_check(fields, kExp, lags).max_abs_studentized, 4.0);
  const CovarianceModel wrong = ExponentialBaseline{0.2, 0.2};
  EXPECT_GT(empirical_cov_check(fields, wrong, lags).max_abs_studentized, 10.0);
}

TEST(EmpiricalCovCheck, RejectsTooFewReplicates) {
  EXPECT_THROW(empirical_cov_check({}, kExp, {{{0, 0}, 0}}), Error);
  const auto g = make_grid(2, BodyShape::cube, 0.0, 4.0, 4, 4);
  const auto fields = draws(ExactSampler(kExp, g), 99, 1);
  try {
    empirical_cov_check(fields, kExp, {{{0, 0}, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(FieldExport, BinaryRoundTrip) {
  const auto g = make_grid(2, BodyShape::ball, 0.5, 4.0, 6, 3);
  const auto f = simulate_grid_fast(kExp, g, 17);
  const std::string path = ::testing::TempDir() + "field.bin";
  write_field_binary(f, path);
  std::ifstream is(path, std::ios::binary);
  std::string magic;
  std::getline(is, magic);
  EXPECT_EQ(magic, "STFIELD1");
  const auto back = read_field_binary(path);
  EXPECT_EQ(back.values, f.values);
  EXPECT_EQ(back.header.at("seed").get<std::uint64_t>(), 17u);
  EXPECT_EQ(back.header.at("generator").get<std::string>(), "circulant");
  EXPECT_EQ(back.header.at("model").at("family").get<std::string>(), "exponential");
  EXPECT_EQ(back.header.at("masked_cells").get<std::size_t>(), g.n_space());
  std::remove(path.c_str());
}

TEST(FieldExport, CsvRows) {
  const auto g = make_grid(2, BodyShape::cube, 0.0, 2.0, 2, 2);
  const auto f = simulate_grid_exact(kExp, g, 1);
  const std::string path = ::testing::TempDir() + "field.csv";
  write_field_csv(f, path);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,cell,x1,x2,value");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, int(g.n_points()));
  std::remove(path.c_str());
}
