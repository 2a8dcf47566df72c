#pragma once

// Gaussian field samplers on a space-time grid.
//
// ExactSampler factors the full covariance matrix once (pivoted LDL^T with
// diagonal jitter escalation) and then draws any number of replicates.
// CirculantSampler embeds the stationary covariance of the rectangular
// bounding box into a (d+1)-dimensional torus and synthesizes by FFT; negative
// embedding eigenvalues are clipped and their relative mass is reported.

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "covariance.hpp"
#include "grid.hpp"
#include "rng.hpp"

namespace lrdf {

enum class Generator { exact, circulant };

struct GridField {
  GridSpec grid;
  std::vector<double> values;  // values[t * n_space + cell]
  nlohmann::json model;
  std::uint64_t seed = 0;
  Generator generator = Generator::exact;
  double embedding_defect = 0.0;

  double at(std::size_t cell, int t) const { return values[std::size_t(t) * grid.n_space() + cell]; }
};

// ---------------------------------------------------------------------------
// Jittered square-root factor of a covariance matrix

/// A = (P^T F)(P^T F)^T with F lower triangular; jitter is the diagonal load used.
struct PsdFactor {
  Eigen::MatrixXd F;
  Eigen::PermutationMatrix<Eigen::Dynamic> P;
  double jitter = 0.0;

  Eigen::VectorXd apply(const Eigen::VectorXd& z) const {
    Eigen::VectorXd v = F.triangularView<Eigen::Lower>() * z;
    return P.transpose() * v;
  }
};

/// Pivoted LDL^T with diagonal jitter 0, 1e-12, 1e-11, ..., 1e-6; `what` names
/// the covariance in the error raised when every level fails.
inline PsdFactor psd_factor(const Eigen::MatrixXd& A, const std::string& what) {
  const Eigen::Index n = A.rows();
  for (double jit : {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    Eigen::MatrixXd B = A;
    B.diagonal().array() += jit;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(B);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd D = ldlt.vectorD();
    const double dmax = D.maxCoeff();
    if (!(dmax >= 0) || D.minCoeff() < -1e-10 * dmax) continue;
    PsdFactor out;
    out.F = ldlt.matrixL();
    for (Eigen::Index k = 0; k < n; ++k) out.F.col(k) *= std::sqrt(std::max(D(k), 0.0));
    out.P = ldlt.transpositionsP();
    out.jitter = jit;
    return out;
  }
  fail(ErrorKind::numeric, what + " is not positive semidefinite even with jitter 1e-6");
}

// ---------------------------------------------------------------------------
// Exact sampler

class ExactSampler {
 public:
  ExactSampler(const CovarianceModel& model, const GridSpec& grid, std::size_t cap = 4096)
      : model_(model), grid_(grid) {
    const std::size_t n = grid.n_points();
    require(n <= cap, ErrorKind::config,
            "exact sampler: " + std::to_string(n) + " grid points exceed the cap of " + std::to_string(cap));
    const std::size_t ns = grid.n_space();
    const int d = grid.d;
    Eigen::MatrixXd A(n, n);
    for (int a = 0; a < grid.nt; ++a)
      for (int b = 0; b < grid.nt; ++b) {
        const double tau = std::abs(a - b) * grid.dt();
        for (std::size_t i = 0; i < ns; ++i)
          for (std::size_t j = 0; j < ns; ++j) {
            double r2 = 0;
            for (int k = 0; k < d; ++k) {
              const double dx = grid.centers[i * d + k] - grid.centers[j * d + k];
              r2 += dx * dx;
            }
            A(a * ns + i, b * ns + j) = model(std::sqrt(r2), tau);
          }
      }
    factor_ = psd_factor(A, "exact sampler: covariance of model '" + model.family() + "' on this grid");
  }

  /// One replicate drawn from `rng`.
  std::vector<double> draw(PhiloxStream& rng) const {
    const Eigen::Index n = factor_.F.rows();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    const Eigen::VectorXd out = factor_.apply(z);
    return std::vector<double>(out.data(), out.data() + n);
  }

  GridField sample(std::uint64_t seed, std::uint32_t stream = 0, std::uint32_t substream = 0) const {
    PhiloxStream rng(seed, stream, substream);
    GridField f;
    f.grid = grid_;
    f.values = draw(rng);
    f.model = to_json(model_);
    f.seed = seed;
    f.generator = Generator::exact;
    return f;
  }

  double jitter() const { return factor_.jitter; }
  const GridSpec& grid() const { return grid_; }

 private:
  CovarianceModel model_;
  GridSpec grid_;
  PsdFactor factor_;
};

inline GridField simulate_grid_exact(const CovarianceModel& model, const GridSpec& grid, std::uint64_t seed,
                                     std::size_t cap = 4096) {
  return ExactSampler(model, grid, cap).sample(seed);
}

// ---------------------------------------------------------------------------
// Circulant embedding

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace detail

struct CirculantOptions {
  double defect_bound = 1e-3;
  int initial_factor = 2;          // embedding size per axis = factor * grid size
  std::size_t max_points = 1u << 24;  // memory cap on the torus
};

class CirculantSampler {
 public:
  CirculantSampler(const CovarianceModel& model, const GridSpec& grid, const CirculantOptions& opt = {})
      : model_(model), grid_(grid) {
    const int d = grid.d;
    for (int factor = opt.initial_factor;; factor *= 2) {
      dims_.assign(d + 1, 0);
      dims_[0] = factor * grid.nt;
      for (int a = 0; a < d; ++a) dims_[a + 1] = factor * grid.nx;
      std::size_t total = 1;
      for (int m : dims_) total *= std::size_t(m);
      require(total <= opt.max_points, ErrorKind::numeric,
              "circulant embedding: defect bound not met before the memory cap (defect " + std::to_string(defect_) +
                  "); enlarge the padding cap or use a coarser grid");
      build(total);
      if (defect_ <= opt.defect_bound) break;
    }
  }

  double defect() const { return defect_; }
  const std::vector<int>& dims() const { return dims_; }

  /// One replicate drawn from `rng` (real part of the synthesis).
  std::vector<double> draw(PhiloxStream& rng) const { return draw_pair(rng).first; }

  /// Real and imaginary parts of one synthesis: two independent replicates.
  std::pair<std::vector<double>, std::vector<double>> draw_pair(PhiloxStream& rng) const {
    std::vector<std::complex<double>> w(sqrt_lambda_.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double re = rng.normal(), im = rng.normal();
      w[k] = sqrt_lambda_[k] * std::complex<double>(re, im);
    }
    fftw_execute_dft(plan_.get(), reinterpret_cast<fftw_complex*>(w.data()), reinterpret_cast<fftw_complex*>(w.data()));
    std::pair<std::vector<double>, std::vector<double>> out;
    out.first.resize(index_.size());
    out.second.resize(index_.size());
    for (std::size_t k = 0; k < index_.size(); ++k) {
      out.first[k] = w[index_[k]].real();
      out.second[k] = w[index_[k]].imag();
    }
    return out;
  }

  GridField sample(std::uint64_t seed, std::uint32_t stream = 0, std::uint32_t substream = 0) const {
    PhiloxStream rng(seed, stream, substream);
    GridField f;
    f.grid = grid_;
    f.values = draw(rng);
    f.model = to_json(model_);
    f.seed = seed;
    f.generator = Generator::circulant;
    f.embedding_defect = defect_;
    return f;
  }

 private:
  // Row-major torus index with time as the slowest axis.
  std::size_t torus_index(int t, std::int64_t box_index) const {
    std::size_t idx = std::size_t(t);
    std::int64_t r = box_index;
    std::vector<int> sp(grid_.d);
    for (int a = 0; a < grid_.d; ++a) {
      sp[a] = int(r % grid_.nx);
      r /= grid_.nx;
    }
    for (int a = 0; a < grid_.d; ++a) idx = idx * dims_[a + 1] + std::size_t(sp[a]);
    return idx;
  }

  void build(std::size_t total) {
    const int d = grid_.d;
    std::vector<std::complex<double>> c(total);
    std::vector<int> k(d + 1, 0);
    const double h = grid_.h(), dt = grid_.dt();
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t r = idx;
      for (int a = d; a >= 0; --a) {
        k[a] = int(r % std::size_t(dims_[a]));
        r /= std::size_t(dims_[a]);
      }
      auto wrap = [&](int a) { return std::min(k[a], dims_[a] - k[a]); };
      double r2 = 0;
      for (int a = 1; a <= d; ++a) r2 += double(wrap(a)) * wrap(a);
      c[idx] = model_(h * std::sqrt(r2), dt * wrap(0));
    }
    plan_.reset();
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      plan_.reset(fftw_plan_dft(d + 1, dims_.data(), reinterpret_cast<fftw_complex*>(c.data()),
                                reinterpret_cast<fftw_complex*>(c.data()), FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED));
    }
    require(plan_ != nullptr, ErrorKind::numeric, "circulant embedding: FFTW planning failed");
    fftw_execute_dft(plan_.get(), reinterpret_cast<fftw_complex*>(c.data()), reinterpret_cast<fftw_complex*>(c.data()));
    double neg = 0, mass = 0;
    sqrt_lambda_.assign(total, 0.0);
    for (std::size_t i = 0; i < total; ++i) {
      const double lam = c[i].real();
      mass += std::abs(lam);
      if (lam < 0)
        neg -= lam;
      else
        sqrt_lambda_[i] = std::sqrt(lam / double(total));
    }
    defect_ = mass > 0 ? neg / mass : 0.0;
    const std::size_t ns = grid_.n_space();
    index_.resize(ns * grid_.nt);
    for (int t = 0; t < grid_.nt; ++t)
      for (std::size_t c = 0; c < ns; ++c) index_[std::size_t(t) * ns + c] = torus_index(t, grid_.mask[c]);
  }

  CovarianceModel model_;
  GridSpec grid_;
  std::vector<int> dims_;
  std::vector<double> sqrt_lambda_;
  std::vector<std::size_t> index_;  // grid point -> torus position
  std::unique_ptr<fftw_plan_s, detail::FftwPlanDeleter> plan_;
  double defect_ = 0.0;
};

inline GridField simulate_grid_fast(const CovarianceModel& model, const GridSpec& grid, std::uint64_t seed,
                                    const CirculantOptions& opt = {}) {
  return CirculantSampler(model, grid, opt).sample(seed);
}

// ---------------------------------------------------------------------------
// Empirical covariance check

struct Lag {
  std::vector<int> dx;  // spatial offset in cells
  int dt = 0;           // time offset in steps
};

struct CovCheckReport {
  std::vector<double> empirical, theoretical, studentized;
  double max_abs_studentized = 0.0;
  std::size_t replicates = 0;
};

/// Per replicate, averages Z(p) Z(p + lag) over all grid pairs realizing the lag,
/// then compares the replicate mean with the model covariance in standard errors.
inline CovCheckReport empirical_cov_check(const std::vector<GridField>& fields, const CovarianceModel& model,
                                          const std::vector<Lag>& lags) {
  require(fields.size() >= 100, ErrorKind::domain, "empirical_cov_check: need at least 100 replicates");
  const GridSpec& g = fields.front().grid;
  for (const auto& f : fields)
    require(f.grid.nx == g.nx && f.grid.nt == g.nt && f.grid.mask == g.mask, ErrorKind::domain,
            "empirical_cov_check: replicates must share one grid");
  // Box index -> masked cell.
  std::vector<std::int64_t> cell_of(g.box_cells(), -1);
  for (std::size_t c = 0; c < g.mask.size(); ++c) cell_of[g.mask[c]] = std::int64_t(c);
  CovCheckReport rep;
  rep.replicates = fields.size();
  for (const auto& lag : lags) {
    require(int(lag.dx.size()) == g.d, ErrorKind::domain, "empirical_cov_check: lag dimension mismatch");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t c = 0; c < g.mask.size(); ++c) {
      std::int64_t r = g.mask[c], target = 0, stride = 1;
      bool inside = true;
      for (int a = 0; a < g.d; ++a) {
        const int coord = int(r % g.nx) + lag.dx[a];
        r /= g.nx;
        if (coord < 0 || coord >= g.nx) inside = false;
        target += coord * stride;
        stride *= g.nx;
      }
      if (inside && cell_of[target] >= 0) pairs.emplace_back(c, std::size_t(cell_of[target]));
    }
    require(!pairs.empty() && lag.dt >= 0 && lag.dt < g.nt, ErrorKind::domain,
            "empirical_cov_check: lag not realized on the grid");
    double s = 0, s2 = 0;
    for (const auto& f : fields) {
      double acc = 0;
      std::size_t cnt = 0;
      for (int t = 0; t + lag.dt < g.nt; ++t)
        for (auto [p, q] : pairs) {
          acc += f.at(p, t) * f.at(q, t + lag.dt);
          ++cnt;
        }
      const double v = acc / double(cnt);
      s += v;
      s2 += v * v;
    }
    const double n = double(fields.size());
    const double mean = s / n, se = std::sqrt(std::max(s2 / n - mean * mean, 0.0) / (n - 1));
    double r2 = 0;
    for (int a = 0; a < g.d; ++a) r2 += double(lag.dx[a]) * lag.dx[a];
    const double theory = model(g.h() * std::sqrt(r2), lag.dt * g.dt());
    const double z = se > 0 ? (mean - theory) / se : (mean == theory ? 0.0 : INFINITY);
    rep.empirical.push_back(mean);
    rep.theoretical.push_back(theory);
    rep.studentized.push_back(z);
    rep.max_abs_studentized = std::max(rep.max_abs_studentized, std::abs(z));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json field_header(const GridField& f) {
  nlohmann::json j = to_json(f.grid);
  j["dtype"] = "<f8";
  j["layout"] = "time-major: value[t * masked_cells + cell]";
  j["seed"] = f.seed;
  j["generator"] = f.generator == Generator::exact ? "exact" : "circulant";
  j["embedding_defect"] = f.embedding_defect;
  j["model"] = f.model;
  return j;
}

struct BinaryRecord {
  nlohmann::json header;
  std::vector<double> values;
};

/// `magic` line, one JSON header line (with "count"), then little-endian 64-bit floats.
inline void write_binary_record(const std::string& path, const std::string& magic, nlohmann::json header,
                                const std::vector<double>& values) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorKind::io, "write_binary_record: cannot open " + path);
  header["count"] = values.size();
  os << magic << '\n' << header.dump() << '\n';
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
  require(bool(os), ErrorKind::io, "write_binary_record: write failed for " + path);
}

inline BinaryRecord read_binary_record(const std::string& path, const std::string& magic) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorKind::io, "read_binary_record: cannot open " + path);
  std::string line, header;
  std::getline(is, line);
  require(line == magic, ErrorKind::io, "read_binary_record: expected magic " + magic + " in " + path);
  std::getline(is, header);
  BinaryRecord out;
  out.header = nlohmann::json::parse(header);
  const std::size_t n = out.header.at("count").get<std::size_t>();
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    require(bool(is), ErrorKind::io, "read_binary_record: truncated data in " + path);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
    std::memcpy(&out.values[k], &bits, sizeof bits);
  }
  return out;
}

inline void write_field_binary(const GridField& f, const std::string& path) {
  write_binary_record(path, "STFIELD1", field_header(f), f.values);
}

inline BinaryRecord read_field_binary(const std::string& path) { return read_binary_record(path, "STFIELD1"); }

/// Small-grid CSV: t,cell,x_1..x_d,value.
inline void write_field_csv(const GridField& f, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "write_field_csv: cannot open " + path);
  os.precision(17);
  os << "t,cell";
  for (int a = 0; a < f.grid.d; ++a) os << ",x" << a + 1;
  os << ",value\n";
  for (int t = 0; t < f.grid.nt; ++t)
    for (std::size_t c = 0; c < f.grid.n_space(); ++c) {
      os << f.grid.time_of(t) << ',' << c;
      for (int a = 0; a < f.grid.d; ++a) os << ',' << f.grid.centers[c * f.grid.d + a];
      os << ',' << f.at(c, t) << '\n';
    }
  require(bool(os), ErrorKind::io, "write_field_csv: write failed for " + path);
}

}  // namespace lrdf
