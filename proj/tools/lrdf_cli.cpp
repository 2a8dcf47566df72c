// Command-line front end: density, cov, variance, simulate, clt, reduce, sphere, check-threshold.
// Exit codes: 0 success, 2 configuration/input error, 3 admissibility or regime rejection,
// 4 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lrdf/lrdf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lrdf;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  int threads = 0;
  std::string format = "csv";
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::admissibility:
      return 3;
    case ErrorKind::numeric:
      return 4;
    default:
      return 2;
  }
}

json read_json(const std::string& path) {
  require(!path.empty(), ErrorKind::config, "--config <path.json> is required for this subcommand");
  std::ifstream is(path);
  require(bool(is), ErrorKind::config, "cannot open config " + path);
  try {
    json j;
    is >> j;
    return j;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "config " + path + ": " + e.what());
  }
}

CovarianceModel model_of(const Globals& g) {
  const json j = read_json(g.config);
  return model_from_json(j.contains("model") ? j.at("model") : j);
}

// A table is emitted as CSV or as a JSON array of row objects, to --out/<name> or stdout.
struct Table {
  std::vector<std::string> cols;
  std::vector<std::vector<double>> rows;
};

void emit(const Globals& g, const std::string& name, const Table& t, const json& meta = json::object()) {
  std::ostringstream os;
  os.precision(17);
  if (g.format == "json") {
    json rows = json::array();
    for (const auto& r : t.rows) {
      json o;
      for (std::size_t k = 0; k < t.cols.size(); ++k) o[t.cols[k]] = std::isfinite(r[k]) ? json(r[k]) : json(nullptr);
      rows.push_back(o);
    }
    json doc = meta;
    doc["rows"] = rows;
    os << doc.dump(2) << '\n';
  } else {
    for (std::size_t k = 0; k < t.cols.size(); ++k) os << (k ? "," : "") << t.cols[k];
    os << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (k) os << ',';
        if (std::isfinite(r[k])) os << r[k];
      }
      os << '\n';
    }
  }
  if (g.out.empty()) {
    std::cout << os.str();
    return;
  }
  fs::create_directories(g.out);
  const fs::path p = fs::path(g.out) / (name + (g.format == "json" ? ".json" : ".csv"));
  std::ofstream f(p);
  require(bool(f), ErrorKind::io, "cannot write " + p.string());
  f << os.str();
  std::cerr << "wrote " << p.string() << '\n';
}

void emit_json(const Globals& g, const std::string& name, const json& doc) {
  if (g.out.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  fs::create_directories(g.out);
  const fs::path p = fs::path(g.out) / (name + ".json");
  std::ofstream f(p);
  require(bool(f), ErrorKind::io, "cannot write " + p.string());
  f << doc.dump(2) << '\n';
  std::cerr << "wrote " << p.string() << '\n';
}

BodyShape parse_shape(const std::string& s) {
  if (s == "ball") return BodyShape::ball;
  if (s == "cube") return BodyShape::cube;
  fail(ErrorKind::config, "unknown body '" + s + "' (expected ball or cube)");
}

ThresholdSpec parse_threshold(const std::string& kind, double u, double c, double eta) {
  if (kind == "fixed") return ThresholdSpec::fixed(u);
  if (kind == "loglog") return ThresholdSpec::loglog(c);
  if (kind == "logpow") return ThresholdSpec::logpow(eta, c);
  fail(ErrorKind::config, "unknown threshold kind '" + kind + "' (expected fixed, loglog or logpow)");
}

ExperimentConfig experiment_config(const Globals& g, bool require_tests) {
  auto cfg = config_from_json(read_json(g.config));
  if (g.seed_set) cfg.seed = g.seed;
  if (g.threads > 0) cfg.threads = g.threads;
  if (require_tests)
    require(cfg.replicates >= int(kMinTestSamples), ErrorKind::config,
            "replicates must be >= " + std::to_string(kMinTestSamples) + " for test subcommands");
  return cfg;
}

void print_experiment(const Globals& g, const ReplicateReport& r) {
  if (!g.out.empty()) {
    const auto p = export_report(r, g.out);
    std::cerr << "wrote " << p.report_json.string() << ", " << p.summary_csv.string() << " and plots\n";
  }
  if (g.format == "json")
    std::cout << to_json(r, false).dump(2) << '\n';
  else
    std::cout << summary_csv(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sojourn functionals of long-range dependent space-time random fields"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { g.seed = s, g.seed_set = true; }, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}));

  // density
  auto* density = app.add_subcommand("density", "inter-point distance densities");
  std::string dens_body = "ball";
  int dens_d = 2, dens_n = 101;
  double dens_scale = 1.0;
  density->add_option("--body", dens_body)->check(CLI::IsMember({"ball", "sphere", "cube"}));
  density->add_option("--d", dens_d);
  density->add_option("--scale", dens_scale);
  density->add_option("--points", dens_n, "number of z values on [0, diameter]")->check(CLI::Range(2, 1000000));

  // cov
  auto* cov = app.add_subcommand("cov", "evaluate a covariance model and check the LRD conditions");
  std::vector<double> cov_z{0.0, 0.5, 1.0, 2.0}, cov_tau{0.0, 1.0, 10.0, 100.0};
  int cov_m = 1, cov_d = 2;
  double cov_gamma = 0.0;
  bool cov_check = false;
  cov->add_option("--z", cov_z);
  cov->add_option("--tau", cov_tau);
  cov->add_option("--m", cov_m);
  cov->add_option("--d", cov_d);
  cov->add_option("--gamma", cov_gamma);
  cov->add_flag("--check", cov_check, "exit 3 when the LRD conditions reject the model");

  // variance
  auto* var = app.add_subcommand("variance", "sigma^2_{m,K}(T) over a T list");
  std::vector<double> var_T{10.0, 20.0, 40.0};
  int var_m = 1, var_d = 2;
  double var_gamma = 0.0;
  std::string var_body = "ball";
  var->add_option("--T", var_T);
  var->add_option("--m", var_m);
  var->add_option("--d", var_d);
  var->add_option("--gamma", var_gamma);
  var->add_option("--body", var_body)->check(CLI::IsMember({"ball", "cube"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate one field on a grid and export it");
  int sim_d = 2, sim_nx = 8, sim_nt = 8;
  double sim_T = 8.0, sim_gamma = 0.0;
  std::string sim_body = "ball", sim_gen = "circulant";
  sim->add_option("--d", sim_d);
  sim->add_option("--nx", sim_nx);
  sim->add_option("--nt", sim_nt);
  sim->add_option("--T", sim_T);
  sim->add_option("--gamma", sim_gamma);
  sim->add_option("--body", sim_body)->check(CLI::IsMember({"ball", "cube"}));
  sim->add_option("--generator", sim_gen)->check(CLI::IsMember({"exact", "circulant"}));

  // clt / reduce
  auto* clt = app.add_subcommand("clt", "Monte Carlo CLT experiment (config: experiment JSON)");
  auto* reduce = app.add_subcommand("reduce", "reduction-principle check (config: experiment JSON)");

  // sphere
  auto* sph = app.add_subcommand("sphere", "angular spectra, sphere fields and sphere sojourns");
  std::string sph_action = "spectrum";
  int sph_L = 16, sph_lat = 24, sph_lon = 48, sph_nt = 8;
  double sph_dt = 1.0, sph_u = 0.0;
  sph->add_option("action", sph_action)->check(CLI::IsMember({"spectrum", "simulate", "sojourn"}));
  sph->add_option("--L", sph_L);
  sph->add_option("--n-lat", sph_lat);
  sph->add_option("--n-lon", sph_lon);
  sph->add_option("--nt", sph_nt);
  sph->add_option("--dt", sph_dt);
  sph->add_option("--u", sph_u);

  // check-threshold
  auto* thr = app.add_subcommand("check-threshold", "admissibility of a moving threshold u(T)");
  std::string thr_kind = "loglog";
  double thr_u = 1.0, thr_c = 1.0, thr_eta = 0.5, thr_gamma = 0.0;
  int thr_m = 1, thr_d = 2;
  thr->add_option("--kind", thr_kind)->check(CLI::IsMember({"fixed", "loglog", "logpow"}));
  thr->add_option("--u", thr_u);
  thr->add_option("--c", thr_c);
  thr->add_option("--eta", thr_eta);
  thr->add_option("--m", thr_m);
  thr->add_option("--gamma", thr_gamma);
  thr->add_option("--d", thr_d);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (density->parsed()) {
      Table t{{"z", "density"}, {}};
      const double zmax = dens_body == "sphere" ? 2.0 : dens_body == "ball" ? 2.0 * dens_scale : std::sqrt(double(dens_d)) * dens_scale;
      std::optional<BodySpec> cube;
      if (dens_body == "cube") cube = dens_d == 2 ? unit_square_body() : monte_carlo_cube_body(dens_d);
      for (int i = 0; i < dens_n; ++i) {
        const double z = zmax * i / (dens_n - 1);
        double v = 0.0;
        if (dens_body == "ball") v = ball_distance_density(dens_d, dens_scale, z);
        else if (dens_body == "sphere") v = sphere_chord_density(dens_d, z);
        else v = convex_distance_density(*cube, dens_scale, z);
        t.rows.push_back({z, v});
      }
      emit(g, "density", t, {{"body", dens_body}, {"d", dens_d}, {"scale", dens_scale}});
    } else if (cov->parsed()) {
      const auto model = model_of(g);
      Table t{{"z", "tau", "C"}, {}};
      for (double z : cov_z)
        for (double tau : cov_tau) t.rows.push_back({z, tau, model(z, tau)});
      const auto lrd = check_lrd_conditions(model, cov_m, cov_gamma, cov_d);
      json check{{"verdict", to_string(lrd.verdict)},
                 {"regime", to_string(lrd.regime)},
                 {"delta1", {lrd.delta1.lo, lrd.delta1.hi}},
                 {"delta2", {lrd.delta2.lo, lrd.delta2.hi}},
                 {"explanation", lrd.explanation}};
      emit(g, "cov", t, {{"model", to_json(model)}, {"lrd_check", check}});
      std::cerr << "LRD check: " << check.dump() << '\n';
      if (cov_check && lrd.verdict == Verdict::rejected) return 3;
    } else if (var->parsed()) {
      const auto model = model_of(g);
      const BodySpec body = parse_shape(var_body) == BodyShape::ball ? unit_ball_body(var_d)
                            : var_d == 2                             ? unit_square_body()
                                                                     : monte_carlo_cube_body(var_d);
      Table t{{"T", "sigma2", "error", "converged"}, {}};
      for (double T : var_T) {
        const auto r = sigma2_body(var_m, body, var_gamma, T, model);
        t.rows.push_back({T, r.value, r.error, r.converged ? 1.0 : 0.0});
      }
      emit(g, "variance", t, {{"model", to_json(model)}, {"m", var_m}, {"body", body.name}, {"gamma", var_gamma}});
    } else if (sim->parsed()) {
      const auto model = model_of(g);
      const auto grid = make_grid(sim_d, parse_shape(sim_body), sim_gamma, sim_T, sim_nx, sim_nt);
      const auto f = sim_gen == "exact" ? simulate_grid_exact(model, grid, g.seed) : simulate_grid_fast(model, grid, g.seed);
      if (g.out.empty()) {
        std::cout << field_header(f).dump(2) << '\n';
      } else {
        fs::create_directories(g.out);
        const auto base = fs::path(g.out) / "field";
        write_field_binary(f, base.string() + ".bin");
        if (g.format == "csv") write_field_csv(f, base.string() + ".csv");
        std::cerr << "wrote " << base.string() << ".bin\n";
      }
    } else if (clt->parsed()) {
      print_experiment(g, run_clt_experiment(experiment_config(g, true)));
    } else if (reduce->parsed()) {
      print_experiment(g, run_reduction_check(experiment_config(g, true)));
    } else if (sph->parsed()) {
      const auto model = model_of(g);
      std::vector<double> taus;
      for (int k = 0; k < sph_nt; ++k) taus.push_back(k * sph_dt);
      const auto spec = spectrum_from_model(model, 3, sph_L, taus);
      if (sph_action == "spectrum") {
        Table t{{"l", "tau", "A"}, {}};
        for (int l = 0; l <= sph_L; ++l)
          for (std::size_t j = 0; j < taus.size(); ++j) t.rows.push_back({double(l), taus[j], spec.A[l][j]});
        emit(g, "spectrum", t, {{"model", to_json(model)}, {"tail_bound", spec.tail_bound(sph_L)}});
      } else {
        const auto f = simulate_sphere_field(spec, sph_L, make_sphere_grid(sph_lat, sph_lon), sph_nt, g.seed);
        if (sph_action == "simulate") {
          require(!g.out.empty(), ErrorKind::config, "sphere simulate needs --out");
          fs::create_directories(g.out);
          write_sphere_field_binary(f, (fs::path(g.out) / "sphere_field.bin").string());
        } else {
          const auto s = sphere_sojourn(f, sph_u);
          emit_json(g, "sphere_sojourn", {{"u", sph_u}, {"T", f.T()}, {"sojourn", s.raw}, {"seed", g.seed},
                                          {"expected", f.T() * normal_sf(sph_u) * 4 * pi},
                                          {"tail_bound", f.tail_bound}});
        }
      }
    } else if (thr->parsed()) {
      const auto model = model_of(g);
      const auto spec = parse_threshold(thr_kind, thr_u, thr_c, thr_eta);
      const auto check = check_threshold(spec, model, thr_m, thr_gamma, thr_d);
      json doc = to_json(check);
      doc["threshold"] = to_json(spec);
      emit_json(g, "threshold_check", doc);
      if (!check.admissible) {
        std::cerr << "threshold rejected: " << check.condition << '\n';
        return 3;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
