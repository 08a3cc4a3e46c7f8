// rdc: simulate, certify and probe reaction-diffusion-convection systems.

#include "rdc/certifier.hpp"
#include "rdc/dynamics_probe.hpp"
#include "rdc/errors.hpp"
#include "rdc/monodromy.hpp"
#include "rdc/reporting.hpp"

#include <CLI11.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>

namespace fs = std::filesystem;
using namespace rdc;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitFail = 2;
constexpr int kExitInconclusive = 3;

struct Overrides {
  std::string config_file;
  std::string output;
  std::string system;
  int N = 0;
  int snapshots = 0;
  double dt = 0.0;
  int64_t seed = -1;
  int workers = 0;
  std::vector<std::string> sets;
};

// "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_set(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got " + assignment);
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig resolve(const Overrides& o) {
  Json j = o.config_file.empty() ? Json::object() : read_json(o.config_file);
  if (!o.system.empty()) j["system"] = {{"registry", o.system}, {"params", Json::object()}};
  if (o.N > 0) j["grid"]["N"] = o.N;
  if (o.snapshots > 0) j["integrator"]["n_snapshots"] = o.snapshots;
  if (o.dt > 0.0) j["integrator"]["dt"] = o.dt;
  if (o.seed >= 0) j["integrator"]["seed"] = o.seed;
  if (!o.output.empty()) j["output"] = o.output;
  for (const auto& s : o.sets) apply_set(j, s);
  RunConfig c = config_from_json(j);
  c.validate();
  return c;
}

Json stamp(Json report, const std::string& hash) {
  report["config_hash"] = hash;
  report["version"] = kVersion;
  return report;
}

void write_config(const RunConfig& c, const std::string& hash) {
  fs::create_directories(c.output);
  write_json(c.output / "config.json", stamp(to_json(c), hash));
}

AttractorSample load_store(const RunConfig& c, const std::string& store, Json* manifest) {
  return read_store(store.empty() ? c.output / "store" : fs::path(store), manifest);
}

int cmd_simulate(const RunConfig& c) {
  const std::string hash = config_hash(c);
  write_config(c, hash);
  const RDCSystem sys = c.make_system();
  const Grid grid = c.grid();
  const DissipativityReport diss = probe_dissipativity(sys, grid, c.probe_radii, c.integrator);
  write_json(c.output / "dissipativity.json", stamp(to_json(diss), hash));
  const AttractorSample sample = sample_attractor(sys, grid, c.integrator);
  write_store(c.output / "store", sample, c.integrator.alpha, sys.D(),
              {{"config_hash", hash}, {"version", kVersion}, {"system", c.system}});
  std::cout << "dissipativity: " << (diss.entered_ball ? "entered ball" : "did not enter ball")
            << ", absorbing radius " << diss.absorbing_radius << "\n"
            << "store: " << sample.snapshots.size() << " snapshots in " << (c.output / "store").string()
            << (sample.degenerate ? " (degenerate)" : "") << "\n";
  return diss.entered_ball ? kExitPass : kExitInconclusive;
}

int cmd_certify(const RunConfig& c, const std::string& store) {
  const std::string hash = config_hash(c);
  write_config(c, hash);
  Json manifest;
  const AttractorSample sample = load_store(c, store, &manifest);
  const CertificationReport rep = certify(c.make_system(), sample, c.certify);
  Json j = stamp(to_json(rep), hash);
  j["store_config_hash"] = manifest.value("config_hash", "");
  write_json(c.output / "certification.json", j);
  std::cout << "verdict: " << rep.verdict;
  if (!rep.route.empty()) std::cout << " via " << rep.route;
  if (rep.failing_stage != Stage::none) std::cout << " (failing stage " << to_string(rep.failing_stage) << ")";
  std::cout << "\n";
  if (rep.certified()) return kExitPass;
  return rep.verdict == "not_certified" ? kExitFail : kExitInconclusive;
}

int cmd_probe(const RunConfig& c, const std::string& store) {
  const std::string hash = config_hash(c);
  write_config(c, hash);
  Json manifest;
  const AttractorSample sample = load_store(c, store, &manifest);
  const RDCSystem sys = c.make_system();
  const FlReport fl = probe_Fl(sys, sample, c.fl);
  const auto sweep = sweep_GrF(sample, c.integrator.alpha, sys.D(), c.fl.floor);
  const DecompositionReport dec = probe_decomposition(sys, sample, c.decomposition);
  Json grf = Json::array();
  for (const auto& g : sweep) grf.push_back(to_json(g));
  Json j = {{"fl", to_json(fl)}, {"grf", grf}, {"decomposition", to_json(dec)}};
  j["store_config_hash"] = manifest.value("config_hash", "");
  write_json(c.output / "probe.json", stamp(j, hash));
  std::cout << summarize(Json(), Json(), j);
  return fl.inconclusive ? kExitInconclusive : kExitPass;
}

int cmd_report(const RunConfig& c) {
  if (!fs::is_directory(c.output)) throw IoError("no output directory " + c.output.string());
  auto load = [&](const char* name) {
    const fs::path p = c.output / name;
    return fs::exists(p) ? read_json(p) : Json();
  };
  const Json diss = load("dissipativity.json"), cert = load("certification.json"), probe = load("probe.json");
  const Json cfg = load("config.json");
  const std::string hash = cfg.is_null() ? config_hash(c) : cfg.value("config_hash", config_hash(c));
  if (!cert.is_null() && !cert["spectrum"].is_null()) {
    write_spectra(c.output / "spectra.dat", cert["spectrum"], hash);
    write_strips(c.output / "strips.dat", cert["spectrum"], hash);
  }
  if (!probe.is_null()) {
    write_grf(c.output / "grf.dat", probe["grf"], hash);
    write_fl(c.output / "fl.dat", probe["fl"], hash);
  }
  const std::string text = summarize(diss, cert, probe);
  std::ofstream(c.output / "summary.txt", std::ios::trunc) << text;
  std::cout << text;
  return kExitPass;
}

// Smooth random periodic generator with a few Fourier modes per entry.
MatrixCurve random_generator(int m, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<Mat> a(4, Mat(m, m));
  for (auto& x : a) x = Mat::NullaryExpr(m, m, [&] { return g(rng); });
  MatrixCurve B{"B", m, true, {}};
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * std::numbers::pi * i / n;
    B.values.push_back(a[0] + a[1] * std::cos(x) + a[2] * std::sin(x) + a[3] * std::cos(2 * x));
  }
  return B;
}

int cmd_selftest() {
  bool all = true;
  auto report = [&](const std::string& name, bool ok, double value) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << value << ")\n";
    all = all && ok;
  };
  std::mt19937_64 rng(17);
  const DiffusionMatrix D(Eigen::Vector2d(0.5, 1.0));
  const MatrixCurve B = random_generator(2, 64, rng);
  const MatrixCurve U = solve_U(B, D), V = solve_V(B, D);
  double pairing = 0.0;
  for (int i = 0; i < U.n_nodes(); ++i)
    pairing = std::max(pairing, (U.values[i] * V.values[i] - Mat::Identity(2, 2)).norm());
  report("monodromy inverse pairing", pairing <= 1e-9, pairing);

  double trace = 0.0;
  for (const Mat& b : B.values) trace += (D.inverse() * b).trace();
  const double expected = std::exp(-0.5 * trace / B.n_nodes());
  const double liouville = std::abs(U.at_one().determinant() - expected) / expected;
  report("Liouville determinant", liouville <= 1e-8, liouville);

  Mat P = Mat::Random(3, 3);
  const Mat pd = P * P.transpose() + 3.0 * Mat::Identity(3, 3);
  const LogSeries ls = matrix_log_series(pd);
  const double roundtrip = (ls.log.exp() - pd).norm() / pd.norm();
  report("matrix log round trip", roundtrip <= 1e-8, roundtrip);

  int mismatches = 0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Mat Q(2, 2);
    Q << u(rng), u(rng), u(rng), u(rng);
    const double disc = std::pow(Q(0, 0) - Q(1, 1), 2) + 4.0 * Q(0, 1) * Q(1, 0);
    const bool pass = check_prop51_matrix(Q, Prop51Variant::distinct).verdict == Verdict::pass;
    mismatches += pass != (disc > 0.0);
  }
  report("discriminant test", mismatches == 0, mismatches);

  double worst = 0.0;
  for (const auto& name : registry_names())
    worst = std::max(worst, derivative_consistency(builtin(name), 50, 1.0, 3));
  report("registry derivative consistency", worst <= 1e-6, worst);
  return all ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and certification of reaction-diffusion-convection systems on the circle"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Overrides o;
  std::string store;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_file, "JSON run configuration");
    sub->add_option("-o,--output", o.output, "Output directory");
    sub->add_option("--system", o.system, "Registry system name");
    sub->add_option("--N", o.N, "Grid points");
    sub->add_option("--snapshots", o.snapshots, "Snapshots per sample");
    sub->add_option("--dt", o.dt, "Time step");
    sub->add_option("--seed", o.seed, "Sampling seed");
    sub->add_option("--workers", o.workers, "Worker threads (overrides RDC_WORKERS)");
    sub->add_option("--set", o.sets, "Override a config field, e.g. certify.K=64");
  };
  auto* sim = app.add_subcommand("simulate", "Dissipativity probe and attractor sample store");
  auto* cert = app.add_subcommand("certify", "Certification pipeline on a stored sample");
  auto* probe = app.add_subcommand("probe", "Fl, GrF and decomposition probes on a stored sample");
  auto* rep = app.add_subcommand("report", "Summary and plot-data files from the reports in the output directory");
  auto* self = app.add_subcommand("selftest", "Quick internal consistency checks");
  for (auto* s : {sim, cert, probe, rep}) add_common(s);
  for (auto* s : {cert, probe}) s->add_option("--store", store, "Snapshot store (default <output>/store)");
  self->add_option("--workers", o.workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }
  if (o.workers > 0) setenv("RDC_WORKERS", std::to_string(o.workers).c_str(), 1);

  try {
    if (self->parsed()) return cmd_selftest();
    const RunConfig c = resolve(o);
    if (sim->parsed()) return cmd_simulate(c);
    if (cert->parsed()) return cmd_certify(c, store);
    if (probe->parsed()) return cmd_probe(c, store);
    return cmd_report(c);
  } catch (const std::exception& e) {
    std::cerr << "rdc: " << e.what() << "\n";
    return kExitError;
  }
}
