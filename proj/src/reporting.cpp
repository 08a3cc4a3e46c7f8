#include "rdc/reporting.hpp"

#include "rdc/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace rdc {

namespace {

template <class T>
void take(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void check_keys(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json integrator_json(const IntegratorConfig& c) {
  return {{"dt", c.dt},
          {"scheme", scheme_name(c.scheme)},
          {"t_transient", c.t_transient},
          {"t_sample", c.t_sample},
          {"n_snapshots", c.n_snapshots},
          {"seed", c.seed},
          {"n_trajectories", c.n_trajectories},
          {"decorrelation_steps", c.decorrelation_steps},
          {"init_radius", c.init_radius},
          {"alpha", c.alpha},
          {"blow_up", c.blow_up},
          {"t_probe", c.t_probe},
          {"probes_per_radius", c.probes_per_radius},
          {"hull_per_snapshot", c.hull_per_snapshot}};
}

void integrator_from(const Json& j, IntegratorConfig& c) {
  check_keys(j, "integrator",
             {"dt", "scheme", "t_transient", "t_sample", "n_snapshots", "seed", "n_trajectories",
              "decorrelation_steps", "init_radius", "alpha", "blow_up", "t_probe", "probes_per_radius",
              "hull_per_snapshot"});
  take(j, "dt", c.dt);
  if (j.contains("scheme")) c.scheme = parse_scheme(j["scheme"].get<std::string>());
  take(j, "t_transient", c.t_transient);
  take(j, "t_sample", c.t_sample);
  take(j, "n_snapshots", c.n_snapshots);
  take(j, "seed", c.seed);
  take(j, "n_trajectories", c.n_trajectories);
  take(j, "decorrelation_steps", c.decorrelation_steps);
  take(j, "init_radius", c.init_radius);
  take(j, "alpha", c.alpha);
  take(j, "blow_up", c.blow_up);
  take(j, "t_probe", c.t_probe);
  take(j, "probes_per_radius", c.probes_per_radius);
  take(j, "hull_per_snapshot", c.hull_per_snapshot);
}

Json cauchy_json(const CauchyOptions& c) {
  return {{"substeps", c.substeps}, {"tolerance", c.tolerance}, {"max_refinements", c.max_refinements}};
}

void cauchy_from(const Json& j, CauchyOptions& c) {
  check_keys(j, "cauchy", {"substeps", "tolerance", "max_refinements"});
  take(j, "substeps", c.substeps);
  take(j, "tolerance", c.tolerance);
  take(j, "max_refinements", c.max_refinements);
}

}  // namespace

void RunConfig::validate() const {
  if (N < 8 || N % 2 != 0) throw ConfigError("N must be even and >= 8");
  if (dealias_num <= 0 || dealias_den <= 0 || dealias_num > dealias_den)
    throw ConfigError("dealias fraction must lie in (0, 1]");
  integrator.validate();
  for (double r : probe_radii)
    if (!(r > 0.0)) throw ConfigError("probe radii must be positive");
  if (certify.K < 1) throw ConfigError("certify.K must be >= 1");
  if (certify.n_quad < 1) throw ConfigError("certify.n_quad must be >= 1");
  if (certify.max_pairs < 1) throw ConfigError("certify.max_pairs must be >= 1");
  if (!(certify.alpha > 0.0 && certify.alpha < 1.0)) throw ConfigError("certify.alpha must lie in (0, 1)");
  if (certify.cauchy.substeps < 1 || !(certify.cauchy.tolerance > 0.0))
    throw ConfigError("cauchy substeps and tolerance must be positive");
  if (!(fl.t_max > 0.0) || !(fl.dt > 0.0) || fl.record_every < 1 || fl.max_pairs < 1)
    throw ConfigError("fl options must be positive");
  if (decomposition.max_pairs < 1 || decomposition.n_cheb < 4 || decomposition.omegas.empty())
    throw ConfigError("decomposition options out of range");
  make_system();
}

RDCSystem RunConfig::make_system() const { return system_from_json(system); }

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  check_keys(j, "config",
             {"system", "grid", "integrator", "probe_radii", "certify", "fl", "decomposition", "output"});
  if (j.contains("system")) c.system = j["system"];
  if (j.contains("grid")) {
    const Json& g = j["grid"];
    check_keys(g, "grid", {"N", "dealias"});
    take(g, "N", c.N);
    if (g.contains("dealias")) {
      const auto d = g["dealias"].get<std::vector<int>>();
      if (d.size() != 2) throw ConfigError("grid.dealias must be [num, den]");
      c.dealias_num = d[0];
      c.dealias_den = d[1];
    }
  }
  if (j.contains("integrator")) integrator_from(j["integrator"], c.integrator);
  take(j, "probe_radii", c.probe_radii);
  if (j.contains("certify")) {
    const Json& s = j["certify"];
    check_keys(s, "certify",
               {"K", "alpha", "theta", "n_quad", "max_pairs", "box_factor", "box_points", "hull_seed",
                "pair_budget", "anchors", "commutator_seed", "cauchy"});
    take(s, "K", c.certify.K);
    take(s, "alpha", c.certify.alpha);
    take(s, "theta", c.certify.theta);
    take(s, "n_quad", c.certify.n_quad);
    take(s, "max_pairs", c.certify.max_pairs);
    take(s, "box_factor", c.certify.hull.box_factor);
    take(s, "box_points", c.certify.hull.box_points);
    take(s, "hull_seed", c.certify.hull.seed);
    take(s, "pair_budget", c.certify.commutator.pair_budget);
    take(s, "anchors", c.certify.commutator.anchors);
    take(s, "commutator_seed", c.certify.commutator.seed);
    if (s.contains("cauchy")) cauchy_from(s["cauchy"], c.certify.cauchy);
  }
  if (j.contains("fl")) {
    const Json& s = j["fl"];
    check_keys(s, "fl", {"t_max", "dt", "scheme", "record_every", "floor", "max_pairs"});
    take(s, "t_max", c.fl.t_max);
    take(s, "dt", c.fl.dt);
    if (s.contains("scheme")) c.fl.scheme = parse_scheme(s["scheme"].get<std::string>());
    take(s, "record_every", c.fl.record_every);
    take(s, "floor", c.fl.floor);
    take(s, "max_pairs", c.fl.max_pairs);
  }
  if (j.contains("decomposition")) {
    const Json& s = j["decomposition"];
    check_keys(s, "decomposition",
               {"n_quad", "max_pairs", "refine_to", "cross_check", "random_h", "omegas", "n_cheb", "seed"});
    take(s, "n_quad", c.decomposition.n_quad);
    take(s, "max_pairs", c.decomposition.max_pairs);
    take(s, "refine_to", c.decomposition.refine_to);
    take(s, "cross_check", c.decomposition.cross_check);
    take(s, "random_h", c.decomposition.random_h);
    take(s, "omegas", c.decomposition.omegas);
    take(s, "n_cheb", c.decomposition.n_cheb);
    take(s, "seed", c.decomposition.seed);
  }
  if (j.contains("output")) c.output = j["output"].get<std::string>();
  // the alpha of the probes follows the integrator
  c.fl.alpha = c.integrator.alpha;
  return c;
}

Json to_json(const RunConfig& c) {
  const auto& s = c.certify;
  const auto& d = c.decomposition;
  return {{"system", c.system},
          {"grid", {{"N", c.N}, {"dealias", {c.dealias_num, c.dealias_den}}}},
          {"integrator", integrator_json(c.integrator)},
          {"probe_radii", c.probe_radii},
          {"certify",
           {{"K", s.K},
            {"alpha", s.alpha},
            {"theta", s.theta},
            {"n_quad", s.n_quad},
            {"max_pairs", s.max_pairs},
            {"box_factor", s.hull.box_factor},
            {"box_points", s.hull.box_points},
            {"hull_seed", s.hull.seed},
            {"pair_budget", s.commutator.pair_budget},
            {"anchors", s.commutator.anchors},
            {"commutator_seed", s.commutator.seed},
            {"cauchy", cauchy_json(s.cauchy)}}},
          {"fl",
           {{"t_max", c.fl.t_max},
            {"dt", c.fl.dt},
            {"scheme", scheme_name(c.fl.scheme)},
            {"record_every", c.fl.record_every},
            {"floor", c.fl.floor},
            {"max_pairs", c.fl.max_pairs}}},
          {"decomposition",
           {{"n_quad", d.n_quad},
            {"max_pairs", d.max_pairs},
            {"refine_to", d.refine_to},
            {"cross_check", d.cross_check},
            {"random_h", d.random_h},
            {"omegas", d.omegas},
            {"n_cheb", d.n_cheb},
            {"seed", d.seed}}},
          {"output", c.output.string()}};
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

std::string config_hash(const RunConfig& c) {
  Json j = to_json(c);
  j.erase("output");
  return sha256_hex(j.dump());
}

Json to_json(const DissipativityReport& r) {
  Json probes = Json::array();
  for (const auto& p : r.probes) {
    Json j = {{"radius", p.radius},
              {"seed", p.seed},
              {"failed", p.failed},
              {"t_entry", p.t_entry},
              {"final_norm", p.norms.empty() ? 0.0 : p.norms.back()}};
    if (p.failed) j["fault"] = p.fault;
    probes.push_back(j);
  }
  return {{"entered_ball", r.entered_ball}, {"absorbing_radius", r.absorbing_radius}, {"probes", probes}};
}

std::string plot_header(const std::string& hash, const std::string& columns) {
  return "# config_hash=" + hash + " version=" + kVersion + "\n# " + columns + "\n";
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw IoError("cannot write " + file.string());
  return os;
}

}  // namespace

void write_spectra(const std::filesystem::path& file, const Json& spectrum, const std::string& hash) {
  auto os = open_out(file);
  os << plot_header(hash, "pair k j re_lambda im_lambda");
  for (const auto& p : spectrum.value("lattice", Json::array()))
    os << p[0].get<int>() << ' ' << p[1].get<int>() << ' ' << p[2].get<int>() << ' ' << fmt(p[3].get<double>())
       << ' ' << fmt(p[4].get<double>()) << '\n';
}

void write_strips(const std::filesystem::path& file, const Json& spectrum, const std::string& hash) {
  auto os = open_out(file);
  os << plot_header(hash, "index a xi");
  for (const auto& st : spectrum.value("strips", Json::array()))
    os << st.at("k").get<int>() << ' ' << fmt(st.at("a").get<double>()) << ' ' << fmt(st.at("xi").get<double>())
       << '\n';
}

void write_grf(const std::filesystem::path& file, const Json& sweep, const std::string& hash) {
  auto os = open_out(file);
  os << plot_header(hash, "n_keep min_ratio");
  for (const auto& g : sweep) os << g.at("n_keep").get<int>() << ' ' << fmt(g.at("min_ratio").get<double>()) << '\n';
}

void write_fl(const std::filesystem::path& file, const Json& fl, const std::string& hash) {
  auto os = open_out(file);
  os << plot_header(hash, "pair t log_ratio (pair -1: envelope log M + kappa t)");
  double t_end = 0.0;
  const Json series = fl.value("series", Json::array());
  for (std::size_t p = 0; p < series.size(); ++p) {
    const auto t = series[p].at("t").get<std::vector<double>>();
    const auto y = series[p].at("log_ratio").get<std::vector<double>>();
    for (std::size_t i = 0; i < t.size(); ++i) os << p << ' ' << fmt(t[i]) << ' ' << fmt(y[i]) << '\n';
    if (!t.empty()) t_end = std::max(t_end, t.back());
  }
  if (!fl.value("inconclusive", true)) {
    const double logM = std::log(fl.at("M_est").get<double>()), kappa = fl.at("kappa_est").get<double>();
    for (double t : {0.0, t_end}) os << -1 << ' ' << fmt(t) << ' ' << fmt(logM + kappa * t) << '\n';
  }
}

void write_json(const std::filesystem::path& file, const Json& j) {
  auto os = open_out(file);
  os << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot read " + file.string());
  try {
    Json j;
    is >> j;
    return j;
  } catch (const Json::exception& e) {
    throw IoError("malformed JSON in " + file.string() + ": " + e.what());
  }
}

std::string summarize(const Json& dissipativity, const Json& certification, const Json& probe) {
  std::ostringstream os;
  os << "rdc " << kVersion << " summary\n";
  if (dissipativity.is_null() && certification.is_null() && probe.is_null()) {
    os << "no reports found\n";
    return os.str();
  }
  if (!dissipativity.is_null()) {
    os << "dissipativity: " << (dissipativity.value("entered_ball", false) ? "entered ball" : "did not enter ball")
       << " (radius " << dissipativity.value("absorbing_radius", 0.0) << ", "
       << dissipativity.value("probes", Json::array()).size() << " probes)\n";
  }
  if (!certification.is_null()) {
    os << "certification: " << certification.value("verdict", "?");
    const std::string route = certification.value("route", "");
    if (!route.empty()) os << " via " << route;
    const std::string stage = certification.value("failing_stage", "none");
    if (stage != "none") os << ", failing stage " << stage;
    os << '\n';
    for (const auto& c : certification.value("conditions", Json::array()))
      os << "  " << c.value("condition", "?") << ": " << c.value("verdict", "?") << " (violation "
         << c.value("violation", 0.0) << ", tolerance " << c.value("tolerance", 0.0) << ")\n";
    if (certification.contains("spectrum") && !certification["spectrum"].is_null()) {
      const Json& s = certification["spectrum"];
      os << "  spectrum: omega " << s.value("omega", 0.0) << ", gap " << s.value("gap_verdict", "?") << ", "
         << s.value("strips", Json::array()).size() << " strips\n";
    }
    const std::string remark = certification.value("remark", "");
    if (!remark.empty()) os << "  note: " << remark << '\n';
  }
  if (!probe.is_null()) {
    if (probe.contains("fl")) {
      const Json& fl = probe["fl"];
      if (fl.value("inconclusive", true)) os << "Fl: inconclusive\n";
      else
        os << "Fl: M " << fl.value("M_est", 0.0) << ", kappa " << fl.value("kappa_est", 0.0) << " over "
           << fl.value("pairs_used", 0) << " pairs\n";
    }
    if (probe.contains("grf")) {
      const auto& sweep = probe["grf"];
      if (!sweep.empty())
        os << "GrF: min ratio " << sweep.front().value("min_ratio", 0.0) << " at n_keep "
           << sweep.front().value("n_keep", 0) << ", " << sweep.back().value("min_ratio", 0.0) << " at n_keep "
           << sweep.back().value("n_keep", 0) << '\n';
    }
    if (probe.contains("decomposition")) {
      const Json& d = probe["decomposition"];
      os << "decomposition: max residual " << d.value("max_residual", 0.0);
      if (d.value("cross_checked", 0) > 0)
        os << ", transformation residual " << d.value("max_transform_residual", 0.0) << ", omega spread "
           << d.value("max_omega_spread", 0.0);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace rdc
