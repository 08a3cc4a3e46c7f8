#pragma once

#include "rdc/certifier.hpp"
#include "rdc/dynamics_probe.hpp"
#include "rdc/time_integrator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rdc {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a run depends on. Missing JSON fields keep their defaults.
struct RunConfig {
  /// {"registry": name, "params": {...}} or {"external": {...}}.
  Json system = {{"registry", "scalar_burgers"}, {"params", Json::object()}};
  int N = 128;
  int dealias_num = 2;
  int dealias_den = 3;
  IntegratorConfig integrator;
  std::vector<double> probe_radii = {0.1, 1.0, 10.0};
  CertifyConfig certify;
  FlOptions fl;
  DecompositionOptions decomposition;
  std::filesystem::path output = "rdc_out";

  /// Throws ConfigError on nonpositive sizes or an unknown system.
  void validate() const;
  RDCSystem make_system() const;
  Grid grid() const { return Grid(N, dealias_num, dealias_den); }
};

RunConfig config_from_json(const Json& j);
/// Fully resolved configuration, keys sorted.
Json to_json(const RunConfig& c);
/// SHA-256 of the compact dump of to_json(c), excluding the output directory.
std::string config_hash(const RunConfig& c);

std::string sha256_hex(const std::string& data);

Json to_json(const DissipativityReport& r);

/// "# config_hash=<hash> version=<version>" followed by a column legend.
std::string plot_header(const std::string& hash, const std::string& columns);

/// Plot-data files built from report JSON. Rows: pair k j re im.
void write_spectra(const std::filesystem::path& file, const Json& spectrum, const std::string& hash);
/// Rows: index a xi.
void write_strips(const std::filesystem::path& file, const Json& spectrum, const std::string& hash);
/// Rows: n_keep min_ratio.
void write_grf(const std::filesystem::path& file, const Json& sweep, const std::string& hash);
/// Rows: pair t log_ratio, then the envelope as pair -1.
void write_fl(const std::filesystem::path& file, const Json& fl, const std::string& hash);

/// Writes pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& file, const Json& j);
Json read_json(const std::filesystem::path& file);

/// Plain-text digest of whichever reports are present (null entries skipped).
std::string summarize(const Json& dissipativity, const Json& certification, const Json& probe);

}  // namespace rdc
