#pragma once

// Configuration parsing, run manifests, CSV/report persistence and the
// column-schema self test.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cyledge/experiments.hpp"

namespace cyledge {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelParams params;
  std::string experiment;  // theorem1|theorem2|dispersion|spectrum|classify|flux_scan|fit
  std::vector<std::uint64_t> seeds;
  ExperimentOptions opts;
  std::vector<double> L_list;     // empty: single L from params
  std::vector<double> flux_grid;  // flux_scan
  int n_max = 2;                  // dispersion bands
  std::optional<std::pair<double, double>> k_range;
  bool flux_explicit = false;
  bool flux_auto_scanned = false;

  nlohmann::json to_json() const;
};

// Parses and validates a config (or a manifest wrapping one under "config").
// Applies defaults; an unset flux is filled by a coarse edge-spectra flux
// scan when the experiment needs the left/right degeneracy broken.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);

struct RunManifest {
  RunConfig config;
  std::string tool_version;
  std::string timestamp;
  nlohmann::json derived;  // window bounds, lattice cardinality, basis sizes
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

RunManifest make_manifest(const RunConfig& cfg);

// Report directory layout: manifest.json, realizations.csv, states.csv,
// aggregate.csv.
void write_report(const std::filesystem::path& dir, const ExperimentReport& rep,
                  const RunManifest& manifest);

void write_flux_scan(const std::filesystem::path& dir, const FluxScanResult& res,
                     const RunManifest& manifest);

void write_dispersion(const std::filesystem::path& dir,
                      const std::vector<DispersionBranch>& left,
                      const std::vector<DispersionBranch>& right,
                      const RunManifest& manifest);

void write_spectrum(const std::filesystem::path& dir,
                    const std::vector<EigenRecord>& records,
                    WindowLabel label, const RunManifest& manifest);

void write_fit(const std::filesystem::path& dir, const DecayFit& fit,
               DecayModel model);

// Raw eigenvector dump: "CYLV" magic, version, dimension, n_x, n_modes,
// record count, then per record the energy and mode-major coefficients.
void write_vectors_binary(const std::filesystem::path& path,
                          const std::vector<EigenRecord>& records,
                          const Basis& basis);

// Ensemble aggregates used by aggregate.csv and the acceptance suite.
struct Aggregates {
  int n_seeds = 0;
  int n_failures = 0;
  double partition_ok_fraction = 0.0;
  double median_edge_shift = 0.0;
  double edge_current_ok_fraction = 0.0;   // all edge-set |J| >= edge_min
  double bulk_current_ok_fraction = 0.0;   // all bulk-set |J| <= bulk_max
  double minslice_ok_fraction = 0.0;       // bulk min_slice <= 1e-2 * baseline
  double median_max_bulk_current = 0.0;
  double unmatched_zero_fraction = 0.0;    // theorem 2
  double matched_edge_current_fraction = 0.0;  // theorem 2
  double median_max_current_dev = 0.0;     // theorem 2
};
Aggregates aggregate_report(const ExperimentReport& rep);

// Validates the headers and column counts of every known CSV in a report
// directory tree. Returns the problems found (empty = pass).
std::vector<std::string> schema_selftest(const std::filesystem::path& dir);

}  // namespace cyledge
