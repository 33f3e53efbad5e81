#include "cyledge/io.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <ctime>
#include <limits>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cyledge {

namespace fs = std::filesystem;

static const char* kToolVersion = "cyledge 0.1.0";

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* sigma_set_name(SigmaSet s) {
  switch (s) {
    case SigmaSet::Left: return "sigma_l";
    case SigmaSet::Bulk: return "sigma_b";
    case SigmaSet::Right: return "sigma_r";
  }
  return "?";
}

// column schemas, keyed by file name; every column name carries a unit
// suffix (_E energy, _v velocity, _len length, _amp amplitude, _1 pure
// number).
const std::map<std::string, std::string>& schemas() {
  static const std::map<std::string, std::string> s = {
      {"states.csv",
       "seed_1,set_1,energy_E,shift_E,ref_energy_E,ref_current_v,current_v,"
       "x_centroid_len,x_spread_len,min_slice_amp,y_bar_len,dy_slice_amp,"
       "label_1,residual_E"},
      {"realizations.csv",
       "seed_1,converged_1,n_window_1,n_left_1,n_bulk_1,n_right_1,"
       "bulk_ref_count_1,bulk_diag_matched_1,bulk_diag_median_shift_E,"
       "dist_bulk_left_E,dist_bulk_right_E,unmatched_perturbed_1,"
       "max_current_dev_v,max_edge_shift_E,failure_1"},
      {"aggregate.csv", "metric_1,value_1"},
      {"fluxscan.csv",
       "flux_quanta_1,n_left_1,n_right_1,min_spacing_E,scaled_spacing_EL"},
      {"dispersion_left.csv", "band_1,k_momentum,energy_E,current_v"},
      {"dispersion_right.csv", "band_1,k_momentum,energy_E,current_v"},
      {"spectrum.csv", "index_1,energy_E,residual_E,window_label_1"},
      {"fit.csv", "model_1,slope_1,intercept_1,rms_residual_1,n_used_1,degenerate_1"},
  };
  return s;
}

std::ofstream open_csv(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw std::runtime_error("cannot open " + (dir / name).string());
  f << schemas().at(name) << "\n";
  return f;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  cyledge::to_json(j, params);
  j["experiment"] = experiment;
  j["seeds"] = seeds;
  j["dx"] = opts.dx_target;
  j["solver"] = {{"tol", opts.solver.tol},
                 {"max_basis", opts.solver.max_basis},
                 {"max_restarts", opts.solver.max_restarts}};
  if (opts.thresholds)
    j["thresholds"] = {{"edge_min", opts.thresholds->edge_min},
                       {"bulk_max", opts.thresholds->bulk_max}};
  if (opts.window_override)
    j["window"] = {opts.window_override->lo, opts.window_override->hi};
  if (!L_list.empty()) j["L_list"] = L_list;
  if (!flux_grid.empty()) j["flux_grid"] = flux_grid;
  j["n_max"] = n_max;
  if (k_range) j["k_range"] = {k_range->first, k_range->second};
  j["flux_explicit"] = flux_explicit;
  j["flux_auto_scanned"] = flux_auto_scanned;
  return j;
}

RunConfig parse_config(const nlohmann::json& in) {
  nlohmann::json j = in;
  if (j.contains("config")) j = j["config"];  // accept a manifest

  RunConfig cfg;
  try {
    from_json(j, cfg.params);
    cfg.experiment = j.at("experiment").get<std::string>();
    // single "wall" block applies to both sides
    if (j.contains("wall")) {
      cfg.params.wall_left.c = cfg.params.wall_right.c = j["wall"].value("c", 1.0);
      cfg.params.wall_left.m = cfg.params.wall_right.m = j["wall"].value("m", 4);
    }
    if (j.contains("seeds")) {
      cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const int n = j.value("n_seeds", 32);
      const std::uint64_t base = j.value("seed_base", std::uint64_t{1});
      for (int i = 0; i < n; ++i) cfg.seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    cfg.opts.dx_target = j.value("dx", 0.1);
    if (j.contains("solver")) {
      cfg.opts.solver.tol = j["solver"].value("tol", 1e-9);
      cfg.opts.solver.max_basis = j["solver"].value("max_basis", 350);
      cfg.opts.solver.max_restarts = j["solver"].value("max_restarts", 8);
    }
    if (j.contains("thresholds")) {
      ClassificationThresholds t;
      t.edge_min = j["thresholds"].at("edge_min").get<double>();
      t.bulk_max = j["thresholds"].at("bulk_max").get<double>();
      t.validate();
      cfg.opts.thresholds = t;
    }
    if (j.contains("window")) {
      EnergyWindow w;
      w.lo = j["window"].at(0).get<double>();
      w.hi = j["window"].at(1).get<double>();
      w.label = WindowLabel::Custom;
      if (!(w.lo < w.hi)) throw ConfigError("window: lo < hi required");
      cfg.opts.window_override = w;
    }
    if (j.contains("L_list")) cfg.L_list = j["L_list"].get<std::vector<double>>();
    if (j.contains("flux_grid")) cfg.flux_grid = j["flux_grid"].get<std::vector<double>>();
    cfg.n_max = j.value("n_max", 2);
    if (j.contains("k_range"))
      cfg.k_range = {j["k_range"].at(0).get<double>(), j["k_range"].at(1).get<double>()};
    cfg.flux_explicit = j.contains("flux") || j.value("flux_explicit", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config schema violation: ") + e.what());
  }

  // validate invariants for the chosen experiment
  try {
    if (cfg.experiment == "theorem1") cfg.params.validate_theorem1();
    else if (cfg.experiment == "theorem2") cfg.params.validate_theorem2();
    else cfg.params.validate_common();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  // default flux: break the symmetric-wall degeneracy by a coarse scan
  const bool needs_flux =
      cfg.experiment == "theorem1" || cfg.experiment == "theorem2";
  const bool symmetric = cfg.params.wall_left.c == cfg.params.wall_right.c &&
                         cfg.params.wall_left.m == cfg.params.wall_right.m;
  if (!cfg.flux_explicit && needs_flux && symmetric) {
    if (j.value("flux_auto_scanned", false)) {
      // manifest round trip: flux value already resolved, keep it
      cfg.flux_auto_scanned = true;
    } else {
      std::vector<double> grid;
      for (int i = 0; i <= 5; ++i) grid.push_back(0.1 * i);
      // score candidate fluxes on the window the experiment will actually
      // solve in: for theorem2 the gap-window references decide both the
      // matching cap and whether the window holds any states at all
      ExperimentOptions scan_opts = cfg.opts;
      if (cfg.experiment == "theorem2" && !scan_opts.window_override)
        scan_opts.window_override = EnergyWindow::gap(cfg.params);
      const auto scan = hypothesis1_flux_scan(cfg.params, grid, scan_opts);
      cfg.params.flux = scan.best_flux;
      cfg.flux_auto_scanned = true;
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config file not found: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not well-formed JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{{"config", config.to_json()},
                        {"tool_version", tool_version},
                        {"timestamp", timestamp},
                        {"generator", "splitmix64-site/v1"},
                        {"derived", derived},
                        {"notes", notes}};
}

RunManifest make_manifest(const RunConfig& cfg) {
  RunManifest m;
  m.config = cfg;
  m.tool_version = kToolVersion;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  m.timestamp = buf;
  m.notes.push_back("log L buffer strips use the natural logarithm");
  m.notes.push_back(
      "gap window defined as (2B-delta, 2B+delta), inside the first spectral gap");

  const EnergyWindow band = EnergyWindow::band(cfg.params);
  const EnergyWindow gap = EnergyWindow::gap(cfg.params);
  m.derived["band_window"] = {band.lo, band.hi};
  m.derived["gap_window"] = {gap.lo, gap.hi};
  try {
    const Basis b = make_basis(
        cfg.params,
        cfg.experiment == "theorem2" ? BasisPurpose::GapWindow : BasisPurpose::BandWindow,
        cfg.opts.dx_target);
    m.derived["basis"] = {{"n_x", b.n_x}, {"dx", b.dx}, {"J", b.J},
                          {"x_min", b.x_min}, {"x_max", b.x_max}};
    const auto variant = cfg.experiment == "theorem2"
                             ? LatticeVariant::GapExperiment
                             : LatticeVariant::BandExperiment;
    m.derived["lattice_sites"] = build_lattice(variant, cfg.params.L).sites.size();
  } catch (const std::exception&) {
    // derived block is informational; leave partial on exotic configs
  }
  return m;
}

void write_report(const fs::path& dir, const ExperimentReport& rep,
                  const RunManifest& manifest) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "manifest.json");
    nlohmann::json j = manifest.to_json();
    for (const auto& n : rep.notes) j["notes"].push_back(n);
    j["derived"]["edge_cap"] = rep.edge_cap;
    j["derived"]["reference_min_spacing"] = rep.reference_min_spacing;
    j["derived"]["baseline_min_slice"] = rep.baseline_min_slice;
    f << j.dump(2) << "\n";
  }
  {
    auto f = open_csv(dir, "realizations.csv");
    for (const auto& r : rep.realizations) {
      double max_edge_shift = std::numeric_limits<double>::quiet_NaN();
      for (const auto& s : r.states)
        if (s.set != SigmaSet::Bulk && std::isfinite(s.shift))
          max_edge_shift = std::isnan(max_edge_shift) ? s.shift
                                                      : std::max(max_edge_shift, s.shift);
      f << r.seed << ',' << (r.converged ? 1 : 0) << ',' << r.n_window << ','
        << r.n_left << ',' << r.n_bulk << ',' << r.n_right << ','
        << r.bulk_ref_count << ',' << r.bulk_diag_matched << ','
        << fmt(r.bulk_diag_median_shift) << ',' << fmt(r.dist_bulk_left) << ','
        << fmt(r.dist_bulk_right) << ',' << r.unmatched_perturbed << ','
        << fmt(r.max_current_dev) << ',' << fmt(max_edge_shift) << ','
        << (r.failure.empty() ? "-" : r.failure) << "\n";
    }
  }
  {
    auto f = open_csv(dir, "states.csv");
    for (const auto& r : rep.realizations)
      for (const auto& s : r.states)
        f << r.seed << ',' << sigma_set_name(s.set) << ',' << fmt(s.energy)
          << ',' << fmt(s.shift) << ',' << fmt(s.ref_energy) << ','
          << fmt(s.ref_current) << ',' << fmt(s.diag.current) << ','
          << fmt(s.diag.x_centroid) << ',' << fmt(s.diag.x_spread) << ','
          << fmt(s.diag.min_slice) << ',' << fmt(s.diag.y_bar) << ','
          << fmt(s.diag.dy_slice) << ',' << state_class_name(s.diag.classification)
          << ',' << fmt(s.residual) << "\n";
  }
  {
    const Aggregates a = aggregate_report(rep);
    auto f = open_csv(dir, "aggregate.csv");
    f << "L," << fmt(rep.params.L) << "\n";
    f << "n_seeds," << a.n_seeds << "\n";
    f << "n_failures," << a.n_failures << "\n";
    f << "partition_ok_fraction," << fmt(a.partition_ok_fraction) << "\n";
    f << "median_edge_shift," << fmt(a.median_edge_shift) << "\n";
    f << "edge_current_ok_fraction," << fmt(a.edge_current_ok_fraction) << "\n";
    f << "bulk_current_ok_fraction," << fmt(a.bulk_current_ok_fraction) << "\n";
    f << "minslice_ok_fraction," << fmt(a.minslice_ok_fraction) << "\n";
    f << "median_max_bulk_current," << fmt(a.median_max_bulk_current) << "\n";
    f << "unmatched_zero_fraction," << fmt(a.unmatched_zero_fraction) << "\n";
    f << "matched_edge_current_fraction," << fmt(a.matched_edge_current_fraction) << "\n";
    f << "median_max_current_dev," << fmt(a.median_max_current_dev) << "\n";
  }
}

void write_flux_scan(const fs::path& dir, const FluxScanResult& res,
                     const RunManifest& manifest) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "manifest.json");
    nlohmann::json j = manifest.to_json();
    j["derived"]["best_flux"] = res.best_flux;
    j["derived"]["best_scaled_spacing"] = res.best_scaled_spacing;
    f << j.dump(2) << "\n";
  }
  auto f = open_csv(dir, "fluxscan.csv");
  for (const auto& r : res.rows)
    f << fmt(r.flux) << ',' << r.n_left << ',' << r.n_right << ','
      << fmt(r.min_spacing) << ',' << fmt(r.scaled_spacing) << "\n";
}

void write_dispersion(const fs::path& dir,
                      const std::vector<DispersionBranch>& left,
                      const std::vector<DispersionBranch>& right,
                      const RunManifest& manifest) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "manifest.json");
    f << manifest.to_json().dump(2) << "\n";
  }
  auto dump = [&](const std::vector<DispersionBranch>& side, const std::string& name) {
    auto f = open_csv(dir, name);
    for (const auto& b : side)
      for (std::size_t i = 0; i < b.k.size(); ++i)
        f << b.band << ',' << fmt(b.k[i]) << ',' << fmt(b.energy[i]) << ','
          << fmt(b.current[i]) << "\n";
  };
  dump(left, "dispersion_left.csv");
  dump(right, "dispersion_right.csv");
}

void write_spectrum(const fs::path& dir, const std::vector<EigenRecord>& records,
                    WindowLabel label, const RunManifest& manifest) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "manifest.json");
    f << manifest.to_json().dump(2) << "\n";
  }
  auto f = open_csv(dir, "spectrum.csv");
  for (std::size_t i = 0; i < records.size(); ++i)
    f << i << ',' << fmt(records[i].energy) << ',' << fmt(records[i].residual)
      << ',' << window_label_name(label) << "\n";
}

void write_fit(const fs::path& dir, const DecayFit& fit, DecayModel model) {
  auto f = open_csv(dir, "fit.csv");
  f << (model == DecayModel::LogSq ? "log_sq" : "sqrt") << ',' << fmt(fit.slope)
    << ',' << fmt(fit.intercept) << ',' << fmt(fit.rms_residual) << ','
    << fit.n_used << ',' << (fit.degenerate ? 1 : 0) << "\n";
}

void write_vectors_binary(const fs::path& path,
                          const std::vector<EigenRecord>& records,
                          const Basis& basis) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  const char magic[4] = {'C', 'Y', 'L', 'V'};
  const std::uint32_t version = 1;
  const std::uint64_t dim = static_cast<std::uint64_t>(basis.dim());
  const std::uint32_t n_x = static_cast<std::uint32_t>(basis.n_x);
  const std::uint32_t n_modes = static_cast<std::uint32_t>(basis.n_modes());
  const std::uint64_t count = records.size();
  f.write(magic, 4);
  f.write(reinterpret_cast<const char*>(&version), sizeof version);
  f.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  f.write(reinterpret_cast<const char*>(&n_x), sizeof n_x);
  f.write(reinterpret_cast<const char*>(&n_modes), sizeof n_modes);
  f.write(reinterpret_cast<const char*>(&count), sizeof count);
  std::vector<cplx> buf(static_cast<std::size_t>(dim));
  for (const auto& r : records) {
    f.write(reinterpret_cast<const char*>(&r.energy), sizeof r.energy);
    // stored mode-major: index = j * n_x + i
    for (int i = 0; i < basis.n_x; ++i)
      for (int j = 0; j < basis.n_modes(); ++j)
        buf[static_cast<std::size_t>(j) * n_x + i] =
            r.vector[static_cast<Eigen::Index>(i) * n_modes + j];
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(cplx)));
  }
}

Aggregates aggregate_report(const ExperimentReport& rep) {
  Aggregates a;
  a.n_seeds = static_cast<int>(rep.realizations.size());
  a.n_failures = rep.failures();
  a.median_edge_shift = rep.median_edge_shift();
  int conv = 0, part_ok = 0, edge_ok = 0, bulk_ok = 0, slice_ok = 0;
  int unmatched_zero = 0, matched_edge_ok = 0;
  std::vector<double> max_bulk_j, max_dev;
  for (const auto& r : rep.realizations) {
    if (!r.converged) continue;
    ++conv;
    if (r.n_left + r.n_bulk + r.n_right == r.n_window) ++part_ok;
    bool e_ok = true, b_ok = true, s_ok = true;
    double mbj = std::numeric_limits<double>::quiet_NaN();
    for (const auto& s : r.states) {
      const double aj = std::abs(s.diag.current);
      if (s.set == SigmaSet::Bulk) {
        if (aj > rep.thresholds.bulk_max) b_ok = false;
        if (rep.baseline_min_slice > 0.0 &&
            s.diag.min_slice > 1e-2 * rep.baseline_min_slice)
          s_ok = false;
        mbj = std::isnan(mbj) ? aj : std::max(mbj, aj);
      } else {
        if (aj < rep.thresholds.edge_min) e_ok = false;
      }
    }
    if (e_ok) ++edge_ok;
    if (b_ok) ++bulk_ok;
    if (s_ok) ++slice_ok;
    if (!std::isnan(mbj)) max_bulk_j.push_back(mbj);
    if (r.unmatched_perturbed == 0) ++unmatched_zero;
    if (r.unmatched_perturbed >= 0) {
      bool all_edge = true;
      for (const auto& s : r.states)
        if (std::abs(s.diag.current) < rep.thresholds.edge_min) all_edge = false;
      if (all_edge) ++matched_edge_ok;
      max_dev.push_back(r.max_current_dev);
    }
  }
  auto frac = [&](int k) { return conv > 0 ? static_cast<double>(k) / conv : 0.0; };
  a.partition_ok_fraction = frac(part_ok);
  a.edge_current_ok_fraction = frac(edge_ok);
  a.bulk_current_ok_fraction = frac(bulk_ok);
  a.minslice_ok_fraction = frac(slice_ok);
  a.unmatched_zero_fraction = frac(unmatched_zero);
  a.matched_edge_current_fraction = frac(matched_edge_ok);
  std::sort(max_bulk_j.begin(), max_bulk_j.end());
  a.median_max_bulk_current =
      max_bulk_j.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : max_bulk_j[max_bulk_j.size() / 2];
  std::sort(max_dev.begin(), max_dev.end());
  a.median_max_current_dev =
      max_dev.empty() ? std::numeric_limits<double>::quiet_NaN()
                      : max_dev[max_dev.size() / 2];
  return a;
}

std::vector<std::string> schema_selftest(const fs::path& dir) {
  std::vector<std::string> problems;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const auto it = schemas().find(name);
    if (it == schemas().end()) continue;
    std::ifstream f(entry.path());
    std::string header;
    if (!std::getline(f, header)) {
      problems.push_back(name + ": empty file");
      continue;
    }
    if (header != it->second) {
      problems.push_back(entry.path().string() + ": header mismatch");
      continue;
    }
    const std::size_t ncols = static_cast<std::size_t>(
        std::count(it->second.begin(), it->second.end(), ',') + 1);
    std::string line;
    int row = 1;
    while (std::getline(f, line)) {
      ++row;
      if (line.empty()) continue;
      const std::size_t c = static_cast<std::size_t>(
          std::count(line.begin(), line.end(), ',') + 1);
      if (c != ncols)
        problems.push_back(entry.path().string() + ": row " +
                           std::to_string(row) + " has " + std::to_string(c) +
                           " columns, expected " + std::to_string(ncols));
    }
  }
  return problems;
}

}  // namespace cyledge
