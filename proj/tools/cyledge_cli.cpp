// Command line front end: runs the experiments and writes report
// directories. Exit codes: 0 success, 2 configuration error, 3 runtime
// failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cyledge/io.hpp"

namespace fs = std::filesystem;
using namespace cyledge;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  int workers = 0;
  int n_seeds = -1;
  std::vector<std::uint64_t> seed_list;
  std::vector<double> window;
  double flux = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> L_list;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_config = true) {
  auto* c = cmd->add_option("--config", a.config_path, "JSON config or manifest");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--workers", a.workers, "OpenMP thread count (0 = default)");
  cmd->add_option("--seeds", a.n_seeds, "number of seeds (base 1)");
  cmd->add_option("--seed-list", a.seed_list, "explicit seed values");
  cmd->add_option("--window", a.window, "energy window lo hi")->expected(2);
  cmd->add_option("--flux", a.flux, "flux in flux quanta");
  cmd->add_option("--L-list", a.L_list, "circumferences for multi-L sweeps");
}

RunConfig load_config(const CommonArgs& a, const std::string& experiment) {
  nlohmann::json j;
  if (!a.config_path.empty()) {
    std::ifstream f(a.config_path);
    f >> j;
    if (j.contains("config")) j = j["config"];
  }
  j["experiment"] = experiment;
  if (a.n_seeds > 0) { j["n_seeds"] = a.n_seeds; j.erase("seeds"); }
  if (!a.seed_list.empty()) j["seeds"] = a.seed_list;
  if (!a.window.empty()) j["window"] = a.window;
  if (!std::isnan(a.flux)) j["flux"] = a.flux;
  if (!a.L_list.empty()) j["L_list"] = a.L_list;
  return parse_config(j);
}

void set_workers(int w) {
#ifdef _OPENMP
  if (w > 0) omp_set_num_threads(w);
#else
  (void)w;
#endif
}

// Runs one theorem experiment per L (sub-directory L<value> when sweeping).
int run_theorem(const CommonArgs& a, const std::string& which) {
  RunConfig cfg = load_config(a, which);
  std::vector<double> Ls = cfg.L_list.empty() ? std::vector<double>{cfg.params.L}
                                              : cfg.L_list;
  for (double L : Ls) {
    RunConfig c = cfg;
    c.params.L = L;
    const RunManifest manifest = make_manifest(c);
    const ExperimentReport rep =
        which == "theorem1" ? theorem1_run(c.params, c.seeds, c.opts)
                            : theorem2_run(c.params, c.seeds, c.opts);
    fs::path dir = a.out_dir;
    if (Ls.size() > 1) {
      char sub[32];
      std::snprintf(sub, sizeof(sub), "L%g", L);
      dir /= sub;
    }
    write_report(dir, rep, manifest);
    std::cout << which << " L=" << L << ": " << rep.realizations.size()
              << " seeds, " << rep.failures() << " failures\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cylinder edge/bulk spectral experiments"};
  app.require_subcommand(1);

  CommonArgs a;
  auto* t1 = app.add_subcommand("theorem1", "band-window ensemble classification");
  add_common(t1, a);
  auto* t2 = app.add_subcommand("theorem2", "gap-window edge matching");
  add_common(t2, a);
  auto* disp = app.add_subcommand("dispersion", "single-wall dispersion branches");
  add_common(disp, a);
  auto* spec = app.add_subcommand("spectrum", "windowed eigenvalues for one seed");
  add_common(spec, a);
  auto* cls = app.add_subcommand("classify", "alias of spectrum with diagnostics");
  add_common(cls, a);
  auto* flux = app.add_subcommand("flux-scan", "edge spectra spacing vs flux");
  add_common(flux, a);
  auto* fit = app.add_subcommand("fit", "decay fit over a multi-L report tree");
  std::string fit_model = "log_sq";
  std::string fit_in;
  fit->add_option("--in", fit_in, "report tree with L*/aggregate.csv")
      ->required()->check(CLI::ExistingDirectory);
  fit->add_option("--model", fit_model, "log_sq|sqrt")
      ->check(CLI::IsMember({"log_sq", "sqrt"}));
  fit->add_option("--out", a.out_dir, "output directory");
  auto* self = app.add_subcommand("selftest", "CSV schema check of a report tree");
  std::string self_dir;
  self->add_option("--in", self_dir, "report tree")->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  set_workers(a.workers);

  try {
    if (*t1) return run_theorem(a, "theorem1");
    if (*t2) return run_theorem(a, "theorem2");

    if (*disp) {
      RunConfig cfg = load_config(a, "dispersion");
      const RunManifest manifest = make_manifest(cfg);
      const Basis bl = make_basis(cfg.params, BasisPurpose::EdgeLeft, cfg.opts.dx_target);
      const Basis br = make_basis(cfg.params, BasisPurpose::EdgeRight, cfg.opts.dx_target);
      double k_lo = cfg.k_range ? cfg.k_range->first : -cfg.params.B * cfg.params.L / 2.0;
      double k_hi = cfg.k_range ? cfg.k_range->second : cfg.params.B * cfg.params.L / 2.0;
      const auto left = dispersion_branches(WallSide::Left, cfg.params, bl,
                                            cfg.n_max, k_lo, k_hi);
      const auto right = dispersion_branches(WallSide::Right, cfg.params, br,
                                             cfg.n_max, k_lo, k_hi);
      write_dispersion(a.out_dir, left, right, manifest);
      std::cout << "dispersion: " << left.size() << "+" << right.size()
                << " branches\n";
      return 0;
    }

    if (*spec || *cls) {
      RunConfig cfg = load_config(a, "spectrum");
      const RunManifest manifest = make_manifest(cfg);
      const Basis basis = make_basis(cfg.params, BasisPurpose::BandWindow,
                                     cfg.opts.dx_target);
      const EnergyWindow w = cfg.opts.window_override
                                 ? *cfg.opts.window_override
                                 : EnergyWindow::band(cfg.params);
      std::optional<DisorderRealization> omega;
      if (!cfg.seeds.empty() && cfg.params.V0 > 0.0)
        omega = sample_realization(
            cfg.seeds.front(),
            build_lattice(LatticeVariant::BandExperiment, cfg.params.L),
            cfg.params.V0);
      const AssembledOperator op = assemble_full(omega, basis, cfg.params);
      const WindowedEigs eigs = eigs_in_window(op, w, cfg.opts.solver);
      write_spectrum(a.out_dir, eigs.records, w.label, manifest);
      if (*cls) {
        const ClassificationThresholds t =
            cfg.opts.thresholds.value_or(ClassificationThresholds::defaults(cfg.params.B));
        std::ofstream f(fs::path(a.out_dir) / "classification.csv");
        f << "index_1,energy_E,current_v,label_1\n";
        for (std::size_t i = 0; i < eigs.records.size(); ++i) {
          const double j = current(eigs.records[i], op.velocity_diag);
          f << i << ',' << eigs.records[i].energy << ',' << j << ','
            << state_class_name(classify_state(j, t)) << "\n";
        }
      }
      std::cout << "spectrum: " << eigs.records.size() << " states, "
                << (eigs.complete ? "complete" : "incomplete") << "\n";
      return eigs.complete ? 0 : 3;
    }

    if (*flux) {
      RunConfig cfg = load_config(a, "flux_scan");
      const RunManifest manifest = make_manifest(cfg);
      std::vector<double> grid = cfg.flux_grid;
      if (grid.empty())
        for (int i = 0; i <= 10; ++i) grid.push_back(0.05 * i);
      const FluxScanResult res = hypothesis1_flux_scan(cfg.params, grid, cfg.opts);
      write_flux_scan(a.out_dir, res, manifest);
      std::cout << "flux-scan: best flux " << res.best_flux
                << ", scaled spacing " << res.best_scaled_spacing << "\n";
      return 0;
    }

    if (*fit) {
      // collect (L, median_edge_shift) from L*/aggregate.csv
      std::vector<std::pair<double, double>> pts;
      for (const auto& e : fs::directory_iterator(fit_in)) {
        if (!e.is_directory()) continue;
        const std::string name = e.path().filename().string();
        if (name.empty() || name[0] != 'L') continue;
        double L = 0.0, shift = std::numeric_limits<double>::quiet_NaN();
        try { L = std::stod(name.substr(1)); } catch (...) { continue; }
        std::ifstream f(e.path() / "aggregate.csv");
        std::string line;
        while (std::getline(f, line))
          if (line.rfind("median_edge_shift,", 0) == 0)
            shift = std::stod(line.substr(line.find(',') + 1));
        if (std::isfinite(shift)) pts.emplace_back(L, shift);
      }
      const DecayModel model = fit_model == "sqrt" ? DecayModel::Sqrt : DecayModel::LogSq;
      const DecayFit f = fit_decay(pts, model);
      fs::create_directories(a.out_dir);
      write_fit(a.out_dir, f, model);
      std::cout << "fit: slope " << f.slope << " over " << f.n_used
                << " points" << (f.degenerate ? " (degenerate)" : "") << "\n";
      return 0;
    }

    if (*self) {
      const auto problems = schema_selftest(self_dir);
      for (const auto& p : problems) std::cerr << p << "\n";
      std::cout << "selftest: " << problems.size() << " problems\n";
      return problems.empty() ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
