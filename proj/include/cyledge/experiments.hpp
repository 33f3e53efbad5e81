#pragma once

// Desk-scale numerical analogues of the two classification theorems and the
// edge-spectra spacing hypothesis: reference spectra, order-preserving
// spectral matching, disorder-ensemble drivers and decay-rate fits.

#include <cstdint>
#include <optional>
#include <vector>

#include "cyledge/observables.hpp"
#include "cyledge/spectral.hpp"

namespace cyledge {

struct MatchPair {
  int perturbed_index = 0;
  int reference_index = 0;
  double perturbed = 0.0;
  double reference = 0.0;
  double shift = 0.0;
};

struct SpectralMatch {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_perturbed;
  std::vector<int> unmatched_reference;
  double cap = 0.0;
  double total_shift = 0.0;
};

// Maximum-cardinality, then minimum-total-shift injective matching between
// two ascending energy lists, each pair within `cap`. Both lists sorted, cost
// |E - E'|: an optimal assignment is order-preserving, solved by DP.
SpectralMatch match_spectra(const std::vector<double>& perturbed,
                            const std::vector<double>& reference, double cap);

struct ExperimentOptions {
  double dx_target = 0.1;
  SolverOptions solver;
  std::optional<ClassificationThresholds> thresholds;  // defaults from B
  std::optional<EnergyWindow> window_override;
  bool parallel = true;  // distribute realizations over OpenMP workers
};

enum class SigmaSet { Left, Bulk, Right };

struct StateRow {
  double energy = 0.0;
  SigmaSet set = SigmaSet::Bulk;
  double shift = 0.0;       // NaN when unmatched
  double ref_energy = 0.0;  // NaN when unmatched
  double ref_current = 0.0; // NaN when the reference has no current attached
  double residual = 0.0;
  StateDiagnostics diag;
};

struct RealizationRecord {
  std::uint64_t seed = 0;
  bool converged = false;
  std::string failure;  // nonempty when this seed was skipped
  std::vector<StateRow> states;
  int n_window = 0;
  int n_left = 0, n_bulk = 0, n_right = 0;
  // Theorem 1 specifics
  int bulk_ref_count = -1;           // |sigma(H_b) ^ window|
  int bulk_diag_matched = -1;        // secondary diagnostic vs sigma(H_b)
  double bulk_diag_median_shift = 0.0;
  double dist_bulk_left = 0.0;       // NaN when a set is empty
  double dist_bulk_right = 0.0;
  // Theorem 2 specifics
  int unmatched_perturbed = -1;      // theorem-violation count
  double max_current_dev = 0.0;      // max |J_pert - J_ref| over matched pairs
};

struct ExperimentReport {
  std::string experiment;
  ModelParams params;
  EnergyWindow window;
  std::vector<std::uint64_t> seeds;
  double edge_cap = 0.0;
  double reference_min_spacing = 0.0;
  ClassificationThresholds thresholds;
  double baseline_min_slice = 0.0;  // single-mode yardstick
  std::vector<RealizationRecord> realizations;
  std::vector<std::string> notes;

  int failures() const;
  // median over converged realizations of the per-seed maximum edge shift
  double median_edge_shift() const;
};

ExperimentReport theorem1_run(const ModelParams& params,
                              const std::vector<std::uint64_t>& seeds,
                              const ExperimentOptions& opts = {});

ExperimentReport theorem2_run(const ModelParams& params,
                              const std::vector<std::uint64_t>& seeds,
                              const ExperimentOptions& opts = {});

struct FluxScanRow {
  double flux = 0.0;
  int n_left = 0, n_right = 0;
  double min_spacing = 0.0;   // dist(sigma_l, sigma_r) within the window
  double scaled_spacing = 0.0;  // L * min_spacing
};

struct FluxScanResult {
  std::vector<FluxScanRow> rows;
  double best_flux = 0.0;
  double best_scaled_spacing = 0.0;
};

// Requires symmetric walls; scans the band window spacing of the two
// pure-edge spectra over the given flux values.
FluxScanResult hypothesis1_flux_scan(const ModelParams& params,
                                     const std::vector<double>& flux_grid,
                                     const ExperimentOptions& opts = {});

enum class DecayModel { LogSq, Sqrt };

struct DecayFit {
  double slope = 0.0;      // gamma_hat*B for LogSq, mu_hat*sqrt(B) for Sqrt
  double intercept = 0.0;
  double rms_residual = 0.0;
  int n_used = 0;
  bool degenerate = false;  // all shifts at the solver floor
};

// Least squares of log(shift) against (log L)^2 or sqrt(L). Shifts below
// 10x the solver floor are censored.
DecayFit fit_decay(const std::vector<std::pair<double, double>>& shifts_by_L,
                   DecayModel model, double solver_floor = 1e-9);

}  // namespace cyledge
