#pragma once

// Physical diagnostics of eigenstates: current along the periodic direction,
// transverse centroid/spread, the minimal-slice amplitude, and the
// edge/bulk classification.

#include <string>

#include "cyledge/spectral.hpp"

namespace cyledge {

enum class StateClass { EdgeLeft, EdgeRight, Bulk, Ambiguous };

const char* state_class_name(StateClass c);

struct ClassificationThresholds {
  double edge_min = 0.0;  // minimum |J| for an edge label
  double bulk_max = 0.0;  // maximum |J| for a bulk label

  static ClassificationThresholds defaults(double B);
  void validate() const;  // 0 < bulk_max < edge_min
};

struct StateDiagnostics {
  double current = 0.0;
  double x_centroid = 0.0;
  double x_spread = 0.0;
  double min_slice = 0.0;
  double y_bar = 0.0;
  double dy_slice = 0.0;  // max_x |d/dy psi(x, y_bar)|
  StateClass classification = StateClass::Ambiguous;
};

// <psi, v_y psi>; throws if psi is not normalized. The velocity operator is
// diagonal in the mixed basis, so the form is exactly real.
double current(const EigenRecord& psi, const std::vector<double>& velocity_diag);

std::pair<double, double> x_centroid_and_spread(const EigenRecord& psi,
                                                const Basis& basis);

// min over y of max over x of |psi(x, y)|, with continuum normalization,
// plus the minimizing slice position. Searches a uniform y grid of at least
// 4*(2J+1) samples, then refines by golden-section search.
struct SliceResult {
  double min_slice = 0.0;
  double y_bar = 0.0;
  double dy_slice = 0.0;
};
SliceResult min_slice_amplitude(const EigenRecord& psi, const Basis& basis,
                                int y_samples, bool parallel = true);
SliceResult min_slice_amplitude_serial(const EigenRecord& psi,
                                       const Basis& basis, int y_samples);

StateClass classify_state(double current, const ClassificationThresholds& t);

StateDiagnostics compute_diagnostics(const EigenRecord& psi,
                                     const AssembledOperator& op,
                                     const ClassificationThresholds& t,
                                     int y_samples = 0);

// max_x |phi| / sqrt(L) of a single-mode interior Landau fiber state;
// the yardstick the minimal-slice diagnostic is compared against.
double single_mode_baseline(const ModelParams& p, const Basis& basis);

}  // namespace cyledge
