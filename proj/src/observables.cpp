#include "cyledge/observables.hpp"

#include <cmath>
#include <stdexcept>

namespace cyledge {

const char* state_class_name(StateClass c) {
  switch (c) {
    case StateClass::EdgeLeft: return "edge_left";
    case StateClass::EdgeRight: return "edge_right";
    case StateClass::Bulk: return "bulk";
    case StateClass::Ambiguous: return "ambiguous";
  }
  return "unknown";
}

ClassificationThresholds ClassificationThresholds::defaults(double B) {
  // velocities scale like sqrt(B) in these units
  return {0.1 * std::sqrt(B), 1e-3 * std::sqrt(B)};
}

void ClassificationThresholds::validate() const {
  if (!(0.0 < bulk_max && bulk_max < edge_min))
    throw std::invalid_argument(
        "ClassificationThresholds: 0 < bulk_max < edge_min required");
}

double current(const EigenRecord& psi, const std::vector<double>& velocity_diag) {
  if (psi.vector.size() != static_cast<Eigen::Index>(velocity_diag.size()))
    throw std::invalid_argument("current: dimension mismatch");
  if (std::abs(psi.vector.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("current: state not normalized");
  double j = 0.0;
  for (Eigen::Index r = 0; r < psi.vector.size(); ++r)
    j += velocity_diag[static_cast<std::size_t>(r)] * std::norm(psi.vector[r]);
  return j;
}

std::pair<double, double> x_centroid_and_spread(const EigenRecord& psi,
                                                const Basis& basis) {
  const int n_m = basis.n_modes();
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < basis.n_x; ++i) {
    double w = 0.0;
    for (int j = 0; j < n_m; ++j)
      w += std::norm(psi.vector[static_cast<Eigen::Index>(i) * n_m + j]);
    const double x = basis.x(i);
    m1 += x * w;
    m2 += x * x * w;
  }
  const double var = std::max(m2 - m1 * m1, 0.0);
  return {m1, std::sqrt(var)};
}

namespace {

// max over x of |psi(x, y)| with continuum normalization. With
// differentiate=true the Fourier factor ik is applied, giving d/dy psi.
double slice_max_impl(const EigenRecord& psi, const Basis& basis, double y,
                      bool differentiate) {
  const int n_m = basis.n_modes();
  const double scale = 1.0 / std::sqrt(basis.dx * basis.L);
  std::vector<cplx> phase(static_cast<std::size_t>(n_m));
  for (int j = 0; j < n_m; ++j) {
    const double k = basis.k(j);
    cplx ph(std::cos(k * y), std::sin(k * y));
    if (differentiate) ph *= cplx(0.0, k);
    phase[static_cast<std::size_t>(j)] = ph;
  }
  double best = 0.0;
  for (int i = 0; i < basis.n_x; ++i) {
    cplx acc(0.0, 0.0);
    const cplx* row = psi.vector.data() + static_cast<Eigen::Index>(i) * n_m;
    for (int j = 0; j < n_m; ++j) acc += row[j] * phase[static_cast<std::size_t>(j)];
    best = std::max(best, std::norm(acc));
  }
  return std::sqrt(best) * scale;
}

double slice_max(const EigenRecord& psi, const Basis& basis, double y) {
  return slice_max_impl(psi, basis, y, false);
}

double slice_dy_max(const EigenRecord& psi, const Basis& basis, double y) {
  return slice_max_impl(psi, basis, y, true);
}

SliceResult slice_search(const EigenRecord& psi, const Basis& basis,
                         int y_samples, bool parallel) {
  const int n_min = 4 * basis.n_modes();
  const int ns = std::max(y_samples, n_min);
  std::vector<double> vals(static_cast<std::size_t>(ns));
  const double y0 = -basis.L / 2.0;
  const double dy = basis.L / ns;
#pragma omp parallel for schedule(static) if (parallel)
  for (int s = 0; s < ns; ++s) vals[static_cast<std::size_t>(s)] = slice_max(psi, basis, y0 + s * dy);
  int s_best = 0;
  for (int s = 1; s < ns; ++s)
    if (vals[static_cast<std::size_t>(s)] < vals[static_cast<std::size_t>(s_best)]) s_best = s;

  // golden-section refinement inside the bracketing interval
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = y0 + (s_best - 1) * dy;
  double b = y0 + (s_best + 1) * dy;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = slice_max(psi, basis, c);
  double fd = slice_max(psi, basis, d);
  for (int it = 0; it < 60 && (b - a) > 1e-12 * basis.L; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = slice_max(psi, basis, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = slice_max(psi, basis, d);
    }
  }
  SliceResult r;
  r.y_bar = 0.5 * (a + b);
  r.min_slice = slice_max(psi, basis, r.y_bar);
  r.dy_slice = slice_dy_max(psi, basis, r.y_bar);
  return r;
}

}  // namespace

SliceResult min_slice_amplitude(const EigenRecord& psi, const Basis& basis,
                                int y_samples, bool parallel) {
  if (std::abs(psi.vector.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("min_slice_amplitude: state not normalized");
  return slice_search(psi, basis, y_samples, parallel);
}

SliceResult min_slice_amplitude_serial(const EigenRecord& psi,
                                       const Basis& basis, int y_samples) {
  return min_slice_amplitude(psi, basis, y_samples, false);
}

StateClass classify_state(double j, const ClassificationThresholds& t) {
  t.validate();
  const double a = std::abs(j);
  if (a >= t.edge_min) return j < 0.0 ? StateClass::EdgeLeft : StateClass::EdgeRight;
  if (a <= t.bulk_max) return StateClass::Bulk;
  return StateClass::Ambiguous;
}

StateDiagnostics compute_diagnostics(const EigenRecord& psi,
                                     const AssembledOperator& op,
                                     const ClassificationThresholds& t,
                                     int y_samples) {
  StateDiagnostics d;
  d.current = current(psi, op.velocity_diag);
  const auto [c, s] = x_centroid_and_spread(psi, op.basis);
  d.x_centroid = c;
  d.x_spread = s;
  const SliceResult sl = min_slice_amplitude(psi, op.basis, y_samples);
  d.min_slice = sl.min_slice;
  d.y_bar = sl.y_bar;
  d.dy_slice = sl.dy_slice;
  d.classification = classify_state(d.current, t);
  return d;
}

double single_mode_baseline(const ModelParams& p, const Basis& basis) {
  // interior Landau fiber state at the mode nearest k_eff = 0
  int j_best = 0;
  double best = 1e300;
  for (int j = 0; j < basis.n_modes(); ++j) {
    const double k_eff = basis.k(j) - 2.0 * M_PI * p.flux / p.L;
    if (std::abs(k_eff) < best) { best = std::abs(k_eff); j_best = j; }
  }
  const FiberMatrix f = build_fiber(basis.k(j_best), basis, p);
  const FiberEigs eig = fiber_eigs(f, 1);
  const double max_phi = eig.vectors.col(0).cwiseAbs().maxCoeff() / std::sqrt(basis.dx);
  return max_phi / std::sqrt(basis.L);
}

}  // namespace cyledge
