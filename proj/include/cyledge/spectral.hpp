#pragma once

// Eigensolvers: tridiagonal fiber solves, a dense full-diagonalization oracle
// for cross-checks, and a windowed shift-invert Lanczos solver with deflation
// for the banded 2D operators.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cyledge/operator.hpp"

namespace cyledge {

enum class WindowLabel { Band, Gap, Custom };

struct EnergyWindow {
  double lo = 0.0;
  double hi = 0.0;
  WindowLabel label = WindowLabel::Custom;

  static EnergyWindow band(const ModelParams& p) {
    return {p.B + p.epsilon, p.B + p.V0, WindowLabel::Band};
  }
  static EnergyWindow gap(const ModelParams& p) {
    return {2.0 * p.B - p.delta, 2.0 * p.B + p.delta, WindowLabel::Gap};
  }
};

const char* window_label_name(WindowLabel l);

struct EigenRecord {
  double energy = 0.0;
  Eigen::VectorXcd vector;  // unit norm, largest-|coeff| phase real positive
  double residual = 0.0;    // ||H psi - E psi||
  std::string provenance;
};

struct WindowedEigs {
  std::vector<EigenRecord> records;  // sorted ascending in energy
  std::vector<std::string> warnings;
  bool complete = false;  // stopping rule satisfied on both sides
  int iterations = 0;
};

struct SolverOptions {
  double tol = 1e-9;
  int max_basis = 350;    // Lanczos vectors per deflation sweep
  int max_restarts = 8;
  std::uint64_t start_seed = 0xC0FFEEULL;
};

WindowedEigs eigs_in_window(const AssembledOperator& op,
                            const EnergyWindow& window,
                            const SolverOptions& opts = {});

// Full Hermitian eigendecomposition; dimension guarded to desk scale.
struct DenseSpectrum {
  std::vector<double> energies;
  Eigen::MatrixXcd vectors;  // column i belongs to energies[i]
};
DenseSpectrum dense_oracle(const AssembledOperator& op, bool want_vectors = true);

// Lowest n_lowest eigenpairs of a fiber matrix (real symmetric tridiagonal).
struct FiberEigs {
  std::vector<double> energies;
  Eigen::MatrixXd vectors;  // real; column per eigenvalue
};
FiberEigs fiber_eigs(const FiberMatrix& f, int n_lowest);

// Current of a real fiber eigenvector: sum 2(k_eff - B x_i) |phi_i|^2.
double fiber_current(const Eigen::VectorXd& phi, double k, const Basis& basis,
                     const ModelParams& p);

struct DispersionBranch {
  int band = 0;
  WallSide side = WallSide::Left;
  std::vector<double> k;        // sample momenta, ascending
  std::vector<double> energy;
  std::vector<double> current;
  std::vector<std::string> flags;  // non-monotonic segments etc.
};

// Single-wall dispersion branches over [k_lo, k_hi]. Samples uniformly with
// >= samples_per_unit points per unit k, then bisects segments with a large
// energy jump.
std::vector<DispersionBranch> dispersion_branches(
    WallSide side, const ModelParams& p, const Basis& basis, int n_max,
    double k_lo, double k_hi, int samples_per_unit = 8);

// Pure-edge reference energies in a window: fiber ground levels over the
// basis mode set, restricted to modes whose orbit center lies on the wall's
// half of the cylinder (keeps the open-side grid end out of the reference).
struct EdgeReferenceState {
  double k = 0.0;
  double energy = 0.0;
  double current = 0.0;
};
std::vector<EdgeReferenceState> pure_edge_window_states(
    WallSide side, const ModelParams& p, const Basis& basis,
    const EnergyWindow& window);

}  // namespace cyledge
