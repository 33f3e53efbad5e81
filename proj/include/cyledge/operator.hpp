#pragma once

// Discrete representation of the Hamiltonian in the mixed basis:
// Fourier modes k_j = 2*pi*j/L along the periodic direction (exact),
// second-order central differences with Dirichlet ends along x.
// With x-major index r = i*(2J+1) + j the operator is a complex Hermitian
// band matrix of bandwidth 2J+1.

#include <complex>
#include <optional>
#include <vector>

#include "cyledge/model.hpp"

namespace cyledge {

using cplx = std::complex<double>;

struct Basis {
  double x_min = 0.0;
  double x_max = 0.0;
  int n_x = 0;
  double dx = 0.0;
  int J = 0;            // modes j in {-J, ..., J}
  double L = 0.0;
  double truncation_energy = 0.0;  // largest window energy the basis serves
  bool check_truncation = true;

  int n_modes() const { return 2 * J + 1; }
  int dim() const { return n_x * n_modes(); }
  double x(int i) const { return x_min + i * dx; }
  // momentum of mode slot j in [0, 2J]
  double k(int j) const { return 2.0 * M_PI * (j - J) / L; }
};

// Which walls enter the fiber/full potential. Single-wall setups are used by
// the pure and random edge Hamiltonians.
struct WallMask {
  bool left = true;
  bool right = true;
};

enum class BasisPurpose {
  BandWindow,      // window [B+eps, B+V0], both walls
  GapWindow,       // window (2B-delta, 2B+delta), both walls
  EdgeLeft,        // single left wall, open side extended past the k range
  EdgeRight,
};

// Builds a grid anchored to integer multiples of dx so that operators built
// for different purposes agree gridpoint-by-gridpoint where they overlap.
Basis make_basis(const ModelParams& p, BasisPurpose purpose,
                 double dx_target = 0.1, int j_extra = 0);

// Tridiagonal real symmetric fiber matrix at fixed momentum.
struct FiberMatrix {
  std::vector<double> diag;
  double offdiag = 0.0;  // -1/dx^2
};

// -d2/dx2 + (k - 2*pi*flux/L - B x)^2 + walls [+ extra], Dirichlet ends.
// k may be an off-lattice probe momentum.
FiberMatrix build_fiber(double k, const Basis& basis, const ModelParams& p,
                        WallMask walls = {},
                        const std::vector<double>* extra_potential = nullptr);

// Hermitian band matrix, lower-triangle storage, column-major:
// ab[col*(bw+1) + d] = A(col+d, col), 0 <= d <= bw.
struct BandHermitian {
  int n = 0;
  int bw = 0;
  std::vector<cplx> ab;

  cplx at(int row, int col) const;           // full (row, col) entry
  void matvec(const cplx* x, cplx* y) const; // y = A x
};

struct AssembledOperator {
  BandHermitian hamiltonian;
  std::vector<double> velocity_diag;  // v_y = 2(k_eff - B x), diagonal here
  Basis basis;
  ModelParams params;
  WallMask walls;
  std::optional<DisorderRealization> realization;
};

// Fourier coefficients of the disorder row profiles:
// table(i, d) = (1/L) * integral V_omega(x_i, y) exp(-i 2*pi*d*y/L) dy,
// for d in [0, 2J]; negative d via conjugation.
struct CouplingTable {
  int n_x = 0;
  int n_d = 0;  // 2J + 1 entries per row
  std::vector<cplx> data;
  cplx operator()(int i, int d) const { return data[i * n_d + d]; }
};

CouplingTable build_coupling_table(const DisorderRealization& omega,
                                   const Basis& basis, bool parallel = true);
// Serial reference, kept for kernel validation and benchmarking.
CouplingTable build_coupling_table_serial(const DisorderRealization& omega,
                                          const Basis& basis);

AssembledOperator assemble_full(const std::optional<DisorderRealization>& omega,
                                const Basis& basis, const ModelParams& p,
                                WallMask walls = {});

std::vector<double> assemble_velocity(const Basis& basis, const ModelParams& p);

// Dense disorder evaluation on a grid (sup-norm checks, benchmarks).
std::vector<double> eval_disorder_grid(const DisorderRealization& omega,
                                       double L, const std::vector<double>& xs,
                                       const std::vector<double>& ys,
                                       bool parallel = true);
std::vector<double> eval_disorder_grid_serial(const DisorderRealization& omega,
                                              double L,
                                              const std::vector<double>& xs,
                                              const std::vector<double>& ys);

// Coordinate text export: "row col re im" per line, lower triangle.
void export_coo(const BandHermitian& h, const std::string& path);

}  // namespace cyledge
