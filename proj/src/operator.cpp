#include "cyledge/operator.hpp"

#include <cblas.h>

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace cyledge {

namespace {

// 16-point Gauss-Legendre rule on [-1, 1].
constexpr int kGlOrder = 16;
constexpr double kGlNode[kGlOrder / 2] = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr double kGlWeight[kGlOrder / 2] = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

// integral over [-w, w] of (A - 16 t^2)^3 cos(q t) dt with w = sqrt(A)/4.
double bump_profile_fourier(double A, double q) {
  const double w = std::sqrt(A) / 4.0;
  double acc = 0.0;
  for (int g = 0; g < kGlOrder / 2; ++g) {
    const double t = w * kGlNode[g];
    const double s = A - 16.0 * t * t;
    acc += kGlWeight[g] * 2.0 * s * s * s * std::cos(q * t);  // even integrand
  }
  return acc * w;
}

double snap_up(double x, double dx) { return std::ceil(x / dx - 1e-12) * dx; }

}  // namespace

Basis make_basis(const ModelParams& p, BasisPurpose purpose, double dx_target,
                 int j_extra) {
  Basis b;
  b.L = p.L;
  const bool band = (purpose == BasisPurpose::BandWindow);
  const double e_top = band ? p.B + p.V0 : 2.0 * p.B + p.delta;
  b.truncation_energy = e_top;

  const double c_min = std::min(p.wall_left.c, p.wall_right.c);
  const int m_min = std::min(p.wall_left.m, p.wall_right.m);
  // Wall-side margin: wall potential >= 10x the window top at the grid ends.
  const double margin =
      std::pow(10.0 * e_top / c_min, 1.0 / static_cast<double>(m_min)) + 0.5;
  // Orbit centers k/B of window-relevant states penetrate the wall by at most
  // ((E - B)/c)^(1/m) plus a few magnetic lengths.
  const double pen =
      std::pow(std::max(e_top - p.B, 0.1) / c_min,
               1.0 / static_cast<double>(m_min)) +
      4.0 / std::sqrt(p.B);
  const double k_need = p.B * (p.L / 2.0 + pen);

  const int j_bump = static_cast<int>(std::ceil(p.L * (4.0 / (2.0 * M_PI)) * 4.0));
  const int j_orbit = static_cast<int>(std::ceil(k_need * p.L / (2.0 * M_PI)));
  b.J = std::max(j_bump, j_orbit) + j_extra;

  double dx = dx_target;
  double lo, hi;
  const double walled = snap_up(p.L / 2.0 + margin, dx);
  switch (purpose) {
    case BasisPurpose::BandWindow:
    case BasisPurpose::GapWindow:
      lo = -walled;
      hi = walled;
      break;
    case BasisPurpose::EdgeLeft: {
      const double k_max = 2.0 * M_PI * b.J / p.L;
      lo = -walled;
      hi = snap_up(k_max / p.B + 6.0 / std::sqrt(p.B), dx);
      break;
    }
    case BasisPurpose::EdgeRight: {
      const double k_max = 2.0 * M_PI * b.J / p.L;
      hi = walled;
      lo = -snap_up(k_max / p.B + 6.0 / std::sqrt(p.B), dx);
      break;
    }
  }
  int n_x = static_cast<int>(std::lround((hi - lo) / dx)) + 1;
  while (n_x < 129) {  // refine keeping grid alignment
    dx *= 0.5;
    n_x = static_cast<int>(std::lround((hi - lo) / dx)) + 1;
  }
  b.x_min = lo;
  b.x_max = hi;
  b.dx = dx;
  b.n_x = n_x;
  return b;
}

namespace {

void check_truncation_or_throw(const Basis& basis, const ModelParams& p,
                               WallMask walls) {
  if (!basis.check_truncation) return;
  const double need = 10.0 * basis.truncation_energy;
  if (walls.left && eval_wall(basis.x_min, p.wall_left, p.L) < need)
    throw std::invalid_argument(
        "basis: left wall does not dominate at x_min (needs >= 10x window top)");
  if (walls.right && eval_wall(basis.x_max, p.wall_right, p.L) < need)
    throw std::invalid_argument(
        "basis: right wall does not dominate at x_max (needs >= 10x window top)");
}

}  // namespace

FiberMatrix build_fiber(double k, const Basis& basis, const ModelParams& p,
                        WallMask walls, const std::vector<double>* extra) {
  check_truncation_or_throw(basis, p, walls);
  if (extra && static_cast<int>(extra->size()) != basis.n_x)
    throw std::invalid_argument("build_fiber: extra potential size mismatch");
  const double k_eff = k - 2.0 * M_PI * p.flux / p.L;
  FiberMatrix f;
  f.offdiag = -1.0 / (basis.dx * basis.dx);
  f.diag.resize(basis.n_x);
  for (int i = 0; i < basis.n_x; ++i) {
    const double x = basis.x(i);
    const double kin = k_eff - p.B * x;
    double u = 0.0;
    if (walls.left) u += eval_wall(x, p.wall_left, p.L);
    if (walls.right) u += eval_wall(x, p.wall_right, p.L);
    if (extra) u += (*extra)[i];
    f.diag[i] = 2.0 / (basis.dx * basis.dx) + kin * kin + u;
  }
  return f;
}

cplx BandHermitian::at(int row, int col) const {
  if (row < col) return std::conj(at(col, row));
  const int d = row - col;
  if (d > bw) return {0.0, 0.0};
  return ab[static_cast<std::size_t>(col) * (bw + 1) + d];
}

void BandHermitian::matvec(const cplx* x, cplx* y) const {
  const cplx one(1.0, 0.0), zero(0.0, 0.0);
  cblas_zhbmv(CblasColMajor, CblasLower, n, bw, &one, ab.data(), bw + 1, x, 1,
              &zero, y, 1);
}

namespace {

struct ColumnSites {
  std::vector<int> m;
  std::vector<double> x;  // couplings
};

std::map<int, ColumnSites> group_columns(const DisorderRealization& omega) {
  std::map<int, ColumnSites> cols;
  for (std::size_t i = 0; i < omega.lattice.sites.size(); ++i) {
    const auto& s = omega.lattice.sites[i];
    cols[s.n].m.push_back(s.m);
    cols[s.n].x.push_back(omega.couplings[i]);
  }
  return cols;
}

void coupling_row(const DisorderRealization& omega, const Basis& basis,
                  const std::map<int, ColumnSites>& cols, int i, cplx* out) {
  const int n_d = basis.n_modes();
  for (int d = 0; d < n_d; ++d) out[d] = cplx(0.0, 0.0);
  const double xi = basis.x(i);
  const int n = static_cast<int>(std::lround(xi));
  const double dxn = xi - n;
  // bump support radius 1/4 < half the unit column spacing: one column at most
  if (std::abs(dxn) >= 0.25) return;
  const auto it = cols.find(n);
  if (it == cols.end()) return;
  const double A = 1.0 - 16.0 * dxn * dxn;
  const double pref = omega.bump_height / basis.L;
  for (int d = 0; d < n_d; ++d) {
    const double q = 2.0 * M_PI * d / basis.L;
    const double g = bump_profile_fourier(A, q);
    cplx phase_sum(0.0, 0.0);
    for (std::size_t s = 0; s < it->second.m.size(); ++s) {
      const double qm = q * it->second.m[s];
      phase_sum += it->second.x[s] * cplx(std::cos(qm), -std::sin(qm));
    }
    out[d] = pref * g * phase_sum;
  }
}

}  // namespace

CouplingTable build_coupling_table_serial(const DisorderRealization& omega,
                                          const Basis& basis) {
  CouplingTable t;
  t.n_x = basis.n_x;
  t.n_d = basis.n_modes();
  t.data.assign(static_cast<std::size_t>(t.n_x) * t.n_d, cplx(0.0, 0.0));
  const auto cols = group_columns(omega);
  for (int i = 0; i < basis.n_x; ++i)
    coupling_row(omega, basis, cols, i, t.data.data() + static_cast<std::size_t>(i) * t.n_d);
  return t;
}

CouplingTable build_coupling_table(const DisorderRealization& omega,
                                   const Basis& basis, bool parallel) {
  if (!parallel) return build_coupling_table_serial(omega, basis);
  CouplingTable t;
  t.n_x = basis.n_x;
  t.n_d = basis.n_modes();
  t.data.assign(static_cast<std::size_t>(t.n_x) * t.n_d, cplx(0.0, 0.0));
  const auto cols = group_columns(omega);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < basis.n_x; ++i)
    coupling_row(omega, basis, cols, i, t.data.data() + static_cast<std::size_t>(i) * t.n_d);
  return t;
}

std::vector<double> assemble_velocity(const Basis& basis, const ModelParams& p) {
  const int n_m = basis.n_modes();
  std::vector<double> v(static_cast<std::size_t>(basis.dim()));
  for (int i = 0; i < basis.n_x; ++i) {
    const double x = basis.x(i);
    for (int j = 0; j < n_m; ++j) {
      const double k_eff = basis.k(j) - 2.0 * M_PI * p.flux / p.L;
      v[static_cast<std::size_t>(i) * n_m + j] = 2.0 * (k_eff - p.B * x);
    }
  }
  return v;
}

AssembledOperator assemble_full(const std::optional<DisorderRealization>& omega,
                                const Basis& basis, const ModelParams& p,
                                WallMask walls) {
  if (basis.n_modes() < 16)
    throw std::invalid_argument(
        "assemble_full: 2J+1 < 16, mode count too small to resolve the bump");
  check_truncation_or_throw(basis, p, walls);
  if (omega) {
    // lattice must fit the cylinder described by params
    if (omega->lattice.x_lo < -p.L / 2.0 - 1e-9 ||
        omega->lattice.x_hi > p.L / 2.0 + 1e-9)
      throw std::invalid_argument("assemble_full: lattice exceeds [-L/2, L/2]");
  }

  const int n_m = basis.n_modes();
  const int n = basis.dim();
  const int bw = n_m;  // kinetic neighbor distance; intra-block <= n_m - 1

  AssembledOperator op;
  op.basis = basis;
  op.params = p;
  op.walls = walls;
  op.realization = omega;
  op.velocity_diag = assemble_velocity(basis, p);

  BandHermitian& h = op.hamiltonian;
  h.n = n;
  h.bw = bw;
  h.ab.assign(static_cast<std::size_t>(n) * (bw + 1), cplx(0.0, 0.0));

  CouplingTable table;
  if (omega && !omega->lattice.sites.empty())
    table = build_coupling_table(*omega, basis);

  const double inv_dx2 = 1.0 / (basis.dx * basis.dx);
  for (int i = 0; i < basis.n_x; ++i) {
    const double x = basis.x(i);
    double u = 0.0;
    if (walls.left) u += eval_wall(x, p.wall_left, p.L);
    if (walls.right) u += eval_wall(x, p.wall_right, p.L);
    for (int j = 0; j < n_m; ++j) {
      const std::size_t col = static_cast<std::size_t>(i) * n_m + j;
      cplx* cab = h.ab.data() + col * (bw + 1);
      const double k_eff = basis.k(j) - 2.0 * M_PI * p.flux / p.L;
      const double kin = k_eff - p.B * x;
      cab[0] = cplx(2.0 * inv_dx2 + kin * kin + u, 0.0);
      if (table.n_x > 0) {
        cab[0] += cplx(table(i, 0).real(), 0.0);  // diagonal kept exactly real
        const int d_max = std::min(bw, n_m - 1 - j);
        for (int d = 1; d <= d_max; ++d) cab[d] += table(i, d);
      }
      if (i + 1 < basis.n_x) cab[bw] = cplx(-inv_dx2, 0.0);
    }
  }
  return op;
}

std::vector<double> eval_disorder_grid_serial(const DisorderRealization& omega,
                                              double L,
                                              const std::vector<double>& xs,
                                              const std::vector<double>& ys) {
  std::vector<double> out(xs.size() * ys.size());
  for (std::size_t a = 0; a < xs.size(); ++a)
    for (std::size_t b = 0; b < ys.size(); ++b)
      out[a * ys.size() + b] = eval_disorder_potential(xs[a], ys[b], omega, L);
  return out;
}

std::vector<double> eval_disorder_grid(const DisorderRealization& omega,
                                       double L, const std::vector<double>& xs,
                                       const std::vector<double>& ys,
                                       bool parallel) {
  if (!parallel) return eval_disorder_grid_serial(omega, L, xs, ys);
  std::vector<double> out(xs.size() * ys.size());
  const long na = static_cast<long>(xs.size());
#pragma omp parallel for schedule(static)
  for (long a = 0; a < na; ++a)
    for (std::size_t b = 0; b < ys.size(); ++b)
      out[static_cast<std::size_t>(a) * ys.size() + b] =
          eval_disorder_potential(xs[a], ys[b], omega, L);
  return out;
}

void export_coo(const BandHermitian& h, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("export_coo: cannot open " + path);
  f.precision(17);
  for (int col = 0; col < h.n; ++col)
    for (int d = 0; d <= h.bw && col + d < h.n; ++d) {
      const cplx v = h.ab[static_cast<std::size_t>(col) * (h.bw + 1) + d];
      if (v != cplx(0.0, 0.0))
        f << col + d << ' ' << col << ' ' << v.real() << ' ' << v.imag() << '\n';
    }
}

}  // namespace cyledge
