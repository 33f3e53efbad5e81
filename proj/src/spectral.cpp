#include "cyledge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace cyledge {

const char* window_label_name(WindowLabel l) {
  switch (l) {
    case WindowLabel::Band: return "band_window";
    case WindowLabel::Gap: return "gap_window";
    case WindowLabel::Custom: return "custom";
  }
  return "unknown";
}

FiberEigs fiber_eigs(const FiberMatrix& f, int n_lowest) {
  const int n = static_cast<int>(f.diag.size());
  n_lowest = std::min(n_lowest, n);
  std::vector<double> d = f.diag;
  std::vector<double> e(static_cast<std::size_t>(std::max(n - 1, 1)), f.offdiag);
  FiberEigs out;
  out.energies.resize(n);
  out.vectors.resize(n, n_lowest);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(std::max(n_lowest, 1)));
  lapack_int m = 0;
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1, n_lowest,
      0.0, &m, out.energies.data(), out.vectors.data(), n, isuppz.data());
  if (info != 0) throw std::runtime_error("fiber_eigs: dstevr failed");
  out.energies.resize(m);
  return out;
}

double fiber_current(const Eigen::VectorXd& phi, double k, const Basis& basis,
                     const ModelParams& p) {
  const double k_eff = k - 2.0 * M_PI * p.flux / p.L;
  double j = 0.0;
  for (int i = 0; i < basis.n_x; ++i)
    j += 2.0 * (k_eff - p.B * basis.x(i)) * phi[i] * phi[i];
  return j;  // phi is l2-normalized; weights cancel in the expectation
}

DenseSpectrum dense_oracle(const AssembledOperator& op, bool want_vectors) {
  const int n = op.hamiltonian.n;
  if (n > 6000)
    throw std::invalid_argument("dense_oracle: dimension > 6000 (desk-scale guard)");
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (int col = 0; col < n; ++col)
    for (int d = 0; d <= op.hamiltonian.bw && col + d < n; ++d)
      a(col + d, col) = op.hamiltonian.ab[static_cast<std::size_t>(col) * (op.hamiltonian.bw + 1) + d];
  DenseSpectrum out;
  out.energies.resize(n);
  const lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n, a.data(), n,
      out.energies.data());
  if (info != 0) throw std::runtime_error("dense_oracle: zheevd failed");
  if (want_vectors) out.vectors = std::move(a);
  return out;
}

// ---------------------------------------------------------------------------
// Windowed shift-invert Lanczos with deflation.
// ---------------------------------------------------------------------------

namespace {

struct BandLU {
  int n = 0, kl = 0, ku = 0, ldab = 0;
  std::vector<cplx> ab;
  std::vector<lapack_int> ipiv;

  void factor(const BandHermitian& h, double sigma) {
    n = h.n;
    kl = ku = h.bw;
    ldab = 2 * kl + ku + 1;
    ab.assign(static_cast<std::size_t>(ldab) * n, cplx(0.0, 0.0));
    for (int col = 0; col < n; ++col) {
      for (int d = -h.bw; d <= h.bw; ++d) {
        const int row = col + d;
        if (row < 0 || row >= n) continue;
        cplx v = h.at(row, col);
        if (row == col) v -= sigma;
        ab[static_cast<std::size_t>(col) * ldab + kl + ku + d] = v;
      }
    }
    ipiv.resize(n);
    const lapack_int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku,
                                           ab.data(), ldab, ipiv.data());
    if (info != 0) throw std::runtime_error("eigs_in_window: band LU failed");
  }

  void solve(Eigen::VectorXcd& x) const {
    const lapack_int info =
        LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, 1, ab.data(), ldab,
                       ipiv.data(), x.data(), n);
    if (info != 0) throw std::runtime_error("eigs_in_window: band solve failed");
  }
};

struct ConvergedPair {
  double energy = 0.0;
  Eigen::VectorXcd vec;
  double residual = 0.0;
};

struct RitzInfo {
  double theta = 0.0;
  double energy = 0.0;
  double wres = 0.0;  // residual bound in the shift-inverted operator
  int index = 0;
};

void fix_phase(Eigen::VectorXcd& v) {
  int imax = 0;
  double best = -1.0;
  for (int i = 0; i < v.size(); ++i) {
    const double a = std::norm(v[i]);
    if (a > best) { best = a; imax = i; }
  }
  const cplx c = v[imax];
  const double a = std::abs(c);
  if (a > 0.0) v *= std::conj(c) / a;
}

}  // namespace

WindowedEigs eigs_in_window(const AssembledOperator& op,
                            const EnergyWindow& window,
                            const SolverOptions& opts) {
  if (!(window.lo <= window.hi))
    throw std::invalid_argument("eigs_in_window: lo <= hi required");
  if (window.hi > 10.0 * op.basis.truncation_energy + 1e-9)
    throw std::invalid_argument(
        "eigs_in_window: window above the basis truncation energy");

  const int n = op.hamiltonian.n;
  const double sigma = 0.5 * (window.lo + window.hi);
  BandLU lu;
  lu.factor(op.hamiltonian, sigma);

  std::vector<ConvergedPair> deflated;  // everything converged, any energy
  WindowedEigs out;

  // Certified floor of the spectrum: the clean fibers bound the full operator
  // from below up to the sup norm of the disorder (|V| <= bump_height
  // pointwise, and that bound survives the mode projection). A window whose
  // lower edge sits at or below the floor cannot have eigenvalues beneath it,
  // so the below-the-window part of the stopping rule is waived there.
  std::optional<double> spectrum_floor;
  auto floor_value = [&]() -> double {
    if (!spectrum_floor) {
      double lo = std::numeric_limits<double>::infinity();
      for (int j = 0; j < op.basis.n_modes(); ++j) {
        const FiberEigs fe =
            fiber_eigs(build_fiber(op.basis.k(j), op.basis, op.params, op.walls), 1);
        lo = std::min(lo, fe.energies[0]);
      }
      if (op.realization) lo -= op.realization->bump_height;
      spectrum_floor = lo;
    }
    return *spectrum_floor;
  };

  std::mt19937_64 rng(opts.start_seed ^ (static_cast<std::uint64_t>(n) * 0x9E3779B97F4A7C15ULL));
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  double wres_accept = 1e-11;  // relative to the largest |theta| seen
  bool stopped = false;
  int total_iters = 0;

  for (int restart = 0; restart < opts.max_restarts && !stopped; ++restart) {
    const int cap = std::min(opts.max_basis, n);
    Eigen::MatrixXcd V(n, cap);
    std::vector<double> alpha, beta;
    alpha.reserve(cap);
    beta.reserve(cap);

    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = cplx(u(rng), u(rng));
    for (const auto& c : deflated) v -= (c.vec.adjoint() * v)(0) * c.vec;
    if (v.norm() < 1e-8) break;  // space exhausted
    v.normalize();

    bool found_new_in_window = false;
    bool run_done = false;
    int m = 0;
    double theta_scale = 1.0;

    auto analyze = [&](bool final_pass) {
      if (m < 2) return;
      std::vector<double> d(alpha.begin(), alpha.begin() + m);
      std::vector<double> e(beta.begin(), beta.begin() + m - 1);
      std::vector<double> S(static_cast<std::size_t>(m) * m);
      const lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', m, d.data(),
                                            e.data(), S.data(), m);
      if (info != 0) throw std::runtime_error("eigs_in_window: dstev failed");
      theta_scale = std::max(std::abs(d.front()), std::abs(d.back()));
      const double beta_last = beta[m - 1];

      std::vector<RitzInfo> conv_w;
      for (int i = 0; i < m; ++i) {
        const double theta = d[i];
        if (std::abs(theta) < 1e-12 * theta_scale) continue;
        const double wres = std::abs(beta_last * S[static_cast<std::size_t>(i) * m + m - 1]);
        if (wres > wres_accept * theta_scale) continue;
        conv_w.push_back({theta, sigma + 1.0 / theta, wres, i});
      }
      // stopping rule: the window is exhausted once every converged-in-W
      // Ritz value inside the window is accounted for and at least two
      // converged values lie beyond each endpoint.
      int above = 0, below = 0;
      bool window_all_converged = true;
      for (int i = 0; i < m; ++i) {
        const double theta = d[i];
        if (std::abs(theta) < 1e-12 * theta_scale) continue;
        const double energy = sigma + 1.0 / theta;
        if (energy >= window.lo && energy <= window.hi) {
          const double wres = std::abs(beta_last * S[static_cast<std::size_t>(i) * m + m - 1]);
          if (wres > wres_accept * theta_scale) window_all_converged = false;
        }
      }
      for (const auto& r : conv_w) {
        if (r.energy > window.hi) ++above;
        if (r.energy < window.lo) ++below;
      }
      const bool below_covered =
          below >= 2 || (op.basis.n_x > 0 && window.lo <= floor_value());
      const bool rule = window_all_converged && above >= 2 && below_covered;
      const bool restart_fruitless =
          restart > 0 && m >= 80 &&
          std::none_of(conv_w.begin(), conv_w.end(), [&](const RitzInfo& r) {
            return r.energy >= window.lo && r.energy <= window.hi;
          });

      if (!rule && !restart_fruitless && !final_pass) return;

      // Run is ending (or the rule fired): form candidate vectors and verify
      // against the true residual before accepting anything.
      bool all_ok = true;
      std::vector<ConvergedPair> fresh;
      for (const auto& r : conv_w) {
        Eigen::VectorXd s(m);
        for (int t = 0; t < m; ++t) s[t] = S[static_cast<std::size_t>(r.index) * m + t];
        Eigen::VectorXcd y = V.leftCols(m) * s.cast<cplx>();
        for (const auto& c : deflated) y -= (c.vec.adjoint() * y)(0) * c.vec;
        const double nrm = y.norm();
        if (nrm < 0.5) continue;  // duplicate of a deflated pair
        y /= nrm;
        Eigen::VectorXcd hy(n);
        op.hamiltonian.matvec(y.data(), hy.data());
        const double rho = (y.adjoint() * hy)(0).real();
        const double resid = (hy - rho * y).norm();
        const bool in_win = rho >= window.lo && rho <= window.hi;
        if (resid <= opts.tol) {
          fresh.push_back({rho, std::move(y), resid});
          if (in_win) found_new_in_window = true;
        } else if (in_win) {
          all_ok = false;
        }
      }
      if (rule && !all_ok && !final_pass && wres_accept > 1e-15) {
        wres_accept *= 1e-2;  // keep iterating with a tighter gate
        return;
      }
      for (auto& f : fresh) deflated.push_back(std::move(f));
      if (rule && all_ok) stopped = true;
      run_done = true;
    };

    while (m < cap) {
      V.col(m) = v;
      Eigen::VectorXcd w = v;
      lu.solve(w);  // w = (H - sigma)^-1 v
      const double a = (v.adjoint() * w)(0).real();
      alpha.push_back(a);
      w -= a * v;
      if (m > 0) w -= beta[m - 1] * V.col(m - 1);
      // full reorthogonalization, two passes, against basis and deflated set
      for (int pass = 0; pass < 2; ++pass) {
        w -= V.leftCols(m + 1) * (V.leftCols(m + 1).adjoint() * w);
        for (const auto& c : deflated) w -= (c.vec.adjoint() * w)(0) * c.vec;
      }
      const double b = w.norm();
      beta.push_back(b);
      ++m;
      ++total_iters;
      if (b < 1e-13 * std::max(1.0, theta_scale)) {
        analyze(true);
        break;
      }
      v = w / b;
      if (m % 10 == 0 || m == cap) analyze(m == cap);
      if (stopped || run_done) break;
    }
    if (!run_done && !stopped) analyze(true);
    if (restart > 0 && !found_new_in_window && !stopped) break;
  }

  out.iterations = total_iters;
  out.complete = stopped;
  if (!stopped)
    out.warnings.push_back(
        "convergence stopping rule not fully satisfied; " +
        std::to_string(deflated.size()) + " pairs converged");

  // Collect window pairs, sort, resolve degenerate clusters, fix phases.
  std::vector<ConvergedPair> in_window;
  for (auto& c : deflated)
    if (c.energy >= window.lo && c.energy <= window.hi)
      in_window.push_back(std::move(c));
  std::sort(in_window.begin(), in_window.end(),
            [](const ConvergedPair& a, const ConvergedPair& b) {
              return a.energy < b.energy;
            });
  for (std::size_t i = 0; i + 1 < in_window.size(); ++i) {
    if (std::abs(in_window[i + 1].energy - in_window[i].energy) < 1e-10) {
      // joint orthonormalization of a degenerate cluster
      auto& b = in_window[i + 1].vec;
      const auto& a = in_window[i].vec;
      b -= (a.adjoint() * b)(0) * a;
      b.normalize();
    }
  }
  std::ostringstream prov;
  prov << "walls=" << (op.walls.left ? "l" : "") << (op.walls.right ? "r" : "")
       << ";seed=" << (op.realization ? std::to_string(op.realization->seed) : "none")
       << ";window=" << window_label_name(window.label);
  for (auto& c : in_window) {
    fix_phase(c.vec);
    EigenRecord r;
    r.energy = c.energy;
    r.vector = std::move(c.vec);
    r.residual = c.residual;
    r.provenance = prov.str();
    if (std::min(c.energy - window.lo, window.hi - c.energy) <= opts.tol)
      out.warnings.push_back("eigenvalue " + std::to_string(c.energy) +
                             " touches a window endpoint");
    out.records.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dispersion branches and pure-edge references.
// ---------------------------------------------------------------------------

std::vector<DispersionBranch> dispersion_branches(WallSide side,
                                                  const ModelParams& p,
                                                  const Basis& basis, int n_max,
                                                  double k_lo, double k_hi,
                                                  int samples_per_unit) {
  if (!(k_lo < k_hi)) throw std::invalid_argument("dispersion: k_lo < k_hi required");
  WallMask walls{side == WallSide::Left, side == WallSide::Right};

  std::map<double, FiberEigs> samples;
  auto solve_at = [&](double k) -> const FiberEigs& {
    auto it = samples.find(k);
    if (it == samples.end()) {
      const FiberMatrix f = build_fiber(k, basis, p, walls);
      it = samples.emplace(k, fiber_eigs(f, n_max)).first;
    }
    return it->second;
  };

  const int n0 = std::max(2, static_cast<int>(std::ceil((k_hi - k_lo) * samples_per_unit)) + 1);
  for (int i = 0; i < n0; ++i)
    solve_at(k_lo + (k_hi - k_lo) * i / (n0 - 1));

  // bisect segments with a large energy jump on any tracked band
  const double jump_tol = 0.1 * std::sqrt(p.B);
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<double> mids;
    auto it = samples.begin();
    auto prev = it++;
    for (; it != samples.end(); ++prev, ++it) {
      for (int b = 0; b < n_max; ++b) {
        if (b >= static_cast<int>(prev->second.energies.size())) break;
        if (std::abs(it->second.energies[b] - prev->second.energies[b]) > jump_tol &&
            it->first - prev->first > 1e-3) {
          mids.push_back(0.5 * (it->first + prev->first));
          break;
        }
      }
    }
    if (mids.empty()) break;
    for (double k : mids) solve_at(k);
  }

  std::vector<DispersionBranch> branches(n_max);
  for (int b = 0; b < n_max; ++b) {
    branches[b].band = b;
    branches[b].side = side;
    for (const auto& [k, eig] : samples) {
      if (b >= static_cast<int>(eig.energies.size())) continue;
      branches[b].k.push_back(k);
      branches[b].energy.push_back(eig.energies[b]);
      branches[b].current.push_back(
          fiber_current(eig.vectors.col(b), k, basis, p));
    }
    // monotonicity per Fig.-2 structure, checked between B and 3B
    for (std::size_t i = 0; i + 1 < branches[b].energy.size(); ++i) {
      const double e0 = branches[b].energy[i], e1 = branches[b].energy[i + 1];
      const double lo_b = (2.0 * b + 1.0) * p.B + 1e-8;
      const double hi_b = (2.0 * b + 3.0) * p.B;
      if (e0 < lo_b || e0 > hi_b || e1 < lo_b || e1 > hi_b) continue;
      // ties at the floating-point floor (flat asymptotic tail) are fine
      const double tie = 1e-12 * p.B;
      const bool ok = (side == WallSide::Left) ? (e1 < e0 + tie) : (e1 > e0 - tie);
      if (!ok)
        branches[b].flags.push_back(
            "non-monotonic segment at k=" + std::to_string(branches[b].k[i]));
    }
  }
  return branches;
}

std::vector<EdgeReferenceState> pure_edge_window_states(
    WallSide side, const ModelParams& p, const Basis& basis,
    const EnergyWindow& window) {
  WallMask walls{side == WallSide::Left, side == WallSide::Right};
  std::vector<EdgeReferenceState> out;
  for (int j = 0; j < basis.n_modes(); ++j) {
    const double k = basis.k(j);
    const double k_eff = k - 2.0 * M_PI * p.flux / p.L;
    // keep orbit centers on the wall's half of the cylinder
    if (side == WallSide::Left && k_eff >= 0.0) continue;
    if (side == WallSide::Right && k_eff <= 0.0) continue;
    const FiberMatrix f = build_fiber(k, basis, p, walls);
    const FiberEigs eig = fiber_eigs(f, 2);
    for (std::size_t b = 0; b < eig.energies.size(); ++b) {
      const double e = eig.energies[b];
      if (e < window.lo || e > window.hi) continue;
      out.push_back({k, e, fiber_current(eig.vectors.col(static_cast<int>(b)), k, basis, p)});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const EdgeReferenceState& a, const EdgeReferenceState& b) {
              return a.energy < b.energy;
            });
  return out;
}

}  // namespace cyledge
