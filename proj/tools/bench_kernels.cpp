// Benchmarks the OpenMP kernels against their serial reference
// implementations and checks agreement while at it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "cyledge/observables.hpp"

using namespace cyledge;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds(clock_type::time_point a, clock_type::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    f();
    best = std::min(best, seconds(t0, clock_type::now()));
  }
  return best;
}

void report(const char* name, double t_serial, double t_parallel, double dev) {
  std::printf("%-24s serial %8.4f s  parallel %8.4f s  speedup %5.2fx  max dev %.3e\n",
              name, t_serial, t_parallel, t_serial / t_parallel, dev);
}

}  // namespace

int main(int argc, char** argv) {
  ModelParams p;
  p.B = 2.0;
  p.L = argc > 1 ? std::stod(argv[1]) : 12.0;
  p.V0 = 0.3;
  p.validate_theorem1();

  const Basis basis = make_basis(p, BasisPurpose::BandWindow);
  const LatticeSpec lat = build_lattice(LatticeVariant::BandExperiment, p.L);
  const DisorderRealization omega = sample_realization(7, lat, p.V0);
  std::printf("L=%g  n_x=%d  J=%d  dim=%d  sites=%zu\n", p.L, basis.n_x,
              basis.J, basis.dim(), lat.sites.size());

  {
    CouplingTable a, b;
    const double ts = time_best_of(3, [&] { a = build_coupling_table_serial(omega, basis); });
    const double tp = time_best_of(3, [&] { b = build_coupling_table(omega, basis, true); });
    double dev = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
      dev = std::max(dev, std::abs(a.data[i] - b.data[i]));
    report("coupling_table", ts, tp, dev);
  }

  {
    std::vector<double> xs, ys;
    for (int i = 0; i < basis.n_x; ++i) xs.push_back(basis.x(i));
    const int ny = 4 * basis.n_modes();
    for (int s = 0; s < ny; ++s) ys.push_back(-p.L / 2 + s * p.L / ny);
    std::vector<double> a, b;
    const double ts = time_best_of(3, [&] { a = eval_disorder_grid_serial(omega, p.L, xs, ys); });
    const double tp = time_best_of(3, [&] { b = eval_disorder_grid(omega, p.L, xs, ys, true); });
    double dev = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
    report("disorder_grid", ts, tp, dev);
  }

  {
    // synthetic normalized state concentrated near the right wall
    EigenRecord psi;
    psi.vector.resize(basis.dim());
    for (int i = 0; i < basis.n_x; ++i)
      for (int j = 0; j < basis.n_modes(); ++j) {
        const double g = std::exp(-0.5 * p.B * std::pow(basis.x(i) - p.L / 4, 2)) *
                         std::exp(-0.1 * std::pow(j - basis.J, 2));
        psi.vector[static_cast<Eigen::Index>(i) * basis.n_modes() + j] = g;
      }
    psi.vector.normalize();
    SliceResult a, b;
    const double ts = time_best_of(3, [&] { a = min_slice_amplitude_serial(psi, basis, 0); });
    const double tp = time_best_of(3, [&] { b = min_slice_amplitude(psi, basis, 0); });
    report("min_slice", ts, tp, std::abs(a.min_slice - b.min_slice));
  }

  return 0;
}
