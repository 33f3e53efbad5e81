#pragma once

// Physical ingredients of the cylinder model: confining walls, local bump
// potential, disorder lattice and seeded coupling constants. Everything here
// is a pure function of immutable value types.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cyledge {

enum class WallSide { Left, Right };

// Polynomial confining wall c*|x -+ L/2|^m outside the sample, zero inside.
// m >= 3 makes the junction C^2.
struct WallProfile {
  double c = 1.0;
  int m = 4;
  WallSide side = WallSide::Left;
};

double eval_wall(double x, const WallProfile& w, double L);

// Compactly supported C^2 bump, V_loc * (1 - (4r)^2)^3 on r < 1/4.
double eval_bump(double dx, double dy, double v_loc);

enum class LatticeVariant {
  BandExperiment,   // X = [-L/2 + log L, L/2 - log L], natural log
  GapExperiment,    // X = [-L/2, L/2]
  EdgeStripLeft,    // X = [-L/2, -L/2 + 3*sqrt(L)/4 + 1]
  EdgeStripRight,   // X = [L/2 - 3*sqrt(L)/4 - 1, L/2]
};

struct LatticeSite {
  int n;  // x coordinate
  int m;  // y coordinate
  bool operator==(const LatticeSite&) const = default;
};

struct LatticeSpec {
  double x_lo = 0.0;
  double x_hi = 0.0;
  LatticeVariant variant = LatticeVariant::GapExperiment;
  std::vector<LatticeSite> sites;  // lexicographic in (n, m)
};

LatticeSpec build_lattice(LatticeVariant variant, double L);

const char* lattice_variant_name(LatticeVariant v);

// One sampled disorder configuration. Couplings are reproducible from
// (seed, site) alone, so restricting the lattice to a sub-strip keeps the
// per-site values identical to the full realization.
struct DisorderRealization {
  LatticeSpec lattice;
  std::vector<double> couplings;  // aligned with lattice.sites, in [-1, 1]
  std::uint64_t seed = 0;
  double bump_height = 0.0;  // V_loc = V0
  std::string generator = "splitmix64-site/v1";
};

// Per-site uniform [-1,1] draw; deterministic in (seed, n, m).
double site_coupling(std::uint64_t seed, int n, int m);

DisorderRealization sample_realization(std::uint64_t seed,
                                       const LatticeSpec& lattice, double v0);

// Sum of coupled bumps, y taken modulo L (minimal image).
double eval_disorder_potential(double x, double y,
                               const DisorderRealization& omega, double L);

struct ModelParams {
  double B = 2.0;       // magnetic field, B > 0
  double L = 8.0;       // circumference and wall separation
  double V0 = 0.3;      // disorder amplitude bound
  WallProfile wall_left{1.0, 4, WallSide::Left};
  WallProfile wall_right{1.0, 4, WallSide::Right};
  double flux = 0.0;    // Aharonov-Bohm flux in flux quanta
  double epsilon = 0.05;  // band-window offset
  double delta = 0.3;     // gap-window half-width

  // Throws std::invalid_argument naming the violated inequality.
  void validate_common() const;
  void validate_theorem1() const;  // B > 4*V0
  void validate_theorem2() const;  // gap window inside the first spectral gap
};

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);
void to_json(nlohmann::json& j, const DisorderRealization& w);
void from_json(const nlohmann::json& j, DisorderRealization& w);

}  // namespace cyledge
