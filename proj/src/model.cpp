#include "cyledge/model.hpp"

#include <cmath>
#include <sstream>

namespace cyledge {

double eval_wall(double x, const WallProfile& w, double L) {
  const double junction = (w.side == WallSide::Left) ? -L / 2.0 : L / 2.0;
  const double d = (w.side == WallSide::Left) ? junction - x : x - junction;
  if (d <= 0.0) return 0.0;
  return w.c * std::pow(d, static_cast<double>(w.m));
}

double eval_bump(double dx, double dy, double v_loc) {
  const double r2 = dx * dx + dy * dy;
  const double s = 1.0 - 16.0 * r2;  // 1 - (4r)^2
  if (s <= 0.0) return 0.0;
  return v_loc * s * s * s;
}

const char* lattice_variant_name(LatticeVariant v) {
  switch (v) {
    case LatticeVariant::BandExperiment: return "band_experiment";
    case LatticeVariant::GapExperiment: return "gap_experiment";
    case LatticeVariant::EdgeStripLeft: return "edge_strip_left";
    case LatticeVariant::EdgeStripRight: return "edge_strip_right";
  }
  return "unknown";
}

LatticeSpec build_lattice(LatticeVariant variant, double L) {
  if (L < 4.0) throw std::invalid_argument("build_lattice: L >= 4 required");
  double lo = 0.0, hi = 0.0;
  switch (variant) {
    case LatticeVariant::BandExperiment:
      lo = -L / 2.0 + std::log(L);
      hi = L / 2.0 - std::log(L);
      break;
    case LatticeVariant::GapExperiment:
      lo = -L / 2.0;
      hi = L / 2.0;
      break;
    case LatticeVariant::EdgeStripLeft:
      lo = -L / 2.0;
      hi = -L / 2.0 + 3.0 * std::sqrt(L) / 4.0 + 1.0;
      break;
    case LatticeVariant::EdgeStripRight:
      lo = L / 2.0 - 3.0 * std::sqrt(L) / 4.0 - 1.0;
      hi = L / 2.0;
      break;
  }
  if (lo > hi)
    throw std::invalid_argument(
        "build_lattice: empty x-interval, L too small for variant " +
        std::string(lattice_variant_name(variant)));

  LatticeSpec spec;
  spec.x_lo = lo;
  spec.x_hi = hi;
  spec.variant = variant;
  // Integer points of [lo, hi] x [-L/2, L/2); endpoints included when the
  // integer coordinate equals the endpoint exactly.
  const int n_lo = static_cast<int>(std::ceil(lo));
  const int n_hi = static_cast<int>(std::floor(hi));
  const int m_lo = static_cast<int>(std::ceil(-L / 2.0));
  const int m_hi_excl = static_cast<int>(std::ceil(L / 2.0));  // half-open
  for (int n = n_lo; n <= n_hi; ++n)
    for (int m = m_lo; m < m_hi_excl; ++m) spec.sites.push_back({n, m});
  if (spec.sites.empty())
    throw std::invalid_argument("build_lattice: no sites for variant " +
                                std::string(lattice_variant_name(variant)));
  return spec;
}

namespace {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

double site_coupling(std::uint64_t seed, int n, int m) {
  // Mix seed and site coordinates, then burn a few rounds.
  std::uint64_t s = seed;
  s ^= splitmix64(s) + static_cast<std::uint64_t>(static_cast<std::uint32_t>(n));
  s ^= splitmix64(s) + (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)) << 32);
  std::uint64_t u = splitmix64(s);
  u = splitmix64(s);
  // 53-bit mantissa -> uniform on [-1, 1]
  const double x = static_cast<double>(u >> 11) * (1.0 / 9007199254740992.0);
  return 2.0 * x - 1.0;
}

DisorderRealization sample_realization(std::uint64_t seed,
                                       const LatticeSpec& lattice, double v0) {
  DisorderRealization w;
  w.lattice = lattice;
  w.seed = seed;
  w.bump_height = v0;
  w.couplings.reserve(lattice.sites.size());
  for (const auto& s : lattice.sites)
    w.couplings.push_back(site_coupling(seed, s.n, s.m));
  return w;
}

double eval_disorder_potential(double x, double y,
                               const DisorderRealization& omega, double L) {
  double v = 0.0;
  for (std::size_t i = 0; i < omega.lattice.sites.size(); ++i) {
    const auto& s = omega.lattice.sites[i];
    const double dx = x - static_cast<double>(s.n);
    if (dx <= -0.25 || dx >= 0.25) continue;
    double dy = y - static_cast<double>(s.m);
    // minimal image in y
    dy -= L * std::round(dy / L);
    v += omega.couplings[i] * eval_bump(dx, dy, omega.bump_height);
  }
  return v;
}

namespace {
[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}
}  // namespace

void ModelParams::validate_common() const {
  if (!(B > 0.0)) fail("ModelParams: B > 0 required");
  if (!(L >= 4.0)) fail("ModelParams: L >= 4 required");
  if (!(V0 >= 0.0)) fail("ModelParams: V0 >= 0 required");
  if (!(epsilon > 0.0)) fail("ModelParams: epsilon > 0 required");
  if (!(delta > 0.0)) fail("ModelParams: delta > 0 required");
  if (wall_left.m < 3 || wall_right.m < 3) fail("ModelParams: wall exponent m >= 3 required");
  if (!(wall_left.c > 0.0) || !(wall_right.c > 0.0)) fail("ModelParams: wall coefficient c > 0 required");
}

void ModelParams::validate_theorem1() const {
  validate_common();
  if (!(B > 4.0 * V0)) fail("ModelParams: B > 4*V0 required for theorem1");
  if (!(B + epsilon < B + V0)) fail("ModelParams: epsilon < V0 required for a nonempty band window");
}

void ModelParams::validate_theorem2() const {
  validate_common();
  if (!(B + V0 + epsilon < 2.0 * B - delta))
    fail("ModelParams: B + V0 + epsilon < 2B - delta required (gap window above the first band)");
  if (!(2.0 * B + delta < 3.0 * B - V0 - epsilon))
    fail("ModelParams: 2B + delta < 3B - V0 - epsilon required (gap window below the second band)");
}

void to_json(nlohmann::json& j, const ModelParams& p) {
  j = nlohmann::json{
      {"B", p.B},
      {"L", p.L},
      {"V0", p.V0},
      {"flux", p.flux},
      {"epsilon", p.epsilon},
      {"delta", p.delta},
      {"wall_left", {{"c", p.wall_left.c}, {"m", p.wall_left.m}}},
      {"wall_right", {{"c", p.wall_right.c}, {"m", p.wall_right.m}}},
  };
}

void from_json(const nlohmann::json& j, ModelParams& p) {
  p.B = j.at("B").get<double>();
  p.L = j.at("L").get<double>();
  p.V0 = j.at("V0").get<double>();
  p.flux = j.value("flux", 0.0);
  p.epsilon = j.value("epsilon", 0.05);
  p.delta = j.value("delta", 0.3);
  if (j.contains("wall_left")) {
    p.wall_left.c = j["wall_left"].value("c", 1.0);
    p.wall_left.m = j["wall_left"].value("m", 4);
  }
  if (j.contains("wall_right")) {
    p.wall_right.c = j["wall_right"].value("c", 1.0);
    p.wall_right.m = j["wall_right"].value("m", 4);
  }
  p.wall_left.side = WallSide::Left;
  p.wall_right.side = WallSide::Right;
}

void to_json(nlohmann::json& j, const DisorderRealization& w) {
  nlohmann::json sites = nlohmann::json::array();
  for (const auto& s : w.lattice.sites) sites.push_back({s.n, s.m});
  j = nlohmann::json{
      {"generator", w.generator},
      {"seed", w.seed},
      {"bump_height", w.bump_height},
      {"lattice",
       {{"x_lo", w.lattice.x_lo},
        {"x_hi", w.lattice.x_hi},
        {"variant", lattice_variant_name(w.lattice.variant)},
        {"sites", sites}}},
      {"couplings", w.couplings},
  };
}

void from_json(const nlohmann::json& j, DisorderRealization& w) {
  w.generator = j.at("generator").get<std::string>();
  w.seed = j.at("seed").get<std::uint64_t>();
  w.bump_height = j.at("bump_height").get<double>();
  const auto& lat = j.at("lattice");
  w.lattice.x_lo = lat.at("x_lo").get<double>();
  w.lattice.x_hi = lat.at("x_hi").get<double>();
  const std::string vn = lat.at("variant").get<std::string>();
  if (vn == "band_experiment") w.lattice.variant = LatticeVariant::BandExperiment;
  else if (vn == "gap_experiment") w.lattice.variant = LatticeVariant::GapExperiment;
  else if (vn == "edge_strip_left") w.lattice.variant = LatticeVariant::EdgeStripLeft;
  else if (vn == "edge_strip_right") w.lattice.variant = LatticeVariant::EdgeStripRight;
  else throw std::invalid_argument("unknown lattice variant: " + vn);
  w.lattice.sites.clear();
  for (const auto& s : lat.at("sites"))
    w.lattice.sites.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
  w.couplings = j.at("couplings").get<std::vector<double>>();
}

}  // namespace cyledge
