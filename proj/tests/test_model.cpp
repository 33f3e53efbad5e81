#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "cyledge/model.hpp"

using namespace cyledge;

TEST_CASE("wall potential values") {
  WallProfile left{1.0, 4, WallSide::Left};
  CHECK(eval_wall(0.0, left, 8.0) == 0.0);
  CHECK(eval_wall(-4.0, left, 8.0) == 0.0);  // junction point
  CHECK(eval_wall(-5.0, left, 8.0) == doctest::Approx(1.0).epsilon(1e-14));
  WallProfile right{2.0, 3, WallSide::Right};
  CHECK(eval_wall(3.0, right, 8.0) == 0.0);
  CHECK(eval_wall(5.0, right, 8.0) == doctest::Approx(2.0).epsilon(1e-14));
  // monotone on the exterior side
  double prev = eval_wall(-4.0, left, 8.0);
  for (int i = 1; i <= 1000; ++i) {
    const double v = eval_wall(-4.0 - i * 0.01, left, 8.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("bump potential values and smooth vanishing") {
  CHECK(eval_bump(0.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(eval_bump(0.25, 0.0, 1.0) == 0.0);
  CHECK(eval_bump(0.1, 0.2, 1.0) == doctest::Approx(0.008).epsilon(1e-12));
  // C^2 vanishing at the support boundary
  CHECK(std::abs(eval_bump(0.25 - 1e-9, 0.0, 1.0)) < 1e-24);
  CHECK(std::abs(eval_bump(0.25 + 1e-9, 0.0, 1.0)) < 1e-24);
  CHECK(eval_bump(0.3, 0.4, 5.0) == 0.0);
}

TEST_CASE("lattice enumeration") {
  SUBCASE("band strip at L=8") {
    const LatticeSpec lat = build_lattice(LatticeVariant::BandExperiment, 8.0);
    CHECK(lat.sites.size() == 24);
    std::set<int> ns, ms;
    for (const auto& s : lat.sites) { ns.insert(s.n); ms.insert(s.m); }
    CHECK(ns == std::set<int>{-1, 0, 1});
    CHECK(*ms.begin() == -4);
    CHECK(*ms.rbegin() == 3);
  }
  SUBCASE("full width at L=8") {
    const LatticeSpec lat = build_lattice(LatticeVariant::GapExperiment, 8.0);
    CHECK(lat.sites.size() == 72);
    std::set<int> ns;
    for (const auto& s : lat.sites) ns.insert(s.n);
    CHECK(*ns.begin() == -4);
    CHECK(*ns.rbegin() == 4);
  }
  SUBCASE("right edge strip at L=16") {
    const LatticeSpec lat = build_lattice(LatticeVariant::EdgeStripRight, 16.0);
    std::set<int> ns;
    for (const auto& s : lat.sites) ns.insert(s.n);
    CHECK(ns == std::set<int>{4, 5, 6, 7, 8});
  }
  SUBCASE("sites unique and inside the box") {
    for (auto variant : {LatticeVariant::BandExperiment, LatticeVariant::GapExperiment,
                         LatticeVariant::EdgeStripLeft, LatticeVariant::EdgeStripRight}) {
      const double L = 12.0;
      const LatticeSpec lat = build_lattice(variant, L);
      std::set<std::pair<int, int>> seen;
      for (const auto& s : lat.sites) {
        CHECK(seen.insert({s.n, s.m}).second);
        CHECK(s.n >= lat.x_lo);
        CHECK(s.n <= lat.x_hi);
        CHECK(s.m >= -L / 2);
        CHECK(s.m < L / 2);
      }
    }
  }
  SUBCASE("rejects L too small") {
    CHECK_THROWS_AS(build_lattice(LatticeVariant::BandExperiment, 3.5),
                    std::invalid_argument);
  }
}

TEST_CASE("realization sampling") {
  const LatticeSpec lat = build_lattice(LatticeVariant::BandExperiment, 8.0);
  const DisorderRealization a = sample_realization(1, lat, 0.3);
  const DisorderRealization b = sample_realization(1, lat, 0.3);
  const DisorderRealization c = sample_realization(2, lat, 0.3);
  CHECK(a.couplings == b.couplings);  // bit-exact regeneration
  CHECK(a.couplings != c.couplings);
  for (double x : a.couplings) {
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }
  CHECK(a.generator == "splitmix64-site/v1");
  // pinned first draws of the versioned generator
  CHECK(a.couplings[0] == doctest::Approx(site_coupling(1, lat.sites[0].n, lat.sites[0].m)));
  CHECK(site_coupling(1, 0, 0) == doctest::Approx(site_coupling(1, 0, 0)));
  CHECK(site_coupling(1, 0, 0) != site_coupling(1, 0, 1));
}

TEST_CASE("restriction consistency of site couplings") {
  // a strip realization carries exactly the full realization's values
  const double L = 16.0;
  const auto full = sample_realization(9, build_lattice(LatticeVariant::GapExperiment, L), 0.1);
  const auto strip = sample_realization(9, build_lattice(LatticeVariant::EdgeStripRight, L), 0.1);
  for (std::size_t i = 0; i < strip.lattice.sites.size(); ++i) {
    const auto& s = strip.lattice.sites[i];
    bool found = false;
    for (std::size_t j = 0; j < full.lattice.sites.size(); ++j)
      if (full.lattice.sites[j] == s) {
        CHECK(full.couplings[j] == strip.couplings[i]);
        found = true;
      }
    CHECK(found);
  }
}

TEST_CASE("disorder potential: bound, periodicity, minimal image") {
  const double L = 8.0;
  const LatticeSpec lat = build_lattice(LatticeVariant::GapExperiment, L);
  const double V0 = 0.3;
  const DisorderRealization omega = sample_realization(5, lat, V0);
  double sup = 0.0;
  for (int i = 0; i <= 160; ++i)
    for (int j = 0; j <= 160; ++j) {
      const double x = -L / 2 + i * L / 160.0;
      const double y = -L / 2 + j * L / 160.0;
      const double v = eval_disorder_potential(x, y, omega, L);
      sup = std::max(sup, std::abs(v));
      CHECK(eval_disorder_potential(x, y + L, omega, L) == doctest::Approx(v).epsilon(1e-15));
    }
  CHECK(sup <= V0);
  CHECK(sup > 0.0);

  // single site at (0, m) with unit coupling: peak V0, wraps across the seam
  DisorderRealization single;
  single.lattice.sites = {{0, -4}};
  single.lattice.x_lo = -4; single.lattice.x_hi = 4;
  single.couplings = {1.0};
  single.bump_height = V0;
  CHECK(eval_disorder_potential(0.0, -4.0, single, L) == doctest::Approx(V0));
  CHECK(eval_disorder_potential(0.0, 4.0 - 0.1, single, L) ==
        doctest::Approx(eval_disorder_potential(0.0, -4.0 - 0.1, single, L)));
  single.couplings = {0.0};
  CHECK(eval_disorder_potential(0.1, -3.9, single, L) == 0.0);
}

TEST_CASE("parameter validation names the violated inequality") {
  ModelParams p;
  p.B = 1.0; p.V0 = 0.3;
  CHECK_NOTHROW(p.validate_common());
  CHECK_THROWS_WITH_AS(p.validate_theorem1(),
                       doctest::Contains("B > 4*V0"), std::invalid_argument);
  p.B = 2.0; p.V0 = 0.1; p.delta = 1.95;
  CHECK_THROWS_AS(p.validate_theorem2(), std::invalid_argument);
  p.delta = 0.3;
  CHECK_NOTHROW(p.validate_theorem2());
  p.L = 2.0;
  CHECK_THROWS_AS(p.validate_common(), std::invalid_argument);
}

TEST_CASE("JSON round trip") {
  ModelParams p;
  p.B = 2.5; p.L = 12.0; p.V0 = 0.2; p.flux = 0.25; p.epsilon = 0.04; p.delta = 0.35;
  p.wall_left = {1.5, 5, WallSide::Left};
  nlohmann::json j;
  to_json(j, p);
  ModelParams q;
  from_json(j, q);
  CHECK(q.B == p.B);
  CHECK(q.L == p.L);
  CHECK(q.V0 == p.V0);
  CHECK(q.flux == p.flux);
  CHECK(q.wall_left.c == p.wall_left.c);
  CHECK(q.wall_left.m == p.wall_left.m);

  const auto lat = build_lattice(LatticeVariant::BandExperiment, 8.0);
  const DisorderRealization w = sample_realization(3, lat, 0.3);
  nlohmann::json jw;
  to_json(jw, w);
  DisorderRealization w2;
  from_json(jw, w2);
  CHECK(w2.couplings == w.couplings);
  CHECK(w2.seed == w.seed);
  CHECK(w2.generator == w.generator);
  CHECK(w2.lattice.sites.size() == w.lattice.sites.size());
}
