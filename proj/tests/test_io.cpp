#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cyledge/io.hpp"

using namespace cyledge;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentReport synthetic_report() {
  ExperimentReport rep;
  rep.experiment = "theorem1";
  rep.params.B = 2.0;
  rep.params.L = 8.0;
  rep.params.V0 = 0.3;
  rep.window = EnergyWindow::band(rep.params);
  rep.seeds = {1, 2};
  rep.edge_cap = 0.01;
  rep.reference_min_spacing = 0.05;
  rep.thresholds = ClassificationThresholds::defaults(2.0);
  rep.baseline_min_slice = 0.3;
  for (std::uint64_t seed : rep.seeds) {
    RealizationRecord rec;
    rec.seed = seed;
    rec.converged = true;
    rec.n_window = 2;
    rec.n_left = 1;
    rec.n_right = 1;
    StateRow a;
    a.energy = 2.1;
    a.set = SigmaSet::Left;
    a.shift = 1e-6;
    a.ref_energy = 2.1 + 1e-6;
    a.ref_current = -0.5;
    a.diag.current = -0.5;
    a.diag.classification = StateClass::EdgeLeft;
    StateRow b = a;
    b.energy = 2.2;
    b.set = SigmaSet::Right;
    b.ref_current = 0.5;
    b.diag.current = 0.5;
    b.diag.classification = StateClass::EdgeRight;
    rec.states = {a, b};
    rep.realizations.push_back(rec);
  }
  return rep;
}

}  // namespace

TEST_CASE("config parsing: defaults, validation, named errors") {
  SUBCASE("minimal theorem1 config fills defaults and auto-scans the flux") {
    const RunConfig cfg = parse_config(
        {{"B", 2.0}, {"L", 8.0}, {"V0", 0.3}, {"experiment", "theorem1"}});
    CHECK(cfg.params.wall_left.c == 1.0);
    CHECK(cfg.params.wall_left.m == 4);
    CHECK(cfg.seeds.size() == 32);
    CHECK(cfg.seeds.front() == 1);
    CHECK(cfg.flux_auto_scanned);
    CHECK(cfg.params.flux > 0.0);  // zero flux keeps the exact degeneracy
    CHECK(cfg.opts.solver.tol == 1e-9);
  }
  SUBCASE("theorem1 with B <= 4 V0 names the inequality") {
    CHECK_THROWS_WITH_AS(
        parse_config({{"B", 1.0}, {"L", 8.0}, {"V0", 0.3}, {"experiment", "theorem1"}}),
        doctest::Contains("B > 4*V0"), ConfigError);
  }
  SUBCASE("gap window overlapping the band names the containment bound") {
    CHECK_THROWS_WITH_AS(
        parse_config({{"B", 2.0}, {"L", 8.0}, {"V0", 0.1}, {"delta", 1.9},
                      {"experiment", "theorem2"}}),
        doctest::Contains("2B - delta"), ConfigError);
  }
  SUBCASE("malformed window rejected") {
    CHECK_THROWS_AS(
        parse_config({{"B", 2.0}, {"L", 8.0}, {"V0", 0.3},
                      {"experiment", "spectrum"}, {"window", {2.3, 2.1}}}),
        ConfigError);
  }
  SUBCASE("explicit flux suppresses the auto-scan") {
    const RunConfig cfg = parse_config({{"B", 2.0}, {"L", 8.0}, {"V0", 0.3},
                                        {"flux", 0.25}, {"experiment", "theorem1"}});
    CHECK(cfg.params.flux == 0.25);
    CHECK(!cfg.flux_auto_scanned);
  }
}

TEST_CASE("manifest round trip: parse(emit(config)) == config") {
  RunConfig cfg = parse_config({{"B", 2.0}, {"L", 8.0}, {"V0", 0.3},
                                {"flux", 0.25}, {"experiment", "theorem1"},
                                {"n_seeds", 4}, {"dx", 0.05}});
  const RunManifest m = make_manifest(cfg);
  const RunConfig back = parse_config(m.to_json());
  CHECK(back.params.B == cfg.params.B);
  CHECK(back.params.L == cfg.params.L);
  CHECK(back.params.flux == cfg.params.flux);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.opts.dx_target == cfg.opts.dx_target);
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.to_json() == cfg.to_json());

  // derived block carries the window bounds
  CHECK(m.derived.contains("band_window"));
  CHECK(m.derived["band_window"][0].get<double>() == doctest::Approx(2.05));
}

TEST_CASE("report writing: schema self-test passes, rewrites are bit-identical") {
  const fs::path dir = fs::temp_directory_path() / "cyledge_io_test";
  fs::remove_all(dir);
  const ExperimentReport rep = synthetic_report();
  RunConfig cfg = parse_config({{"B", 2.0}, {"L", 8.0}, {"V0", 0.3},
                                {"flux", 0.25}, {"experiment", "theorem1"},
                                {"n_seeds", 2}});
  const RunManifest m = make_manifest(cfg);

  write_report(dir / "a", rep, m);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(schema_selftest(dir / "a").empty());

  write_report(dir / "b", rep, m);
  for (const char* name : {"states.csv", "realizations.csv", "aggregate.csv"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));

  // a corrupted header is caught
  {
    std::ofstream f(dir / "a" / "states.csv");
    f << "bogus\n1,2\n";
  }
  CHECK(!schema_selftest(dir / "a").empty());
  fs::remove_all(dir);
}

TEST_CASE("aggregates are recomputable from the raw records") {
  const ExperimentReport rep = synthetic_report();
  const Aggregates a = aggregate_report(rep);
  CHECK(a.n_seeds == 2);
  CHECK(a.n_failures == 0);
  CHECK(a.partition_ok_fraction == 1.0);
  CHECK(a.edge_current_ok_fraction == 1.0);  // |J| = 0.5 >= 0.1*sqrt(2)
  CHECK(a.median_edge_shift == doctest::Approx(1e-6));
}

TEST_CASE("eigenvector binary dump header") {
  Basis b;
  b.L = 8.0;
  b.x_min = -1.0;
  b.x_max = 1.0;
  b.n_x = 3;
  b.dx = 1.0;
  b.J = 1;
  EigenRecord r;
  r.energy = 1.5;
  r.vector = Eigen::VectorXcd::Zero(9);
  r.vector[0] = cplx(1.0, 0.0);

  const fs::path path = fs::temp_directory_path() / "cyledge_vec_test.bin";
  write_vectors_binary(path, {r}, b);
  std::ifstream f(path, std::ios::binary);
  char magic[4];
  std::uint32_t version, n_x, n_modes;
  std::uint64_t dim, count;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&dim), 8);
  f.read(reinterpret_cast<char*>(&n_x), 4);
  f.read(reinterpret_cast<char*>(&n_modes), 4);
  f.read(reinterpret_cast<char*>(&count), 8);
  CHECK(std::string(magic, 4) == "CYLV");
  CHECK(version == 1);
  CHECK(dim == 9);
  CHECK(n_x == 3);
  CHECK(n_modes == 3);
  CHECK(count == 1);
  double energy;
  f.read(reinterpret_cast<char*>(&energy), 8);
  CHECK(energy == 1.5);
  // mode-major: coefficient (i=0, j=0) sits at slot 0 either way
  double re, im;
  f.read(reinterpret_cast<char*>(&re), 8);
  f.read(reinterpret_cast<char*>(&im), 8);
  CHECK(re == 1.0);
  CHECK(im == 0.0);
  fs::remove(path);
}
