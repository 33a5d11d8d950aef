// Acceptance suite: one test case per criterion, each printing a pass/fail
// line. The standard scenario throughout is c = 1, alpha = alpha' = 1/2,
// constant efficiency 1/2, theta = 0, g0 = exp(-z), geometric 256-cell mesh
// on [1e-4, 50], T = 1, sigma1 = 1/2, sigma2 = 3/2.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "colbreak/cli.hpp"
#include "colbreak/io.hpp"
#include "colbreak/oracles.hpp"
#include "colbreak/operators.hpp"
#include "colbreak/solver.hpp"
#include "colbreak/verification.hpp"
#include "test_util.hpp"

using namespace colbreak;
namespace fs = std::filesystem;

namespace {

KernelSpec default_kernel() {
  return KernelSpec::parametric(1.0, 0.5, 0.5, EfficiencyModel::constant(0.5));
}

SpaceParams default_space() { return SpaceParams{0.5, 1.5}; }

SolverConfig default_solver() {
  SolverConfig cfg;
  cfg.t_end = 1.0;
  return cfg;
}

const Trajectory& default_trajectory() {
  static const Trajectory traj = [] {
    auto mesh = build_mesh(1e-4, 50.0, 256, MeshKind::Geometric);
    return run(InitialDatum::exponential(1.0, 1.0), mesh, default_kernel(), 0.5,
               default_solver());
  }();
  return traj;
}

const BoundLedger& default_ledger() {
  static const BoundLedger ledger = compute_ledger(
      default_trajectory().initial(), default_kernel(), default_space(), 1.0, 10.0);
  return ledger;
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d [%s] %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

}  // namespace

TEST_CASE("criterion 1: operator oracle equivalence") {
  auto mesh = build_mesh(1e-4, 10.0, 64, MeshKind::Geometric);
  auto gen = test_util::rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const EfficiencyModel models[] = {EfficiencyModel::constant(0.5),
                                    EfficiencyModel::ratio_bounded(),
                                    EfficiencyModel::pure_coagulation()};
  double worst = 0.0;
  for (const auto& model : models) {
    const auto spec = KernelSpec::parametric(1.0, 0.5, 0.5, model);
    CollisionOperator op(mesh, spec);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> v(mesh->size());
      for (double& x : v) x = unit(gen);
      const DensityField g(mesh, v, 0.0);
      const auto fast = op.apply(g);
      const auto slow = brute_force_rhs(g, spec);
      double sup_diff = 0.0, sup_ref = 0.0;
      for (std::size_t i = 0; i < mesh->size(); ++i) {
        sup_diff = std::max(sup_diff, std::abs(fast.rhs[i] - slow.rhs[i]));
        sup_ref = std::max(sup_ref, std::abs(fast.rhs[i]));
      }
      worst = std::max(worst, sup_diff / sup_ref);
    }
  }
  const bool pass = worst <= 1e-8;
  report(1, pass, "rhs vs brute force, 300 random fields, max rel sup diff = " +
                      std::to_string(worst));
  CHECK(pass);
}

TEST_CASE("criterion 2: distribution identities") {
  auto gen = test_util::rng(202);
  std::uniform_real_distribution<double> vol(0.02, 15.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double z1 = vol(gen), z2 = vol(gen);
    const double s = z1 + z2;
    for (double r : {0.0, 1.0, 2.0}) {
      const double quadrature = test_util::midpoint_integral(
          [&](double z) { return std::pow(z, r) * breakage_p(z, z1, z2, 0.0); },
          0.0, s, 10000);
      worst = std::max(worst, std::abs(quadrature - p_moment(r, s, 0.0)) /
                                  p_moment(r, s, 0.0));
    }
  }
  // the exact identities behind the quadrature check: two daughters, mass
  // conservation, and the 2/(r+1) s^r law at r = 2
  const bool identities = std::abs(p_moment(0.0, 7.0, 0.0) - 2.0) < 1e-14 &&
                          std::abs(p_moment(1.0, 7.0, 0.0) - 7.0) < 1e-13 &&
                          std::abs(p_moment(2.0, 3.0, 0.0) - 6.0) < 1e-13;
  const bool pass = worst <= 1e-6 && identities;
  report(2, pass,
         "daughter moment quadrature, max rel err = " + std::to_string(worst));
  CHECK(pass);
}

TEST_CASE("criterion 3: truncated-system mass law") {
  const Trajectory& traj = default_trajectory();
  const auto& rows = traj.moment_log;
  const double m1_0 = rows.front().m1;
  const double m0_0 = rows.front().m0;
  double worst = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double dt = rows[k].t - rows[k - 1].t;
    const double m1_rise = (rows[k].m1 - rows[k - 1].m1) / (m1_0 * dt);
    const double beyond_flux =
        ((rows[k - 1].m1 - rows[k].m1) - rows[k].flux_out * dt) / (m1_0 * dt);
    const double m0_rise = (rows[k].m0 - rows[k - 1].m0) / (m0_0 * dt);
    worst = std::max({worst, m1_rise, beyond_flux, m0_rise});
  }
  const bool pass = worst <= 1e-6;
  report(3, pass,
         "M1 nonincreasing, decrease within logged flux, M0 nonincreasing; "
         "max per-unit-time excess = " +
             std::to_string(worst));
  CHECK(pass);
}

TEST_CASE("criterion 4: moment bounds along the trajectory") {
  const auto r = check_moment_bounds(default_trajectory(), default_ledger());
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ratios M0 %.6f M1 %.6f M2 %.6f M_neg %.6f",
                r.ratio_m0, r.ratio_m1, r.ratio_m2, r.ratio_m_neg);
  const bool pass = r.pass && r.ratio_m2 < 1.0 && r.ratio_m_neg < 1.0 &&
                    r.ratio_m0 <= 1.0 + kBoundSlack &&
                    r.ratio_m1 <= 1.0 + kBoundSlack;
  report(4, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 5: pointwise majorant") {
  const auto r = check_uniform_bound(default_trajectory(), default_ledger(), 10.0);
  report(5, r.pass, "g <= A(z,t) on [0,10]x[0,1], min log gap = " +
                        std::to_string(r.min_log_gap_majorant));
  CHECK(r.pass);
}

TEST_CASE("criterion 6: equicontinuity moduli") {
  const auto r = check_equicontinuity(default_trajectory(), default_ledger(),
                                      {0.1, 0.05, 0.025}, {0.2, 0.1, 0.05});
  char buf[200];
  std::snprintf(buf, sizeof(buf), "time log gap %.3g; space moduli %.3g %.3g %.3g",
                r.worst_time_log_gap, r.space_moduli[0], r.space_moduli[1],
                r.space_moduli[2]);
  report(6, r.pass, buf);
  CHECK(r.pass);
}

TEST_CASE("criterion 7: uniqueness and continuous dependence") {
  const Trajectory& base = default_trajectory();
  auto mesh = base.initial().mesh;

  // identical configuration: bitwise-zero distance by determinism
  const Trajectory clone = run(InitialDatum::exponential(1.0, 1.0), mesh,
                               default_kernel(), 0.5, default_solver());
  bool identical = clone.snapshots.size() == base.snapshots.size();
  if (identical)
    for (std::size_t s = 0; s < base.snapshots.size(); ++s)
      if (q_distance(base.snapshots[s], clone.snapshots[s], 0.5) != 0.0)
        identical = false;

  const Trajectory bumped = run(InitialDatum::exponential(1.01, 1.0), mesh,
                                default_kernel(), 0.5, default_solver());
  const auto dep =
      check_continuous_dependence(base, bumped, default_kernel(), default_space());

  const bool pass = identical && dep.pass && dep.q_initial > 0.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "Q == 0 bitwise for identical runs; Gronwall envelope log gap "
                "%.3g (Theta = %.4g)",
                dep.worst_log_gap, dep.theta);
  report(7, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 8: mass conservation in the refinement limit") {
  struct Level {
    double n, z_min;
    std::size_t cells;
  };
  const Level levels[] = {{25.0, 2e-4, 128}, {50.0, 1e-4, 256}, {100.0, 5e-5, 512}};
  std::vector<Trajectory> runs_store;
  for (const Level& lv : levels) {
    auto mesh = build_mesh(lv.z_min, lv.n, lv.cells, MeshKind::Geometric);
    runs_store.push_back(run(InitialDatum::exponential(1.0, 1.0), mesh,
                             default_kernel(), 0.5, default_solver()));
  }
  std::vector<const Trajectory*> ptrs;
  for (const auto& t : runs_store) ptrs.push_back(&t);
  const auto r = check_mass_conservation_limit(ptrs);
  const bool strictly_decreasing =
      r.defects[1] < r.defects[0] && r.defects[2] < r.defects[1];
  char buf[200];
  std::snprintf(buf, sizeof(buf), "defects %.3e -> %.3e -> %.3e", r.defects[0],
                r.defects[1], r.defects[2]);
  const bool pass = r.pass && strictly_decreasing;
  report(8, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 9: constant-kernel closed-form oracle") {
  auto mesh = build_mesh(1e-4, 50.0, 256, MeshKind::Geometric);
  const auto spec =
      KernelSpec::constant_collision(1.0, EfficiencyModel::pure_coagulation());
  const auto init = InitialDatum::exponential(1.0, 1.0);
  const Trajectory traj = run(init, mesh, spec, 0.5, default_solver());
  const auto cmp = compare_smoluchowski(traj, spec, init);
  const bool pass = cmp.density_sup_rel_err <= 0.02 && cmp.m0_rel_err <= 0.01;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "density sup rel err %.4f (<= 0.02), M0(1) rel err %.5f (<= 0.01)",
                cmp.density_sup_rel_err, cmp.m0_rel_err);
  report(9, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 10: thread-count determinism through the CLI") {
  const fs::path dir = fs::temp_directory_path() / "colbreak_acceptance";
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "default.cfg";
  atomic_write(cfg_path, "");  // empty file selects the standard scenario

  const std::string cfg_str = cfg_path.string();
  auto run_cli = [&](const std::string& out, const char* threads) {
    const char* argv[] = {"colbreak",  "run",     cfg_str.c_str(), "--out",
                          out.c_str(), "--threads", threads};
    return cli_main(7, argv);
  };
  const fs::path out1 = dir / "threads1";
  const fs::path out8 = dir / "threads8";
  REQUIRE(run_cli(out1.string(), "1") == 0);
  REQUIRE(run_cli(out8.string(), "8") == 0);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool traj_same =
      slurp(out1 / "trajectory.csv") == slurp(out8 / "trajectory.csv");
  const bool mom_same = slurp(out1 / "moments.csv") == slurp(out8 / "moments.csv");
  const bool pass = traj_same && mom_same;
  report(10, pass, "trajectory and moment CSVs byte-identical for 1 vs 8 threads");
  CHECK(pass);
}
