#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "colbreak/verification.hpp"
#include "test_util.hpp"

using namespace colbreak;

namespace {

KernelSpec default_spec(double c = 1.0, double e0 = 0.5) {
  return KernelSpec::parametric(c, 0.5, 0.5, EfficiencyModel::constant(e0));
}

DensityField exp_field(std::shared_ptr<const Mesh> mesh) {
  std::vector<double> v(mesh->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-mesh->center(i));
  return DensityField(std::move(mesh), std::move(v), 0.0);
}

Trajectory quick_run(double c = 1.0, double t_end = 0.5, std::size_t cells = 96,
                     double n = 20.0) {
  auto mesh = build_mesh(1e-4, n, cells, MeshKind::Geometric);
  SolverConfig cfg;
  cfg.t_end = t_end;
  return run(InitialDatum::exponential(1.0, 1.0), mesh, default_spec(c), 0.5, cfg);
}

}  // namespace

TEST_CASE("moments of the exponential field reproduce the gamma function") {
  auto mesh = build_mesh(1e-8, 40.0, 4096, MeshKind::Geometric);
  const auto f = exp_field(mesh);
  CHECK(moment(f, 1.0) == Catch::Approx(1.0).epsilon(1e-4));
  CHECK(moment(f, 2.0) == Catch::Approx(2.0).epsilon(1e-4));
  CHECK(moment(f, -0.5) == Catch::Approx(1.7724538509055160).epsilon(1e-3));
}

TEST_CASE("weighted norm of the exponential field") {
  auto mesh = build_mesh(1e-8, 40.0, 4096, MeshKind::Geometric);
  const auto f = exp_field(mesh);
  const SpaceParams params{0.5, 1.5};
  // sqrt(pi) + Gamma(5/2)
  CHECK(weighted_norm(f, params) == Catch::Approx(3.101794239084653).epsilon(1e-3));

  const auto zero = DensityField::zero(mesh);
  CHECK(weighted_norm(zero, params) == 0.0);

  DensityField sum = f;
  for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] *= 2.0;
  CHECK(weighted_norm(sum, params) ==
        Catch::Approx(2.0 * weighted_norm(f, params)).epsilon(1e-14));
}

TEST_CASE("printed bound formulas") {
  // M2(0)=2, c=1, Gamma0=Gamma1=1, T=1 gives 4 e^6
  CHECK(gamma2_bound(2.0, 1.0, 1.0, 1.0, 1.0) ==
        Catch::Approx(1613.7151739709405).epsilon(1e-13));
  // T = 0 keeps the additive term; the formula does not collapse to M2(0)
  CHECK(gamma2_bound(2.0, 1.0, 1.0, 1.0, 0.0) == Catch::Approx(4.0).epsilon(1e-15));
  // c = 0 collapses both bounds to the initial moments
  CHECK(gamma2_bound(2.0, 0.0, 1.0, 1.0, 5.0) == Catch::Approx(2.0).epsilon(1e-15));
  CHECK(gamma_neg_bound(1.75, 0.0, 4.0, 1.0, 1.0, 5.0) ==
        Catch::Approx(1.75).epsilon(1e-15));

  CHECK(theta_coefficient(1.0, 0.5) == Catch::Approx(28.0).epsilon(1e-15));
}

TEST_CASE("bound hierarchy holds for random admissible parameters") {
  auto gen = test_util::rng(41);
  std::uniform_real_distribution<double> unit(0.0, 2.0);
  std::uniform_real_distribution<double> horizon(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double m2 = unit(gen), c = unit(gen), g0 = unit(gen), g1 = unit(gen);
    const double T = horizon(gen);
    CHECK(gamma2_bound(m2, c, g0, g1, T) >= m2);
    const double mneg = unit(gen);
    CHECK(gamma_neg_bound(mneg, c, 4.0, g0, g1, T) >= mneg);
  }
}

TEST_CASE("ledger admissibility enforces the sigma restrictions") {
  auto mesh = build_mesh(1e-4, 20.0, 64, MeshKind::Geometric);
  const auto g0 = exp_field(mesh);
  CHECK_THROWS_WITH(compute_ledger(g0, default_spec(), SpaceParams{0.5, 1.2}, 1.0, 10.0),
                    Catch::Matchers::ContainsSubstring("sigma2"));
  const auto asym = KernelSpec::parametric(1.0, 0.3, 0.3, EfficiencyModel::constant(0.5));
  CHECK_THROWS_WITH(compute_ledger(g0, asym, SpaceParams{0.6, 1.5}, 1.0, 10.0),
                    Catch::Matchers::ContainsSubstring("sigma1"));
  CHECK_THROWS_AS(compute_ledger(g0,
                                 KernelSpec::constant_collision(
                                     1.0, EfficiencyModel::pure_coagulation()),
                                 SpaceParams{0.5, 1.5}, 1.0, 10.0),
                  ConstraintError);
}

TEST_CASE("ledger is a pure function of its inputs") {
  auto mesh = build_mesh(1e-4, 20.0, 96, MeshKind::Geometric);
  const auto g0 = exp_field(mesh);
  const SpaceParams params{0.5, 1.5};
  const auto a = compute_ledger(g0, default_spec(), params, 1.0, 10.0);
  const auto b = compute_ledger(g0, default_spec(), params, 1.0, 10.0);
  CHECK(a.gamma2_T == b.gamma2_T);
  CHECK(a.gamma_neg_T == b.gamma_neg_T);
  CHECK(a.log_s_T == b.log_s_T);
  CHECK(a.log_c_emp == b.log_c_emp);

  CHECK(a.gamma2_T >= a.m2_initial);
  CHECK(a.gamma_neg_T >= a.m_neg_initial);
  CHECK(a.a0 >= a.sup_g0_window);
  CHECK(std::isfinite(a.log_s_T));
  CHECK(std::isfinite(a.log_c_emp));
}

TEST_CASE("majorant closed form") {
  auto mesh = build_mesh(1e-4, 20.0, 96, MeshKind::Geometric);
  const auto g0 = exp_field(mesh);
  const auto ledger = compute_ledger(g0, default_spec(), SpaceParams{0.5, 1.5},
                                     1.0, 5.0);
  CHECK(majorant_A(3.0, 0.0, ledger) == Catch::Approx(ledger.a0).epsilon(1e-12));
  CHECK(majorant_A(0.0, 0.7, ledger) ==
        Catch::Approx(ledger.a0 * std::exp(0.7)).epsilon(1e-12));
  // nondecreasing in z and t
  CHECK(log_majorant_A(2.0, 0.5, ledger) >= log_majorant_A(1.0, 0.5, ledger));
  CHECK(log_majorant_A(2.0, 0.9, ledger) >= log_majorant_A(2.0, 0.5, ledger));
  CHECK_THROWS_AS(majorant_A(6.0, 0.5, ledger), std::domain_error);
  CHECK_THROWS_AS(majorant_A(1.0, 2.0, ledger), std::domain_error);

  // nondecreasing in the rate constant (both A(0) and the exponent grow)
  const auto ledger_lo = compute_ledger(g0, default_spec(0.5), SpaceParams{0.5, 1.5},
                                        1.0, 5.0);
  for (double z : {0.0, 1.0, 4.0})
    for (double t : {0.0, 0.5, 1.0})
      CHECK(log_majorant_A(z, t, ledger) >= log_majorant_A(z, t, ledger_lo));
}

TEST_CASE("moment bounds hold along trajectories") {
  const auto traj = quick_run();
  const auto ledger = compute_ledger(traj.initial(), default_spec(),
                                     SpaceParams{0.5, 1.5}, 0.5, 10.0);
  const auto report = check_moment_bounds(traj, ledger);
  CHECK(report.pass);
  CHECK(report.max_ratio() <= 1.0 + kBoundSlack);
  CHECK(report.ratio_m2 < 1.0);
  CHECK(report.ratio_m_neg < 1.0);

  // c = 0: nothing evolves, ratios stay at their initial values
  const auto frozen = quick_run(0.0);
  const auto ledger0 = compute_ledger(frozen.initial(), default_spec(0.0),
                                      SpaceParams{0.5, 1.5}, 0.5, 10.0);
  const auto report0 = check_moment_bounds(frozen, ledger0);
  CHECK(report0.pass);
  CHECK(report0.ratio_m0 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(report0.ratio_m1 == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform bound holds along trajectories") {
  const auto traj = quick_run();
  const auto ledger = compute_ledger(traj.initial(), default_spec(),
                                     SpaceParams{0.5, 1.5}, 0.5, 10.0);
  const auto report = check_uniform_bound(traj, ledger, 10.0);
  CHECK(report.pass);
  CHECK(report.min_log_gap_majorant >= 0.0);

  auto mesh = build_mesh(1e-4, 20.0, 64, MeshKind::Geometric);
  SolverConfig cfg;
  cfg.t_end = 0.25;
  const auto zero_traj =
      run(InitialDatum::exponential(0.0, 1.0), mesh, default_spec(), 0.5, cfg);
  const auto zero_ledger = compute_ledger(zero_traj.initial(), default_spec(),
                                          SpaceParams{0.5, 1.5}, 0.25, 10.0);
  CHECK(check_uniform_bound(zero_traj, zero_ledger, 10.0).pass);
}

TEST_CASE("time modulus vanishes for stationary runs") {
  const auto frozen = quick_run(0.0);
  CHECK(modulus_time(frozen, 0.1) == 0.0);
  CHECK(modulus_time(frozen, 0.25) == 0.0);
  CHECK_THROWS_AS(modulus_time(frozen, 0.6), std::domain_error);
}

TEST_CASE("equicontinuity check on the standard scenario") {
  const auto traj = quick_run(1.0, 0.5, 128);
  const auto ledger = compute_ledger(traj.initial(), default_spec(),
                                     SpaceParams{0.5, 1.5}, 0.5, 10.0);
  const auto report = check_equicontinuity(traj, ledger, {0.1, 0.05, 0.025},
                                           {0.2, 0.1, 0.05});
  CHECK(report.pass);
  REQUIRE(report.space_moduli.size() == 3);
  CHECK(report.space_moduli[1] <= 1.1 * report.space_moduli[0]);
  CHECK(report.space_moduli[2] <= 1.1 * report.space_moduli[1]);
}

TEST_CASE("space modulus of constant and trivial cases") {
  auto mesh = build_mesh(1e-4, 20.0, 64, MeshKind::Geometric);
  std::vector<double> v(mesh->size(), 0.7);
  const DensityField constant(mesh, v, 0.0);
  CHECK(modulus_space(constant, 0.1) == 0.0);
  CHECK(modulus_space(constant, 0.0) == 0.0);
}

TEST_CASE("tail bound examples and property sweep") {
  auto mesh = build_mesh(1e-4, 30.0, 256, MeshKind::Geometric);
  const auto f = exp_field(mesh);
  const auto t = tail_bound_check(f, 1.0, 1.0);
  CHECK(t.lhs == Catch::Approx(std::exp(-1.0)).epsilon(0.02));
  CHECK(t.rhs == Catch::Approx(1.0).epsilon(0.01));
  CHECK(t.pass);

  const auto zero = DensityField::zero(mesh);
  const auto tz = tail_bound_check(zero, 1.0, 1.0);
  CHECK(tz.lhs == 0.0);
  CHECK(tz.rhs == 0.0);
  CHECK(tz.pass);

  auto gen = test_util::rng(43);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> betas(0.01, 20.0);
  std::uniform_real_distribution<double> exps(0.1, 3.0);
  auto small_mesh = build_mesh(1e-3, 25.0, 48, MeshKind::Geometric);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> rv(small_mesh->size());
    for (double& x : rv) x = unit(gen);
    const DensityField rf(small_mesh, rv, 0.0);
    CHECK(tail_bound_check(rf, betas(gen), exps(gen)).pass);
  }

  CHECK_THROWS_AS(tail_bound_check(f, 1e-5, 1.0), std::domain_error);
}

TEST_CASE("q_distance is a norm on fields over a fixed mesh") {
  auto gen = test_util::rng(47);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto mesh = build_mesh(1e-3, 15.0, 64, MeshKind::Geometric);
  auto rand_field = [&] {
    std::vector<double> v(mesh->size());
    for (double& x : v) x = unit(gen);
    return DensityField(mesh, v, 0.0);
  };
  for (int rep = 0; rep < 50; ++rep) {
    const auto a = rand_field(), b = rand_field(), c = rand_field();
    CHECK(q_distance(a, a, 0.5) == 0.0);
    CHECK(q_distance(a, b, 0.5) == q_distance(b, a, 0.5));
    CHECK(q_distance(a, c, 0.5) <=
          q_distance(a, b, 0.5) + q_distance(b, c, 0.5) + 1e-12);
    if (a.values != b.values) CHECK(q_distance(a, b, 0.5) > 0.0);

    // homogeneity, exact under power-of-two scaling
    DensityField a2 = a, b2 = b;
    for (double& v : a2.values) v *= 2.0;
    for (double& v : b2.values) v *= 2.0;
    CHECK(q_distance(a2, b2, 0.5) == 2.0 * q_distance(a, b, 0.5));
  }
  auto other = build_mesh(1e-3, 15.0, 32, MeshKind::Geometric);
  CHECK_THROWS_AS(q_distance(rand_field(), DensityField::zero(other), 0.5),
                  std::invalid_argument);
}

TEST_CASE("continuous dependence and uniqueness") {
  auto mesh = build_mesh(1e-4, 20.0, 96, MeshKind::Geometric);
  SolverConfig cfg;
  cfg.t_end = 0.5;
  const auto spec = default_spec();
  const SpaceParams params{0.5, 1.5};
  const auto base =
      run(InitialDatum::exponential(1.0, 1.0), mesh, spec, 0.5, cfg);

  // identical configs: Q must vanish bitwise by determinism
  const auto clone =
      run(InitialDatum::exponential(1.0, 1.0), mesh, spec, 0.5, cfg);
  const auto same = check_continuous_dependence(base, clone, spec, params);
  CHECK(same.pass);
  CHECK(same.q_initial == 0.0);

  // a 1% perturbation obeys the Gronwall envelope
  const auto bumped =
      run(InitialDatum::exponential(1.01, 1.0), mesh, spec, 0.5, cfg);
  const auto sep = check_continuous_dependence(base, bumped, spec, params);
  CHECK(sep.pass);
  CHECK(sep.q_initial > 0.0);
  CHECK(sep.worst_log_gap >= 0.0);

  // c = 0: nothing evolves, so Q stays at Q(0) exactly
  const auto spec0 = default_spec(0.0);
  const auto f0 = run(InitialDatum::exponential(1.0, 1.0), mesh, spec0, 0.5, cfg);
  const auto h0 = run(InitialDatum::exponential(1.01, 1.0), mesh, spec0, 0.5, cfg);
  const double q0 =
      q_distance(f0.initial(), h0.initial(), params.sigma1);
  const double qT =
      q_distance(f0.final_field(), h0.final_field(), params.sigma1);
  CHECK(qT == q0);
  CHECK(check_continuous_dependence(f0, h0, spec0, params).pass);
}

TEST_CASE("mass defect decreases under truncation refinement") {
  SolverConfig cfg;
  cfg.t_end = 0.5;
  const auto spec = default_spec();
  const auto init = InitialDatum::exponential(1.0, 1.0);
  std::vector<Trajectory> runs_store;
  const double n0 = 10.0, zmin0 = 4e-4;
  const std::size_t cells0 = 64;
  for (int i = 0; i < 3; ++i) {
    const double f = std::pow(2.0, i);
    auto mesh = build_mesh(zmin0 / f, n0 * f, cells0 << i, MeshKind::Geometric);
    runs_store.push_back(run(init, mesh, spec, 0.5, cfg));
  }
  std::vector<const Trajectory*> ptrs;
  for (const auto& t : runs_store) ptrs.push_back(&t);
  const auto report = check_mass_conservation_limit(ptrs);
  CHECK(report.pass);
  REQUIRE(report.defects.size() == 3);
  CHECK(report.defects[1] < report.defects[0]);
  CHECK(report.defects[2] < report.defects[1]);
  for (double sd : report.signed_defects) CHECK(sd >= -1e-9);
}

TEST_CASE("mass defects vanish identically without collisions") {
  SolverConfig cfg;
  cfg.t_end = 0.5;
  const auto spec = default_spec(0.0);
  const auto init = InitialDatum::exponential(1.0, 1.0);
  std::vector<Trajectory> runs_store;
  for (int i = 0; i < 2; ++i) {
    auto mesh = build_mesh(4e-4 / (1 << i), 10.0 * (1 << i), 48 << i,
                           MeshKind::Geometric);
    runs_store.push_back(run(init, mesh, spec, 0.5, cfg));
  }
  std::vector<const Trajectory*> ptrs{&runs_store[0], &runs_store[1]};
  const auto report = check_mass_conservation_limit(ptrs);
  CHECK(report.pass);
  for (double d : report.defects) CHECK(d == 0.0);
}
