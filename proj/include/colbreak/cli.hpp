#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "colbreak/config.hpp"
#include "colbreak/io.hpp"
#include "colbreak/oracles.hpp"
#include "colbreak/operators.hpp"
#include "colbreak/solver.hpp"
#include "colbreak/verification.hpp"

namespace colbreak {

namespace cli_detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConstraintError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DensityField random_field(std::shared_ptr<const Mesh> mesh,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(mesh->size());
  for (double& x : v) x = dist(rng);
  return DensityField(std::move(mesh), std::move(v), 0.0);
}

inline double rel_sup_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double sup_diff = 0.0, sup_ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sup_diff = std::max(sup_diff, std::abs(a[i] - b[i]));
    sup_ref = std::max(sup_ref, std::abs(a[i]));
  }
  if (sup_ref == 0.0) return sup_diff == 0.0 ? 0.0 : 1.0;
  return sup_diff / sup_ref;
}

// rhs vs brute-force agreement plus the weak-form mass-rate identity on a
// set of fields: the initial datum and a few seeded random fields.
inline CheckResult check_operator_oracle(const RunConfig& cfg,
                                         const DensityField& g0, int threads,
                                         std::uint64_t seed) {
  const KernelSpec spec = cfg.make_kernel();
  std::shared_ptr<const Mesh> mesh = g0.mesh;
  if (mesh->size() > 512)
    mesh = build_mesh(cfg.z_min, cfg.n, 128, MeshKind::Geometric);

  std::vector<DensityField> fields;
  if (mesh.get() == g0.mesh.get()) fields.push_back(g0);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 3; ++i) fields.push_back(random_field(mesh, rng));

  CollisionOperator op(mesh, spec, threads);
  CheckResult res{"operator_oracle", true, 0.0, ""};
  double worst_rel = 0.0, worst_weak = 0.0;
  for (const DensityField& f : fields) {
    const OperatorOutput fast = op.apply(f);
    const OperatorOutput slow = brute_force_rhs(f, spec);
    worst_rel = std::max(worst_rel, rel_sup_diff(fast.rhs, slow.rhs));
    double strong = 0.0;
    for (std::size_t i = 0; i < mesh->size(); ++i)
      strong += mesh->center(i) * fast.rhs[i] * mesh->width(i);
    // the weak-form rate differs from the strong form by exactly the
    // daughter mass born below z_min, which apply() accounts separately
    const double weak = op.weak_moment_rate(f, 1.0);
    const double scale =
        std::max({1.0, std::abs(weak), fast.subgrid_mass_loss, std::abs(strong)});
    worst_weak = std::max(
        worst_weak,
        std::abs(strong - (weak - fast.subgrid_mass_loss)) / (1e-11 * scale));
  }
  res.pass = worst_rel <= 1e-8 && worst_weak <= 1.0;
  res.margin = 1e-8 - worst_rel;
  res.detail = "max rel diff " + std::to_string(worst_rel);
  return res;
}

inline CheckResult check_mass_law(const Trajectory& traj) {
  CheckResult res{"mass_law", true, 0.0, ""};
  const auto& log_rows = traj.moment_log;
  const double m1_0 = log_rows.front().m1;
  const double m0_0 = log_rows.front().m0;
  double max_excess = 0.0;
  for (std::size_t k = 1; k < log_rows.size(); ++k) {
    const double dt = log_rows[k].t - log_rows[k - 1].t;
    if (!(dt > 0.0)) continue;
    const double m1_rise = (log_rows[k].m1 - log_rows[k - 1].m1) / (m1_0 * dt);
    const double m1_drop_beyond_flux =
        ((log_rows[k - 1].m1 - log_rows[k].m1) - log_rows[k].flux_out * dt) /
        (m1_0 * dt);
    const double m0_rise = (log_rows[k].m0 - log_rows[k - 1].m0) / (m0_0 * dt);
    max_excess = std::max({max_excess, m1_rise, m1_drop_beyond_flux, m0_rise});
  }
  res.pass = max_excess <= 1e-6;
  res.margin = 1e-6 - max_excess;
  res.detail = "max per-unit-time excess " + std::to_string(max_excess);
  return res;
}

inline CheckResult check_tail_bounds(const DensityField& field) {
  CheckResult res{"tail_bound", true, 0.0, ""};
  double min_margin = std::numeric_limits<double>::infinity();
  for (double beta : {1.0, 2.0, 5.0}) {
    if (beta <= field.mesh->z_min() || beta >= field.mesh->n()) continue;
    for (double r : {0.5, 1.0, 2.0}) {
      const TailBoundResult t = tail_bound_check(field, beta, r);
      min_margin = std::min(min_margin, t.rhs * (1.0 + 1e-9) - t.lhs);
      if (!t.pass) res.pass = false;
    }
  }
  res.margin = min_margin;
  res.detail = res.pass ? "all tail bounds hold" : "tail bound violated";
  return res;
}

struct VerifyOutcome {
  VerificationReport report;
  Trajectory trajectory;
};

inline VerifyOutcome run_and_verify(const RunConfig& cfg, int threads,
                                    std::uint64_t seed) {
  const KernelSpec spec = cfg.make_kernel();
  const SpaceParams params = cfg.make_space();
  const InitialDatum init = cfg.make_init();
  auto mesh = cfg.make_mesh();

  VerifyOutcome out;
  out.trajectory = run(init, mesh, spec, params.sigma1, cfg.solver, threads);
  const Trajectory& traj = out.trajectory;

  VerificationReport& report = out.report;
  report.fingerprint = fingerprint_config(cfg);

  const BoundLedger ledger = compute_ledger(traj.initial(), spec, params,
                                            cfg.solver.t_end, cfg.verify.z_o);
  report.ledger_echo = {{"gamma0", ledger.gamma0},
                        {"gamma1", ledger.gamma1},
                        {"gamma2_T", ledger.gamma2_T},
                        {"gamma_neg_T", ledger.gamma_neg_T},
                        {"a0", ledger.a0},
                        {"log_s_T", ledger.log_s_T},
                        {"log_c_emp", ledger.log_c_emp},
                        {"theta_coef", ledger.theta_coef},
                        {"theta_apriori", ledger.theta_apriori}};

  if (cfg.verify.operator_oracle)
    report.checks.push_back(check_operator_oracle(cfg, traj.initial(), threads, seed));
  if (cfg.verify.mass_law) report.checks.push_back(check_mass_law(traj));
  if (cfg.verify.moment_bounds) {
    const MomentBoundsReport r = check_moment_bounds(traj, ledger);
    report.checks.push_back(CheckResult{"moment_bounds", r.pass,
                                        1.0 + kBoundSlack - r.max_ratio(),
                                        r.detail});
  }
  if (cfg.verify.uniform_bound) {
    const UniformBoundReport r = check_uniform_bound(traj, ledger, cfg.verify.z_o);
    report.checks.push_back(
        CheckResult{"uniform_bound", r.pass, r.min_log_gap_majorant, r.detail});
  }
  if (cfg.verify.equicontinuity && cfg.solver.t_end > 0.0) {
    std::vector<double> ht = {0.1, 0.05, 0.025};
    std::vector<double> hs = {0.2, 0.1, 0.05};
    if (cfg.solver.t_end <= 0.2)
      for (double& h : ht) h *= cfg.solver.t_end;
    const EquicontinuityReport r = check_equicontinuity(traj, ledger, ht, hs);
    report.checks.push_back(
        CheckResult{"equicontinuity", r.pass, r.worst_time_log_gap, r.detail});
  }
  if (cfg.verify.continuous_dependence) {
    InitialDatum perturbed = init;
    perturbed.amplitude *= (1.0 + cfg.verify.perturbation);
    Trajectory traj_h = run(perturbed, mesh, spec, params.sigma1, cfg.solver, threads);
    const DependenceReport r =
        check_continuous_dependence(traj, traj_h, spec, params);
    report.checks.push_back(
        CheckResult{"continuous_dependence", r.pass, r.worst_log_gap, r.detail});
  }
  if (cfg.verify.tail_bound)
    report.checks.push_back(check_tail_bounds(traj.final_field()));
  if (cfg.verify.mass_conservation) {
    std::vector<Trajectory> levels;
    for (int i = 0; i < 3; ++i) {
      const double f = std::pow(2.0, i);
      auto level_mesh = build_mesh(cfg.z_min / f, cfg.n * f,
                                   cfg.cells << static_cast<unsigned>(i),
                                   MeshKind::Geometric);
      levels.push_back(run(init, level_mesh, spec, params.sigma1, cfg.solver, threads));
    }
    std::vector<const Trajectory*> ptrs;
    for (const auto& t : levels) ptrs.push_back(&t);
    const MassLimitReport r = check_mass_conservation_limit(ptrs);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < r.defects.size(); ++k)
      margin = std::min(margin, 1.1 * r.defects[k] - r.defects[k + 1]);
    report.checks.push_back(CheckResult{"mass_conservation", r.pass, margin, r.detail});
  }
  return out;
}

inline void write_run_outputs(const RunConfig& cfg, const Trajectory& traj,
                              const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_trajectory(traj, out_dir / "trajectory.csv", out_dir / "moments.csv");
  atomic_write(out_dir / "config_echo.txt", emit_config(cfg));
}

}  // namespace cli_detail

/// Entry point behind the colbreak binary. Exit codes: 0 success / all
/// checks pass, 1 check failure, 2 configuration error, 3 numerical
/// instability.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"solver and verification harness for the truncated coagulation "
               "equation with collisional breakage"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int threads = 1;
  std::uint64_t seed = 12345;
  int levels = 3;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_override, "output directory (overrides [output] dir)");
    sub->add_option("--threads", threads, "worker threads (speed only, never results)");
    sub->add_option("--seed", seed, "seed for random-field property sweeps");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "integrate and write outputs");
  add_common(cmd_run);
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "integrate and run the verification suite");
  add_common(cmd_verify);
  CLI::App* cmd_conv = app.add_subcommand(
      "convergence-study", "truncation/mesh refinement studies");
  add_common(cmd_conv);
  cmd_conv->add_option("--levels", levels, "number of refinement levels");
  CLI::App* cmd_oracle = app.add_subcommand(
      "oracle-compare", "constant-kernel test mode vs the closed form");
  add_common(cmd_oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const ParseResult parsed = parse_config(cli_detail::read_file(config_path));
    if (!parsed.config) {
      for (const std::string& err : parsed.errors)
        std::fprintf(stderr, "config error: %s\n", err.c_str());
      return 2;
    }
    RunConfig cfg = *parsed.config;
    if (!out_override.empty()) cfg.dir = out_override;
    const std::filesystem::path out_dir = cfg.dir;

    if (cmd_run->parsed()) {
      const Trajectory traj =
          run(cfg.make_init(), cfg.make_mesh(), cfg.make_kernel(), cfg.sigma1,
              cfg.solver, threads);
      cli_detail::write_run_outputs(cfg, traj, out_dir);
      std::printf("run complete: %zu accepted steps, wrote %s\n",
                  traj.accepted_steps, (out_dir / "trajectory.csv").c_str());
      return 0;
    }

    if (cmd_verify->parsed()) {
      const cli_detail::VerifyOutcome outcome =
          cli_detail::run_and_verify(cfg, threads, seed);
      cli_detail::write_run_outputs(cfg, outcome.trajectory, out_dir);
      write_report(outcome.report, out_dir / "report.txt");
      for (const CheckResult& c : outcome.report.checks)
        std::printf("%s=%s margin=%.6g\n", c.name.c_str(),
                    c.pass ? "pass" : "fail", c.margin);
      return outcome.report.all_pass() ? 0 : 1;
    }

    if (cmd_conv->parsed()) {
      if (levels < 2) {
        std::fprintf(stderr, "config error: --levels must be >= 2\n");
        return 2;
      }
      const KernelSpec spec = cfg.make_kernel();
      const InitialDatum init = cfg.make_init();
      std::vector<Trajectory> runs;
      for (int i = 0; i < levels; ++i) {
        const double f = std::pow(2.0, i);
        auto mesh = build_mesh(cfg.z_min / f, cfg.n * f,
                               cfg.cells << static_cast<unsigned>(i),
                               cfg.kind == "uniform" ? MeshKind::Uniform
                                                     : MeshKind::Geometric);
        runs.push_back(run(init, mesh, spec, cfg.sigma1, cfg.solver, threads));
      }
      std::vector<const Trajectory*> ptrs;
      for (const auto& t : runs) ptrs.push_back(&t);
      const MassLimitReport mass = check_mass_conservation_limit(ptrs);

      std::vector<std::size_t> res;
      for (int i = 0; i < levels; ++i)
        res.push_back(cfg.cells << static_cast<unsigned>(i));
      const ConvergenceTable table =
          self_convergence(init, spec, cfg.sigma1, cfg.solver, cfg.z_min, cfg.n,
                           res, cfg.z_min * 10.0, cfg.verify.z_o, 512, threads);

      VerificationReport report;
      report.fingerprint = fingerprint_config(cfg);
      double mass_margin = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k + 1 < mass.defects.size(); ++k)
        mass_margin = std::min(mass_margin, 1.1 * mass.defects[k] - mass.defects[k + 1]);
      report.checks.push_back(
          CheckResult{"mass_conservation", mass.pass, mass_margin, mass.detail});
      report.checks.push_back(CheckResult{
          "self_convergence", table.monotone, table.observed_order,
          "observed order " + std::to_string(table.observed_order)});
      std::filesystem::create_directories(out_dir);
      write_report(report, out_dir / "study_report.txt");
      for (std::size_t k = 0; k < mass.defects.size(); ++k)
        std::printf("level %zu: mass defect %.6e\n", k, mass.defects[k]);
      for (const CheckResult& c : report.checks)
        std::printf("%s=%s margin=%.6g\n", c.name.c_str(),
                    c.pass ? "pass" : "fail", c.margin);
      return report.all_pass() ? 0 : 1;
    }

    // oracle-compare
    const KernelSpec spec =
        KernelSpec::constant_collision(1.0, EfficiencyModel::pure_coagulation());
    const InitialDatum init = InitialDatum::exponential(1.0, 1.0);
    const Trajectory traj =
        run(init, cfg.make_mesh(), spec, cfg.sigma1, cfg.solver, threads);
    const OracleComparison cmp = compare_smoluchowski(traj, spec, init);
    VerificationReport report;
    report.fingerprint = fingerprint_config(cfg);
    report.checks.push_back(CheckResult{"oracle_density", cmp.density_sup_rel_err <= 0.02,
                                        0.02 - cmp.density_sup_rel_err,
                                        "sup-norm rel err"});
    report.checks.push_back(CheckResult{"oracle_m0", cmp.m0_rel_err <= 0.01,
                                        0.01 - cmp.m0_rel_err, "M0 rel err"});
    std::filesystem::create_directories(out_dir);
    write_report(report, out_dir / "oracle_report.txt");
    for (const CheckResult& c : report.checks)
      std::printf("%s=%s margin=%.6g\n", c.name.c_str(), c.pass ? "pass" : "fail",
                  c.margin);
    return report.all_pass() ? 0 : 1;
  } catch (const ConstraintError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical instability: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace colbreak
