#include "nbody/cli.hpp"

#include "nbody/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>

namespace nbody {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitSingularity = 4;
constexpr int kExitVerification = 5;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

Regime parse_mode(const std::string& mode) {
  if (mode == "hyperbolic") return Regime::Hyperbolic;
  if (mode == "parabolic") return Regime::Parabolic;
  if (mode == "hp") return Regime::HyperbolicParabolic;
  throw ValidationError("unknown mode '" + mode +
                        "' (expected hyperbolic|parabolic|hp)");
}

struct CentralConfigArgs {
  std::string config_path;
  std::string out = "central_config.json";
  std::string mode = "parabolic";
  std::uint64_t seed = 0;
  int starts = 16;
  double tol = 1e-11;
};

int cmd_central_config(const CentralConfigArgs& a) {
  double t_start = now_seconds();
  json config = read_json_file(a.config_path);
  if (!config.contains("alpha"))
    throw ValidationError("config JSON needs an \"alpha\" entry");
  double alpha = config.at("alpha").get<double>();
  MassSystem sys(config.at("masses").get<std::vector<double>>(),
                 config.at("dim").get<int>());
  if (a.mode == "parabolic" && !(alpha > 0.0 && alpha < 2.0))
    throw ValidationError(
        "parabolic mode requires alpha in (0, 2); use --mode general for a "
        "bare central configuration");
  if (a.mode != "parabolic" && a.mode != "general")
    throw ValidationError("central-config --mode must be parabolic|general");

  PotentialModel model(sys, alpha);
  CentralConfigOptions opts;
  opts.seed = a.seed;
  opts.starts = a.starts;
  opts.tol = a.tol;

  json resolved = {{"command", "central-config"}, {"config", config},
                   {"mode", a.mode},             {"seed", a.seed},
                   {"starts", a.starts},         {"tol", a.tol}};
  int code = kExitOk;
  CentralConfiguration cc;
  try {
    cc = find_central_configuration(model, opts);
  } catch (const CentralConfigConvergenceError& e) {
    std::cerr << "central-config: " << e.what() << "\n";
    cc = e.best;
    code = kExitNonConvergence;
  }
  write_json_file(a.out, central_configuration_to_json(sys, alpha, cc));
  write_json_file(a.out + ".manifest.json",
                  run_manifest("central-config", resolved, a.seed,
                               now_seconds() - t_start));
  std::cout << "u_min = " << cc.u_min << ", beta = " << cc.beta
            << ", residual = " << cc.gradient_residual << "\n";
  return code;
}

struct SynthesizeArgs {
  std::string mode;
  double alpha = 1.0;
  std::string initial_path;
  std::string target_path;
  std::string bm_path;
  double horizon = 1e4;
  int nodes = 2000;
  std::uint64_t seed = 0;
  int starts = 16;
  double cc_tol = 1e-11;
  double opt_tol = 1e-8;
  int max_iters = 600;
  std::string tail = "truncate";
  std::string out = "run";
};

int cmd_synthesize(const SynthesizeArgs& a) {
  double t_start = now_seconds();
  json initial_json = read_json_file(a.initial_path);
  ConfigurationFile initial = read_configuration_json(initial_json);
  PotentialModel model(initial.system, a.alpha);

  SynthesisRequest req;
  req.regime = parse_mode(a.mode);
  req.x0 = project_center_of_mass(initial.system, initial.positions);
  req.grid.horizon = a.horizon;
  req.grid.nodes = a.nodes;
  req.opt.opt_tol = a.opt_tol;
  req.opt.max_iters = a.max_iters;
  req.cc_opts.seed = a.seed;
  req.cc_opts.starts = a.starts;
  req.cc_opts.tol = a.cc_tol;
  if (a.tail == "analytic")
    req.tail = TailMode::AnalyticTail;
  else if (a.tail != "truncate")
    throw ValidationError("--tail must be truncate|analytic");

  json resolved = {{"command", "synthesize"},
                   {"mode", a.mode},
                   {"alpha", a.alpha},
                   {"initial", initial_json},
                   {"horizon", a.horizon},
                   {"nodes", a.nodes},
                   {"seed", a.seed},
                   {"starts", a.starts},
                   {"cc_tol", a.cc_tol},
                   {"opt_tol", a.opt_tol},
                   {"max_iters", a.max_iters},
                   {"tail", a.tail}};

  if (req.regime != Regime::Parabolic) {
    if (a.target_path.empty())
      throw ValidationError("hyperbolic/hp synthesis needs --target a.json");
    json tj = read_json_file(a.target_path);
    ConfigurationFile target = read_configuration_json(tj);
    if (target.system.dof() != initial.system.dof())
      throw ValidationError("--target shape does not match --initial");
    req.a = project_center_of_mass(initial.system, target.positions);
    resolved["target"] = tj;
  }
  if (!a.bm_path.empty()) {
    json bj = read_json_file(a.bm_path);
    req.cc = central_configuration_from_json(initial.system, bj);
    resolved["bm"] = bj;
  }

  SynthesisReport rep = synthesize_trajectory(model, req);

  write_trajectory_csv(a.out + ".csv", model.system, rep.trajectory);
  write_json_file(a.out + ".meta.json",
                  trajectory_meta_to_json(model, rep.trajectory, &rep.path));
  json report = {{"final_action", rep.final_action},
                 {"iterations", rep.iterations},
                 {"gradient_norm", rep.gradient_norm},
                 {"el_residual", rep.el_residual},
                 {"hit_collision_guard", rep.hit_collision_guard},
                 {"converged", rep.converged},
                 {"energy", rep.trajectory.energy},
                 {"initial_guess", "phi = 0 (shifted reference)"}};
  write_json_file(a.out + ".report.json", report);
  write_json_file(a.out + ".manifest.json",
                  run_manifest("synthesize", resolved, a.seed,
                               now_seconds() - t_start));
  std::cout << "action = " << rep.final_action
            << ", iterations = " << rep.iterations
            << ", energy = " << rep.trajectory.energy
            << ", converged = " << (rep.converged ? "yes" : "no") << "\n";
  return rep.converged ? kExitOk : kExitNonConvergence;
}

struct IntegrateArgs {
  std::string state_path;
  double alpha = 1.0;
  double t0 = 1.0;
  double t1 = 100.0;
  double rtol = 1e-10;
  int samples = 500;
  bool log_samples = false;
  std::string out = "orbit";
};

int cmd_integrate(const IntegrateArgs& a) {
  double t_start = now_seconds();
  json sj = read_json_file(a.state_path);
  StateFile st = read_state_json(sj);
  PotentialModel model(st.system, a.alpha);
  if (a.samples < 2) throw ValidationError("--samples must be >= 2");
  if (a.log_samples && !(a.t0 > 0.0))
    throw ValidationError("--log-samples needs t0 > 0");

  std::vector<double> times(a.samples);
  for (int i = 0; i < a.samples; ++i) {
    double u = static_cast<double>(i) / (a.samples - 1);
    times[i] = a.log_samples ? a.t0 * std::pow(a.t1 / a.t0, u)
                             : a.t0 + (a.t1 - a.t0) * u;
  }
  Trajectory traj = integrate_newton(model, st.positions, st.velocities, a.t0,
                                     a.t1, a.rtol, times);

  double h0 = total_energy(model, st.positions, st.velocities);
  double drift = 0.0;
  for (int k = 0; k < traj.n_samples(); ++k) {
    double h = total_energy(model, traj.positions.row(k).transpose(),
                            traj.velocities.row(k).transpose());
    drift = std::max(drift, std::abs(h - h0));
  }
  double rel_drift = drift / std::max(1.0, std::abs(h0));

  json resolved = {{"command", "integrate"}, {"state", sj},
                   {"alpha", a.alpha},       {"t0", a.t0},
                   {"t1", a.t1},             {"rtol", a.rtol},
                   {"samples", a.samples},   {"log_samples", a.log_samples}};
  write_trajectory_csv(a.out + ".csv", model.system, traj);
  write_json_file(a.out + ".meta.json",
                  trajectory_meta_to_json(model, traj, nullptr));
  write_json_file(a.out + ".manifest.json",
                  run_manifest("integrate", resolved, 0, now_seconds() - t_start));
  std::cout << "terminal energy = " << traj.energy
            << ", max relative drift = " << rel_drift << "\n";
  return kExitOk;
}

struct VerifyArgs {
  std::string traj_path;
  std::string spec = "auto";
  std::string out = "verify.json";
};

int cmd_verify(const VerifyArgs& a) {
  double t_start = now_seconds();
  std::string meta_path = a.spec;
  if (a.spec == "auto") {
    meta_path = a.traj_path;
    if (meta_path.size() > 4 &&
        meta_path.compare(meta_path.size() - 4, 4, ".csv") == 0)
      meta_path = meta_path.substr(0, meta_path.size() - 4);
    meta_path += ".meta.json";
  }
  json meta = read_json_file(meta_path);
  MassSystem sys(meta.at("masses").get<std::vector<double>>(),
                 meta.at("dim").get<int>());
  double alpha = meta.at("alpha").get<double>();
  PotentialModel model(sys, alpha);
  Trajectory traj = read_trajectory_csv(a.traj_path, sys);
  traj.alpha = alpha;

  json out;
  bool hard_fail = false;
  auto add_check = [&](const std::string& name, bool pass, bool hard,
                       json detail) {
    detail["name"] = name;
    detail["pass"] = pass;
    detail["hard"] = hard;
    out["checks"].push_back(detail);
    if (hard && !pass) hard_fail = true;
  };

  ChazyReport chazy = chazy_classify(model, traj);  // throws on non-expansive
  json pair_table = json::array();
  for (auto& [i, j, e] : chazy.pair_exponents)
    pair_table.push_back({{"i", i}, {"j", j}, {"exponent", e}});
  out["classification"] = {{"label", chazy_name(chazy.label)},
                           {"pair_exponents", pair_table},
                           {"norm_growth_exponent", chazy.norm_growth_exponent}};

  std::optional<ReferencePath> path;
  if (meta.contains("regime")) {
    std::string regime = meta.at("regime").get<std::string>();
    Vec av = vec_from_nested(meta.at("a"), sys, "meta a");
    Vec parab = vec_from_nested(meta.at("parabolic_vector"), sys, "meta b");
    ReferencePath p;
    p.alpha = alpha;
    p.a = av;
    p.parab = parab;
    if (regime == "hyperbolic") {
      p.regime = Regime::Hyperbolic;
      if (std::abs(alpha - 1.0) >= 1e-6) p.gamma = gamma_coefficients(model, av);
    } else if (regime == "parabolic") {
      p.regime = Regime::Parabolic;
    } else {
      p.regime = Regime::HyperbolicParabolic;
      p.partition = cluster_partition(sys, av);
    }
    path = p;

    const char* expected = regime == "hyperbolic"
                               ? "H"
                               : (regime == "parabolic" ? "P" : "HP");
    add_check("chazy_label", std::string(chazy_name(chazy.label)) == expected,
              true, {{"expected", expected}, {"got", chazy_name(chazy.label)}});

    ExpansionSpec spec = make_expansion_spec(model, *path);
    ExpansionResidual res = expansion_residual(sys, traj, spec, true);
    double margin = 0.1;
    bool zero_resid = res.fit.points == 0;
    bool pass = zero_resid ||
                res.fit.exponent <= spec.remainder_exponent + margin;
    json detail = power_law_fit_to_json(res.fit, spec.remainder_exponent,
                                        pass);
    detail["one_sided"] = true;
    detail["margin"] = margin;
    if (res.conditioning_warning) detail["warning"] = "ill-conditioned fit";
    if (!zero_resid && res.fit.r_squared < 0.5)
      detail["warning"] = "low r^2: residual at noise level";
    add_check("remainder_exponent", pass, true, detail);

    if (p.regime == Regime::Parabolic) {
      ProjectionDecay proj = b_projection_decay(model, traj, *path);
      bool ppass =
          proj.negligible || proj.fit.exponent <= proj.bound_exponent + 0.05;
      json pd = proj.negligible
                    ? json{{"negligible", true}}
                    : power_law_fit_to_json(proj.fit, proj.bound_exponent,
                                            ppass);
      add_check("b_projection_decay", ppass, true, pd);
    } else {
      // velocity limit: gamma'(T) -> a
      Vec vT = traj.velocities.row(traj.n_samples() - 1).transpose();
      double dev = mass_norm(sys, Vec(vT - av));
      double h_expect = 0.5 * mass_norm_sq(sys, av);
      double h_err = std::abs(traj.energy - h_expect);
      add_check("terminal_velocity", dev <= 1e-2, false,
                {{"deviation", dev}});
      add_check("energy_level", h_err <= 1e-3 * std::max(1.0, h_expect), false,
                {{"energy", traj.energy}, {"expected", h_expect}});
    }
  }

  json resolved = {{"command", "verify"}, {"traj", a.traj_path},
                   {"spec", a.spec}};
  out["manifest"] = run_manifest("verify", resolved, 0,
                                 now_seconds() - t_start);
  write_json_file(a.out, out);
  std::cout << "classification = " << chazy_name(chazy.label)
            << (hard_fail ? " [FAILED CHECKS]" : " [ok]") << "\n";
  return hard_fail ? kExitVerification : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"expansive N-body trajectory synthesis and verification"};
  app.require_subcommand(1);

  CentralConfigArgs cc;
  CLI::App* s_cc = app.add_subcommand(
      "central-config", "minimal normalized central configuration");
  s_cc->add_option("--config", cc.config_path, "JSON with dim, masses, alpha")
      ->required();
  s_cc->add_option("--out", cc.out, "output JSON path");
  s_cc->add_option("--mode", cc.mode, "parabolic|general");
  s_cc->add_option("--seed", cc.seed, "RNG seed");
  s_cc->add_option("--starts", cc.starts, "multi-start count");
  s_cc->add_option("--tol", cc.tol, "criticality residual tolerance");

  SynthesizeArgs sy;
  CLI::App* s_sy = app.add_subcommand("synthesize",
                                      "action-minimizing expansive motion");
  s_sy->add_option("--mode", sy.mode, "hyperbolic|parabolic|hp")->required();
  s_sy->add_option("--alpha", sy.alpha, "homogeneity exponent")->required();
  s_sy->add_option("--initial", sy.initial_path, "initial configuration JSON")
      ->required();
  s_sy->add_option("--target", sy.target_path, "asymptotic velocity JSON");
  s_sy->add_option("--bm", sy.bm_path, "central configuration JSON");
  s_sy->add_option("--horizon", sy.horizon, "grid horizon T");
  s_sy->add_option("--nodes", sy.nodes, "grid segments");
  s_sy->add_option("--seed", sy.seed, "RNG seed");
  s_sy->add_option("--starts", sy.starts, "central-config starts");
  s_sy->add_option("--cc-tol", sy.cc_tol, "central-config tolerance");
  s_sy->add_option("--opt-tol", sy.opt_tol, "gradient tolerance");
  s_sy->add_option("--max-iters", sy.max_iters, "iteration cap");
  s_sy->add_option("--tail", sy.tail, "truncate|analytic");
  s_sy->add_option("--out", sy.out, "output prefix");

  IntegrateArgs in;
  CLI::App* s_in = app.add_subcommand("integrate", "adaptive Newton flow");
  s_in->add_option("--state", in.state_path, "state JSON")->required();
  s_in->add_option("--alpha", in.alpha, "homogeneity exponent")->required();
  s_in->add_option("--t0", in.t0, "start time");
  s_in->add_option("--t1", in.t1, "end time");
  s_in->add_option("--rtol", in.rtol, "relative tolerance");
  s_in->add_option("--samples", in.samples, "sample count");
  s_in->add_flag("--log-samples", in.log_samples, "log-spaced samples");
  s_in->add_option("--out", in.out, "output prefix");

  VerifyArgs ve;
  CLI::App* s_ve = app.add_subcommand("verify", "asymptotic verification");
  s_ve->add_option("--traj", ve.traj_path, "trajectory CSV")->required();
  s_ve->add_option("--spec", ve.spec, "auto or metadata JSON path");
  s_ve->add_option("--out", ve.out, "verification JSON path");

  std::vector<std::string> argv_copy = args;
  try {
    std::vector<const char*> argv;
    argv.push_back("nbody");
    for (const std::string& s : argv_copy) argv.push_back(s.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (s_cc->parsed()) return cmd_central_config(cc);
    if (s_sy->parsed()) return cmd_synthesize(sy);
    if (s_in->parsed()) return cmd_integrate(in);
    if (s_ve->parsed()) return cmd_verify(ve);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ResonanceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const CollisionGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSingularity;
  } catch (const SingularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSingularity;
  } catch (const CollisionApproachError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSingularity;
  } catch (const ClassificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  } catch (const CentralConfigConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace nbody
