#include "sweep/cli.hpp"

#include "sweep/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

namespace sweep {

using nlohmann::json;
namespace fs = std::filesystem;

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig c;
  CLI::App app{"Integro-differential sweeping process toolkit", "sweep"};
  app.require_subcommand(1);
  double tol = 0.0;

  auto common = [&](CLI::App* s) {
    s->add_option("--out", c.out, "Output directory");
    s->add_option("--seed", c.seed, "Seed recorded in reports");
  };
  auto spec_opt = [&](CLI::App* s) {
    s->add_option("--spec", c.spec, "Problem spec JSON or builtin:example83")->required();
  };
  auto k_opt = [&](CLI::App* s) { s->add_option("--k", c.k, "Mesh intervals")->check(CLI::PositiveNumber); };
  auto tol_opt = [&](CLI::App* s) { s->add_option("--tol", tol, "Tolerance")->check(CLI::PositiveNumber); };

  auto* sim = app.add_subcommand("simulate", "Catching-up scheme with the nominal controls");
  spec_opt(sim);
  k_opt(sim);
  common(sim);

  auto* opt = app.add_subcommand("optimize", "Solve the discrete problem around a reference");
  spec_opt(opt);
  opt->add_option("--reference", c.reference, "Reference arc (CSV or builtin:example83-case-X)")->required();
  k_opt(opt);
  opt->add_option("--epsilon", c.epsilon, "Localization radius; 0 default, inf disables");
  tol_opt(opt);
  opt->add_option("--gradient", c.gradient, "adjoint, forward or central")
      ->check(CLI::IsMember({"adjoint", "forward", "central"}));
  common(opt);

  auto* kkt = app.add_subcommand("check-kkt", "Verify necessary optimality conditions");
  spec_opt(kkt);
  kkt->add_option("--solution", c.solution, "Trajectory CSV or builtin:example83-case-X")->required();
  kkt->add_option("--mode", c.mode, "discrete or continuous")
      ->check(CLI::IsMember({"discrete", "continuous"}));
  kkt->add_option("--lambda", c.lambda, "Cost multiplier")->check(CLI::NonNegativeNumber);
  kkt->add_option("--reference", c.reference, "Reference arc of the discrete problem");
  kkt->add_option("--epsilon", c.epsilon, "Localization radius of the discrete problem");
  kkt->add_option("--grid", c.grid, "Grid points for the continuous check")->check(CLI::Range(3, 1000000));
  tol_opt(kkt);
  common(kkt);

  auto* ex = app.add_subcommand("example83", "Closed-form modes of the voltage-source instance");
  ex->add_option("--case", c.example_case, "i, ii, iii or all")
      ->check(CLI::IsMember({"i", "ii", "iii", "all"}));
  ex->add_option("--grid", c.grid, "Grid points")->check(CLI::Range(3, 1000000));
  tol_opt(ex);
  common(ex);

  auto* rec = app.add_subcommand("reconstruct", "Discrete feasible approximation of a reference");
  spec_opt(rec);
  rec->add_option("--reference", c.reference, "Reference arc")->required();
  k_opt(rec);
  common(rec);

  auto* conv = app.add_subcommand("convergence", "Solve the discrete problem on a ladder of meshes");
  spec_opt(conv);
  conv->add_option("--reference", c.reference, "Reference arc")->required();
  conv->add_option("--ks", c.ks, "Mesh sizes")->delimiter(',')->check(CLI::PositiveNumber);
  conv->add_option("--epsilon", c.epsilon, "Localization radius");
  tol_opt(conv);
  common(conv);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), 0);
  } catch (const CLI::CallForAllHelp&) {
    throw UsageError(app.help("", CLI::AppFormatMode::All), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (auto* s : app.get_subcommands()) c.subcommand = s->get_name();
  if (tol > 0.0) c.tol = tol;
  return c;
}

namespace {

double parse_epsilon(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || v < 0.0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("--epsilon: expected a nonnegative number or inf, got " + s);
  }
}

std::string path_in(const RunConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (!fs::is_directory(c.out)) throw UsageError("--out: cannot create directory " + c.out);
}

ProblemSpec spec_or_usage(const std::string& source) {
  try {
    return load_spec(source);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

Reference reference_or_usage(const std::string& source, const ProblemSpec& spec) {
  try {
    return load_reference(source, spec);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void dump(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  ProblemSpec spec = spec_or_usage(c.spec);
  prepare_out(c);
  Mesh mesh = Mesh::uniform(spec.T, c.k);
  Simulation sim = simulate(spec, mesh, ControlSequence::sample(spec.nominal, mesh));
  write_trajectory_csv(path_in(c, "trajectory.csv"), sim.trajectory);
  json rep{{"subcommand", "simulate"},
           {"spec", spec.name},
           {"k", c.k},
           {"seed", c.seed},
           {"max_step_residual", sim.max_step_residual},
           {"domain_warning", sim.domain_warning},
           {"bound_flags", sim.bounds.flagged.size()},
           {"bound_flags_running", sim.bounds.flagged_running.size()}};
  dump(path_in(c, "report.json"), rep);
  out << "simulate: k=" << c.k << " wrote " << path_in(c, "trajectory.csv") << "\n";
  return kExitOk;
}

int cmd_optimize(const RunConfig& c, std::ostream& out) {
  ProblemSpec spec = spec_or_usage(c.spec);
  Reference ref = reference_or_usage(c.reference, spec);
  const double eps = parse_epsilon(c.epsilon);
  prepare_out(c);
  DiscreteProblem P = build(spec, ref, c.k, eps);
  SolveOptions o;
  if (c.tol) o.tolerance = *c.tol;
  o.gradient = c.gradient == "forward"   ? GradientMode::forward
               : c.gradient == "central" ? GradientMode::central
                                         : GradientMode::adjoint;
  SolveReport R = solve(P, o);
  write_trajectory_csv(path_in(c, "solution.csv"), R.solution);
  json rep = to_json(R);
  rep["subcommand"] = "optimize";
  rep["k"] = c.k;
  rep["epsilon"] = std::isfinite(P.epsilon) ? json(P.epsilon) : json("inf");
  rep["seed"] = c.seed;
  dump(path_in(c, "report.json"), rep);
  out << "optimize: k=" << c.k << " cost=" << fmt(R.cost) << (R.converged ? " converged" : " not converged")
      << "\n";
  if (!R.diagnostic.empty()) out << "  " << R.diagnostic << "\n";
  return R.converged ? kExitOk : kExitNumeric;
}

void print_report(const ResidualReport& r, std::ostream& out) {
  for (const auto& e : r.entries) {
    out << "  " << e.tag << "  ";
    if (!e.applicable)
      out << "n/a";
    else
      out << fmt(e.residual) << (e.pass ? "  pass" : "  FAIL");
    if (!e.note.empty()) out << "  (" << e.note << ")";
    out << "\n";
  }
}

int cmd_check_kkt(const RunConfig& c, std::ostream& out) {
  ProblemSpec spec = spec_or_usage(c.spec);
  const double tol = c.tol.value_or(1e-8);
  json rep{{"subcommand", "check-kkt"}, {"mode", c.mode}, {"lambda", c.lambda}, {"seed", c.seed}};
  ResidualReport report;
  if (c.mode == "continuous") {
    Mode m;
    bool builtin = false;
    try {
      builtin = builtin_mode(c.solution, m);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (!builtin || spec.name != "example83")
      throw UsageError("continuous certificates are available for the builtin example83 closed forms only");
    prepare_out(c);
    AnalyticMode am = example83_best(m);
    ContinuousCertificate cert =
        verify_continuous_certificate(spec, am.solution, example83_certificate_data(am, c.lambda), c.grid, tol);
    report = cert.report;
    rep["case"] = mode_name(m);
    rep["v1"] = am.v1;
    rep["v2"] = am.v2;
  } else {
    Trajectory sol;
    try {
      sol = read_trajectory_csv(c.solution);
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
    Reference ref = c.reference.empty() ? Reference::from_trajectory(sol) : reference_or_usage(c.reference, spec);
    prepare_out(c);
    DiscreteProblem P = build(spec, ref, sol.k(), parse_epsilon(c.epsilon));
    DiscreteCertificate cert = assemble_discrete_certificate(P, sol, c.lambda, tol);
    report = cert.report;
    rep["k"] = sol.k();
    rep["primal_dual_residual"] = cert.primal_dual_residual();
    rep["endpoint_feasible"] = cert.endpoint_feasible;
  }
  rep["report"] = to_json(report);
  dump(path_in(c, "report.json"), rep);
  out << "check-kkt (" << c.mode << "):\n";
  print_report(report, out);
  return report.all_pass() ? kExitOk : kExitNumeric;
}

int cmd_example83(const RunConfig& c, std::ostream& out) {
  prepare_out(c);
  std::vector<Mode> modes;
  if (c.example_case == "all")
    modes = {Mode::i, Mode::ii, Mode::iii};
  else
    modes = {parse_mode(c.example_case)};
  const double tol = c.tol.value_or(1e-8);
  const ProblemSpec spec = example83_spec();
  std::string analytic = "case,t,x1,x2,y1,y2,a1,a2,x3\n";
  json summary{{"subcommand", "example83"}, {"seed", c.seed}};
  json cases = json::object();
  bool ok = true;
  const int N = 200;
  for (Mode m : modes) {
    ModeOptimum opt = example83_optimize_mode(m);
    AnalyticMode am = example83_analytic(m, opt.v2);
    ContinuousCertificate cert =
        verify_continuous_certificate(spec, am.solution, example83_certificate_data(am, 1.0), c.grid, tol);
    ok = ok && cert.report.all_pass();
    for (int i = 0; i <= N; ++i) {
      const double t = static_cast<double>(i) / N;
      Node z = am.solution.value(t);
      analytic += mode_name(m) + "," + fmt(t) + "," + fmt(z.x[0]) + "," + fmt(z.x[1]) + "," + fmt(z.y[0]) + "," +
                  fmt(z.y[1]) + "," + fmt(z.a[0]) + "," + fmt(z.a[1]) + "," + fmt(am.x3(t)) + "\n";
    }
    json cj{{"v1", am.v1},
            {"v2", am.v2},
            {"cost", am.cost},
            {"cost_simpson", am.cost_simpson},
            {"evaluations", opt.evaluations},
            {"certificate", to_json(cert.report)}};
    if (m != Mode::iii) cj["c"] = am.c;
    cases[mode_name(m)] = cj;
    out << "case " << mode_name(m) << ": v2=" << fmt(am.v2) << " v1=" << fmt(am.v1) << " J=" << fmt(am.cost)
        << (cert.report.all_pass() ? " certificate pass" : " certificate FAIL") << "\n";
  }
  summary["cases"] = cases;
  if (modes.size() == 3) {
    std::string best;
    double jbest = std::numeric_limits<double>::infinity();
    for (auto& [name, cj] : cases.items())
      if (cj["cost"].get<double>() < jbest) {
        jbest = cj["cost"].get<double>();
        best = name;
      }
    summary["best_case"] = best;
  }
  std::string curve = "v2,J_i,J_ii\n";
  for (int i = 0; i <= 400; ++i) {
    const double v = -1.0 + 3.0 * i / 400.0;
    curve += fmt(v) + "," + fmt(example83_cost(Mode::i, v)) + "," + fmt(example83_cost(Mode::ii, v)) + "\n";
  }
  write_file(path_in(c, "analytic.csv"), analytic);
  write_file(path_in(c, "cost-curve.csv"), curve);
  dump(path_in(c, "summary.json"), summary);
  return ok ? kExitOk : kExitNumeric;
}

int cmd_reconstruct(const RunConfig& c, std::ostream& out) {
  ProblemSpec spec = spec_or_usage(c.spec);
  Reference ref = reference_or_usage(c.reference, spec);
  prepare_out(c);
  Reconstruction r = reconstruct_discrete_feasible(spec, ref, c.k);
  write_trajectory_csv(path_in(c, "trajectory.csv"), r.trajectory);
  json rep{{"subcommand", "reconstruct"}, {"k", c.k}, {"seed", c.seed}, {"distance", to_json(r.distance)}};
  dump(path_in(c, "report.json"), rep);
  out << "reconstruct: k=" << c.k << " sup=" << fmt(r.distance.sup_norm)
      << " l2_derivative=" << fmt(r.distance.l2_derivative) << "\n";
  return kExitOk;
}

int cmd_convergence(const RunConfig& c, std::ostream& out) {
  ProblemSpec spec = spec_or_usage(c.spec);
  Reference ref = reference_or_usage(c.reference, spec);
  const double eps = parse_epsilon(c.epsilon);
  prepare_out(c);
  SolveOptions o;
  if (c.tol) o.tolerance = *c.tol;
  auto rows = convergence_study(spec, ref, c.ks, eps, o);
  const std::string csv = convergence_csv(rows);
  write_file(path_in(c, "convergence.csv"), csv);
  out << csv;
  bool ok = true;
  for (const auto& r : rows) ok = ok && r.ok;
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.subcommand == "simulate") return cmd_simulate(c, out);
    if (c.subcommand == "optimize") return cmd_optimize(c, out);
    if (c.subcommand == "check-kkt") return cmd_check_kkt(c, out);
    if (c.subcommand == "example83") return cmd_example83(c, out);
    if (c.subcommand == "reconstruct") return cmd_reconstruct(c, out);
    if (c.subcommand == "convergence") return cmd_convergence(c, out);
    err << "unknown subcommand " << c.subcommand << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const Error& e) {
    err << c.subcommand << ": numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig c;
  try {
    c = parse_args(args);
  } catch (const UsageError& e) {
    (e.code() == 0 ? out : err) << e.what() << "\n";
    return e.code();
  }
  return run(c, out, err);
}

}  // namespace sweep
