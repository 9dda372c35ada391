#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chemofront/dichotomy.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/oracles.hpp"
#include "chemofront/run_config.hpp"
#include "chemofront/spectral.hpp"
#include "chemofront/stepper.hpp"

namespace chemofront {

namespace cli_detail {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  unsigned jobs = 1;
  std::uint64_t seed = 12345;
  std::string record_path;
  std::string oracle_case;
};

inline RunConfig load_config(const Options& o) {
  KeyValueConfig kv = o.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config_path);
  for (const auto& s : o.overrides) {
    const auto [k, v] = split_override(s);
    kv.set(k, v);
  }
  return make_run_config(kv);
}

inline std::filesystem::path output_dir(const Options& o, bool required) {
  if (o.out_dir.empty() && !required) return {};
  std::filesystem::path dir = o.out_dir.empty() ? std::filesystem::path("out") : std::filesystem::path(o.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw InputError("output directory '" + dir.string() + "' is not writable");
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) { write_file_atomic(path, text); }

inline const char* yes_no(bool b) { return b ? "true" : "false"; }

inline int cmd_check(const Options& o, std::ostream& out) {
  const auto rc = load_config(o);
  rc.spec.params.validate();
  const auto rep = check_hypotheses(rc.spec.params);
  out << "hypothesis  holds\n";
  out << "H1          " << yes_no(rep.h1) << '\n';
  out << "H2          " << yes_no(rep.h2) << '\n';
  out << "H3          " << yes_no(rep.h3) << "  (strict b > 1: " << yes_no(rep.h3_strict) << ")\n";
  out << "H4          " << yes_no(rep.h4) << "  (strict a > 1: " << yes_no(rep.h4_strict) << ")\n";
  out << "margins\n";
  for (const auto& s : rep.margins) out << "  " << std::left << std::setw(18) << s.name << ' ' << s.value << '\n';
  out << "A1bar " << rep.A1bar << "\nA2bar " << rep.A2bar << '\n';
  if (rep.coexistence) out << "coexistence " << rep.coexistence->u << ' ' << rep.coexistence->v << '\n';
  else out << "coexistence none\n";
  nlohmann::ordered_json j = rep;
  out << j.dump(2) << '\n';
  if (const auto dir = output_dir(o, false); !dir.empty()) write_text(dir / "hypotheses.json", j.dump(2) + "\n");
  return 0;
}

inline int cmd_eigen(const Options& o, std::ostream& out) {
  const auto rc = load_config(o);
  const auto& q = rc.eigen;
  std::ostringstream csv;
  csv.precision(12);
  csv << "problem,d0,c,a0,len,lambda,lstar\n";
  for (double d0 : q.d0)
    for (double c : q.c)
      for (double a0 : q.a0) {
        std::string lstar;
        try {
          std::ostringstream s;
          s.precision(12);
          s << critical_length(d0, c, a0, q.problem);
          lstar = s.str();
        } catch (const NeverPositive&) {
          lstar = "never_positive";
        }
        for (double len : q.len)
          csv << to_string(q.problem) << ',' << d0 << ',' << c << ',' << a0 << ',' << len << ','
              << evaluate_eigenvalue(q.problem, d0, c, a0, len).value << ',' << lstar << '\n';
      }
  out << csv.str();
  if (const auto dir = output_dir(o, false); !dir.empty()) write_text(dir / "eigen.csv", csv.str());
  return 0;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
  const auto rc = load_config(o);
  const auto& spec = rc.spec;
  spec.params.validate();
  const auto init = build_initial_data(spec);
  RunOptions opt;
  opt.stop.t_end = rc.sim_t_end;
  opt.stop.h_max = rc.sim_h_stop;
  opt.probe_m = spec.rule.probe_m;
  opt.sample_dt = spec.sample_dt;
  opt.snapshot_times = rc.snapshot_times;
  const auto dir = output_dir(o, true);
  const auto traj = run(init, spec.params, spec.scheme, opt);
  std::ostringstream diag;
  write_diagnostics_csv(diag, traj.samples);
  write_text(dir / "diagnostics.csv", diag.str());
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    std::ostringstream snap;
    write_snapshot_csv(snap, traj.snapshots[i]);
    write_text(dir / ("snapshot_" + std::to_string(i) + ".csv"), snap.str());
  }
  const auto& last = traj.samples.back();
  out << "stop_reason " << traj.stop_reason << "\nt " << last.t << "\nh " << last.h << "\nhprime " << last.hprime
      << "\nsup_u " << last.sup_u << "\nsup_v " << last.sup_v << "\nhprime_cap " << traj.limits.hprime_cap << '\n';
  return 0;
}

inline int cmd_classify(const Options& o, std::ostream& out) {
  if (!o.record_path.empty()) {
    summarize(load_record(o.record_path), out);
    return 0;
  }
  const auto rc = load_config(o);
  const auto dir = output_dir(o, true);
  const auto rec = run_and_classify(rc.spec);
  write_text(dir / "record.json", record_json_text(rec));
  summarize(rec, out);
  return 0;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  const auto rc = load_config(o);
  if (rc.axes.empty()) throw InputError("sweep: no [sweep] axes configured");
  const auto dir = output_dir(o, true);
  const auto points = sweep(rc.spec, rc.axes, o.jobs, dir / "records");
  std::ostringstream csv;
  write_sweep_summary_csv(csv, rc.axes, points);
  write_text(dir / "summary.csv", csv.str());
  const auto advisories = monotonicity_advisories(rc.axes, points);
  std::string adv;
  for (const auto& a : advisories) adv += a + "\n";
  write_text(dir / "advisories.txt", adv);
  out << csv.str();
  out << "advisories " << advisories.size() << '\n';
  return 0;
}

inline int cmd_oracle(const Options& o, std::ostream& out) {
  const auto rc = load_config(o);
  const std::string name = !o.oracle_case.empty() ? o.oracle_case : rc.oracle_case;
  const auto& p = rc.spec.params;
  out.precision(12);
  const auto lv = [&](double a, double b) {
    const auto s = lv_ode_integrate(0.1, 0.1, a, b, p.r, rc.oracle_t_end, rc.oracle_dt);
    out << "u " << s.u << "\nv " << s.v << "\nt " << s.t << '\n';
  };
  if (name == "lv") lv(p.a, p.b);
  else if (name == "lv_weak_weak") lv(0.5, 0.5);
  else if (name == "lv_weak_strong") lv(0.5, 2.0);
  else if (name == "lv_strong_weak") lv(2.0, 0.5);
  else if (name == "decoupled_logistic") {
    const auto s = decoupled_logistic(0.1, 0.1, p, rc.oracle_t_end, rc.oracle_dt);
    const auto e = equilibrium_constants(p);
    out << "u " << s.u << "\nv " << s.v << "\nA1bar " << e.A1bar << "\nA2bar " << e.A2bar << '\n';
  } else if (name == "fisher_kpp") {
    FisherKppCase c;
    c.d0 = rc.eigen.d0.front();
    c.beta = rc.eigen.c.front();
    c.a = rc.eigen.a0.front();
    c.length = rc.eigen.len.front();
    c.bc = rc.eigen.problem;
    c.t_end = rc.oracle_t_end;
    c.initial = [&](double x) { return std::cos(0.5 * std::numbers::pi * x / c.length); };
    const auto res = fixed_fisher_kpp(c);
    out << "sup " << res.sup() << "\neigenvalue " << evaluate_eigenvalue(c.bc, c.d0, 0.0, c.a, c.length).value << '\n';
  } else if (name == "eigen_fd") {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> ud(0.5, 2.0), uc(-1.0, 1.0), ua(-1.0, 2.0), ul(0.5, 4.0);
    out << "d0,c,a0,len,closed_form,discrete\n";
    for (int i = 0; i < 10; ++i) {
      const double d0 = ud(rng), c = uc(rng), a0 = ua(rng), len = ul(rng);
      out << d0 << ',' << c << ',' << a0 << ',' << len << ',' << lambda_p2(d0, c, a0, len) << ','
          << discrete_principal_eigenvalue(d0, c, a0, len, EigenProblem::dirichlet_dirichlet, 512) << '\n';
    }
  } else if (name == "reference") {
    SchemeConfig cfg = rc.spec.scheme;
    RunOptions opt;
    opt.stop.t_end = 0.5;
    const auto& in = rc.spec.init;
    const auto imex = run(make_initial_profile(in.family, in.amplitude_u, in.amplitude_v, in.h0, cfg.grid_n), p, cfg, opt);
    ReferenceConfig ref;
    ref.grid_n = 2 * cfg.grid_n;
    const auto fine =
        reference_explicit_run(make_initial_profile(in.family, in.amplitude_u, in.amplitude_v, in.h0, ref.grid_n), p, ref);
    double diff = 0.0;
    for (std::size_t j = 0; j <= cfg.grid_n; ++j)
      diff = std::max({diff, std::abs(imex.final_state.u[j] - fine.final_state.u[2 * j]),
                       std::abs(imex.final_state.v[j] - fine.final_state.v[2 * j])});
    out << "max_diff " << diff << "\nh_imex " << imex.final_state.h << "\nh_reference " << fine.final_state.h << '\n';
  } else {
    throw InputError("unknown oracle case '" + name +
                     "' (lv, lv_weak_weak, lv_weak_strong, lv_strong_weak, decoupled_logistic, fisher_kpp, eigen_fd, reference)");
  }
  return 0;
}

}  // namespace cli_detail

/// Exit codes: 0 success, 1 input error, 2 scheme failure.
inline int cli_main(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"chemotaxis-competition free boundary simulator"};
  app.require_subcommand(1);
  cli_detail::Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "flat name = value config file");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--set", o.overrides, "override key=value (repeatable)");
    sub->add_option("--seed", o.seed, "seed for randomized cases");
  };
  auto* check = app.add_subcommand("check", "evaluate hypotheses H1-H4");
  auto* eigen = app.add_subcommand("eigen", "principal eigenvalues and critical lengths");
  auto* simulate = app.add_subcommand("simulate", "run one trajectory");
  auto* classify_cmd = app.add_subcommand("classify", "run and classify one trajectory");
  auto* sweep_cmd = app.add_subcommand("sweep", "classify a parameter grid");
  auto* oracle = app.add_subcommand("oracle", "run a named oracle case");
  for (auto* s : {check, eigen, simulate, classify_cmd, sweep_cmd, oracle}) common(s);
  sweep_cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  classify_cmd->add_option("--record", o.record_path, "summarize an existing record instead of running");
  oracle->add_option("--case", o.oracle_case, "oracle case name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }
  try {
    if (*check) return cli_detail::cmd_check(o, out);
    if (*eigen) return cli_detail::cmd_eigen(o, out);
    if (*simulate) return cli_detail::cmd_simulate(o, out);
    if (*classify_cmd) return cli_detail::cmd_classify(o, out);
    if (*sweep_cmd) return cli_detail::cmd_sweep(o, out);
    if (*oracle) return cli_detail::cmd_oracle(o, out);
  } catch (const SchemeFailure& e) {
    err << "scheme failure: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

inline int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return cli_main(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace chemofront
