// Command-line front end: check, equilibrium, run, compare, plot.
//
// Exit codes: 0 on success (or within tolerance), 1 when a case is invalid or
// a comparison exceeds its tolerance, 2 on any other error. Errors are printed
// to stderr as `ERROR <kind>: <detail>`.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kronsim/kronsim.hpp"

namespace {

using namespace kronsim;

void print_error(std::string_view kind, const std::string& detail) {
  std::cerr << "ERROR " << kind << ": " << detail << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double v) {
  std::string s;
  append_number(s, v);
  return s;
}

int cmd_check(const std::string& path) {
  NetworkCase c;
  try {
    c = load_case(path);
  } catch (const CaseError& e) {
    for (const auto& issue : e.issues()) print_error(to_string(issue.code), issue.detail);
    return 1;
  } catch (const SyntaxError& e) {
    print_error(to_string(e.kind()), e.detail());
    return 1;
  }
  const FullAdmittance full = assemble_full(c.network);
  const ReducedNetwork net = partition_kron(full);
  const DaeCounts counts = dae_counts(c);

  const Eigen::VectorXd row_sums = net.M().rowwise().sum();
  const double row_sum_err = (row_sums.array() - 1.0).abs().maxCoeff();
  const double y_asym = (full.Y - full.Y.transpose()).cwiseAbs().maxCoeff();
  const double yr_asym = (net.Yr() - net.Yr().transpose()).cwiseAbs().maxCoeff();

  std::cout << "case: " << c.name << '\n';
  std::cout << "differential equations: " << counts.n_differential << '\n';
  std::cout << "algebraic equations: " << counts.n_algebraic << '\n';
  std::cout << "source nodes:";
  for (const auto& id : full.source_ids()) std::cout << ' ' << id;
  std::cout << "\nintermediate nodes:";
  for (const auto& id : full.intermediate_ids()) std::cout << ' ' << id;
  std::cout << "\ndivider max |row sum - 1|: " << num(row_sum_err) << '\n';
  std::cout << "divider min entry: " << num(net.M().minCoeff()) << '\n';
  std::cout << "Y max asymmetry: " << num(y_asym) << '\n';
  std::cout << "Yr max asymmetry: " << num(yr_asym) << '\n';
  std::cout << "valid: yes\n";
  return 0;
}

int cmd_equilibrium(const std::string& path, double at) {
  NetworkCase c = load_case(path);
  c.devices = devices_after(c, at);
  ReducedModel model(c);
  const Equilibrium eq = find_equilibrium(model, c.sim);
  std::cout << "residual: " << num(eq.residual) << '\n';
  std::cout << "iterations: " << eq.iterations << '\n';
  for (const auto& entry : model.layout()) {
    std::cout << entry.owner << '.' << entry.name << " = " << num(eq.state[entry.offset]) << '\n';
  }
  const NetworkSnapshot snap = model.snapshot(eq.state);
  for (std::size_t k = 0; k < model.full().node_count(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    std::cout << "node" << model.full().node_ids[k] << ".ut = (" << num(snap.u(r, 0)) << ", "
              << num(snap.u(r, 1)) << ")\n";
  }
  std::cout << "slack.i = (" << num(snap.slack_current.x) << ", " << num(snap.slack_current.y)
            << ")\n";
  return 0;
}

struct RunOptions {
  std::string case_path;
  std::string model = "reduced";
  double dt = 0.0;
  double t_end = 0.0;
  std::size_t stride = 0;
  std::string out;
};

int cmd_run(const RunOptions& o) {
  NetworkCase c = load_case(o.case_path);
  SimConfig cfg = c.sim;
  if (o.dt > 0) cfg.dt = o.dt;
  if (o.t_end > 0) cfg.t_end = o.t_end;
  if (o.stride > 0) cfg.record_stride = o.stride;

  SimulationRun run;
  if (o.model == "reduced") {
    run = simulate_reduced(c, c.events, cfg);
  } else if (o.model == "reference") {
    run = simulate_reference(c, c.events, cfg);
  } else {
    print_error("Usage", "--model must be reduced or reference");
    return 2;
  }
  for (const auto& w : run.warnings) std::cerr << "WARNING " << w << '\n';
  if (o.out.empty()) {
    write_timeseries_csv(run.series, std::cout);
  } else {
    write_timeseries_csv(run.series, o.out);
    std::cerr << "wrote " << run.series.size() << " samples x " << run.series.width()
              << " signals to " << o.out << '\n';
  }
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& signals, double tol) {
  const TimeSeries ta = read_timeseries_csv(a);
  const TimeSeries tb = read_timeseries_csv(b);
  const ComparisonReport report = compare(ta, tb, split_list(signals));
  std::size_t failing = 0;
  std::cout << "signal,max_abs,rms,time_of_max,status\n";
  for (const auto& s : report.signals) {
    const bool ok = s.max_abs <= tol;
    failing += ok ? 0 : 1;
    std::cout << s.name << ',' << num(s.max_abs) << ',' << num(s.rms) << ',' << num(s.time_of_max)
              << ',' << (ok ? "ok" : "FAIL") << '\n';
  }
  std::cout << "worst: " << num(report.worst()) << " (tol " << num(tol) << "), " << failing
            << " signal(s) over tolerance\n";
  return failing == 0 ? 0 : 1;
}

int cmd_plot(const std::vector<std::string>& files, const std::string& signals,
             const std::string& out, const std::string& title, const std::string& labels) {
  std::vector<TimeSeries> series;
  for (const auto& f : files) series.push_back(read_timeseries_csv(f));
  PlotStyle style;
  style.title = title;
  std::vector<std::string> names = split_list(labels);
  if (names.empty()) names = files;
  emit_plot_svg(series, split_list(signals), out, style, names);
  std::cerr << "wrote " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Converter-grid simulator with an algebraic (Kron-reduced) network"};
  app.require_subcommand(1);

  std::string case_path;
  auto* check = app.add_subcommand("check", "Validate a case and print network properties");
  check->add_option("case", case_path, "Case file")->required();

  double at = 0.0;
  auto* equilibrium = app.add_subcommand("equilibrium", "Solve for and print the steady state");
  equilibrium->add_option("case", case_path, "Case file")->required();
  equilibrium->add_option("--at", at, "Apply events up to this time first (s)");

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Simulate a case and write a CSV trajectory");
  run->add_option("case", run_opts.case_path, "Case file")->required();
  run->add_option("--model", run_opts.model, "reduced or reference")
      ->check(CLI::IsMember({"reduced", "reference"}));
  run->add_option("--dt", run_opts.dt, "Step size override (s)");
  run->add_option("--t-end", run_opts.t_end, "Horizon override (s)");
  run->add_option("--stride", run_opts.stride, "Record every N steps");
  run->add_option("--out", run_opts.out, "Output CSV (stdout if omitted)");

  std::string file_a, file_b, signals;
  double tol = 1e-6;
  auto* cmp = app.add_subcommand("compare", "Compare two CSV trajectories");
  cmp->add_option("a", file_a, "First CSV")->required();
  cmp->add_option("b", file_b, "Second CSV")->required();
  cmp->add_option("--signals", signals, "Comma-separated signal names (default: all shared)");
  cmp->add_option("--tol", tol, "Maximum allowed absolute deviation");

  std::vector<std::string> plot_files;
  std::string plot_out, plot_title, plot_labels;
  auto* plot = app.add_subcommand("plot", "Overlay signals from CSV files into an SVG");
  plot->add_option("csv", plot_files, "CSV files (first solid, second dashed)")->required();
  plot->add_option("--signals", signals, "Comma-separated signal names")->required();
  plot->add_option("--out", plot_out, "Output SVG")->required();
  plot->add_option("--title", plot_title, "Plot title");
  plot->add_option("--labels", plot_labels, "Comma-separated legend labels per file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return 2;
  }

  try {
    if (*check) return cmd_check(case_path);
    if (*equilibrium) return cmd_equilibrium(case_path, at);
    if (*run) return cmd_run(run_opts);
    if (*cmp) return cmd_compare(file_a, file_b, signals, tol);
    if (*plot) return cmd_plot(plot_files, signals, plot_out, plot_title, plot_labels);
  } catch (const CaseError& e) {
    for (const auto& issue : e.issues()) print_error(to_string(issue.code), issue.detail);
    return 2;
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.detail());
    return 2;
  } catch (const std::exception& e) {
    print_error("Exception", e.what());
    return 2;
  }
  return 2;
}
