// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "cli_runner.hpp"
#include "test_support.hpp"

using namespace kronsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, double time_budget_s, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_budget_s > 0) v.require(elapsed < time_budget_s, "runtime " + sci(elapsed) + " s < " + sci(time_budget_s) + " s");
  if (!v.pass) ++failures;
  std::printf("%s criterion %d: %s | %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
  std::fflush(stdout);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double max_drift(const TimeSeries& ts) {
  double worst = 0.0;
  for (std::size_t c = 0; c < ts.width(); ++c) {
    for (std::size_t k = 1; k < ts.size(); ++k) worst = std::max(worst, std::abs(ts.at(k, c) - ts.at(0, c)));
  }
  return worst;
}

bool bit_equal(const TimeSeries& a, const TimeSeries& b) {
  if (a.columns() != b.columns() || a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::memcmp(&a.times()[k], &b.times()[k], sizeof(double)) != 0) return false;
    for (std::size_t c = 0; c < a.width(); ++c) {
      const double x = a.at(k, c);
      const double y = b.at(k, c);
      if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  const NetworkCase ieee9 = test::ieee9();
  SimulationRun reduced9;
  SimulationRun reference9;

  criterion(1, "voltage-divider closed form on the single-VSC case", 1.0, [] {
    Verdict v;
    const auto c = test::single_vsc();
    const auto net = partition_kron(assemble_full(c.network));
    const double row_err = std::max(std::abs(net.M()(0, 0) - 0.5), std::abs(net.M()(0, 1) - 0.5));
    v.require(row_err < 1e-14, "|M row - [0.5,0.5]| = " + sci(row_err) + " < 1e-14");
    const auto run = simulate_reduced(c);
    const auto& ts = run.series;
    const auto ex = ts.column("vsc1.e_x"), ey = ts.column("vsc1.e_y");
    const auto ux = ts.column("nodet.ut_x"), uy = ts.column("nodet.ut_y");
    const XY ug = c.slack().u_g;
    double worst = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      worst = std::max({worst, std::abs(ux[k] - 0.5 * (ex[k] + ug.x)), std::abs(uy[k] - 0.5 * (ey[k] + ug.y))});
    }
    v.require(worst < 1e-12, "online divider error " + sci(worst) + " < 1e-12 over " +
                                 std::to_string(ts.size()) + " samples");
    return v;
  });

  criterion(2, "Kron-reduction equivalence on the 9-bus case", 1.0, [&] {
    Verdict v;
    const auto full = assemble_full(ieee9.network);
    const auto net = partition_kron(full);
    std::mt19937_64 rng(20240);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd e = test::random_axes(rng, static_cast<Eigen::Index>(net.attachment_count()));
      const Eigen::MatrixXd u_full = test::dense_full_solve(full, e);
      const AxisMatrix u_s = net.terminal_voltages(AxisMatrix(e));
      worst = std::max(worst, (u_s - u_full.topRows(u_s.rows())).cwiseAbs().maxCoeff());
    }
    v.require(worst < 1e-10, "max |u_reduced - u_full| over 20 vectors = " + sci(worst) + " < 1e-10");
    return v;
  });

  criterion(3, "divider properties on every shipped case", 0, [] {
    Verdict v;
    for (const char* name : {"ieee9_modified.json", "ieee9_no_load.json", "single_vsc.json"}) {
      const auto c = load_case(test::case_path(name));
      const auto full = assemble_full(c.network);
      const auto net = partition_kron(full);
      const double rs = (net.M().rowwise().sum().array() - 1.0).abs().maxCoeff();
      const double mn = net.M().minCoeff();
      const double ya = (full.Y - full.Y.transpose()).cwiseAbs().maxCoeff();
      const double yra = (net.Yr() - net.Yr().transpose()).cwiseAbs().maxCoeff();
      v.require(rs < 1e-10 && mn >= -1e-12 && ya < 1e-12 && yra < 1e-12,
                std::string(name) + ": row-sum err " + sci(rs) + ", min " + sci(mn) + ", asym " +
                    sci(std::max(ya, yra)));
    }
    return v;
  });

  criterion(4, "DAE accounting on the 9-bus case", 0, [&] {
    Verdict v;
    const auto counts = dae_counts(ieee9);
    v.require(counts == DaeCounts{18, 14}, "dae_counts = (" + std::to_string(counts.n_differential) +
                                                ", " + std::to_string(counts.n_algebraic) + ") == (18, 14)");
    return v;
  });

  criterion(5, "reduced vs full branch-state simulation of the 9-bus step", 120.0, [&] {
    Verdict v;
    v.require(ieee9.sim.dt == 20e-6 && ieee9.sim.t_end == 2.0 && ieee9.events.size() == 1 &&
                  ieee9.events[0].time == 0.5 && ieee9.events[0].value == 2.0,
              "scenario dt 20 us, 2 s, id_ref step to 2.0 at 0.5 s");
    reduced9 = simulate_reduced(ieee9);
    reference9 = simulate_reference(ieee9);
    std::vector<std::string> signals;
    for (const auto& name : shared_signals(reduced9.series, reference9.series)) {
      const bool wanted = name.ends_with(".phi") || name.ends_with(".i_x") || name.ends_with(".i_y") ||
                          name.ends_with(".ut_x") || name.ends_with(".ut_y");
      if (wanted) signals.push_back(name);
    }
    const auto report = compare(reduced9.series, reference9.series, signals);
    const auto all = compare(reduced9.series, reference9.series);
    v.require(report.worst() < 1e-6, std::to_string(signals.size()) + " required signals, max-abs " +
                                         sci(report.worst()) + " < 1e-6");
    v.require(all.worst() < 1e-6, "all " + std::to_string(all.signals.size()) + " shared signals " +
                                      sci(all.worst()) + " < 1e-6");
    return v;
  });

  criterion(6, "constraint preservation in the full branch-state model", 0, [&] {
    Verdict v;
    const auto& ts = reference9.series;
    v.require(!ts.empty(), "reference run available");
    double kcl = 0.0;
    std::size_t kcl_cols = 0;
    for (std::size_t c = 0; c < ts.width(); ++c) {
      if (ts.columns()[c].find(".kcl_") == std::string::npos) continue;
      ++kcl_cols;
      for (std::size_t k = 0; k < ts.size(); ++k) kcl = std::max(kcl, std::abs(ts.at(k, c)));
    }
    v.require(kcl_cols == 6 && kcl < 1e-8, "intermediate KCL residual " + sci(kcl) + " < 1e-8");
    double slack = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      std::vector<XY> vsc, load;
      for (const auto& d : ieee9.devices) {
        if (d.kind() == SourceKind::Slack) continue;
        const XY i{ts.at(k, *ts.index_of(d.id + ".i_x")), ts.at(k, *ts.index_of(d.id + ".i_y"))};
        (d.kind() == SourceKind::Vsc ? vsc : load).push_back(i);
      }
      const XY want = slack_injection(vsc, load);
      const XY got{ts.at(k, *ts.index_of("grid.i_x")), ts.at(k, *ts.index_of("grid.i_y"))};
      slack = std::max({slack, std::abs(got.x - want.x), std::abs(got.y - want.y)});
    }
    v.require(slack < 1e-8, "slack branch current vs boundary condition " + sci(slack) + " < 1e-8");
    return v;
  });

  criterion(7, "equilibrium quality on every shipped case", 0, [] {
    Verdict v;
    for (const char* name : {"ieee9_modified.json", "ieee9_no_load.json", "single_vsc.json"}) {
      const auto c = load_case(test::case_path(name));
      const auto eq = find_equilibrium(c);
      SimConfig cfg = c.sim;
      cfg.t_end = 1.0;
      const double drift = max_drift(simulate_reduced(c, {}, cfg, eq.state).series);
      v.require(eq.residual < 1e-10 && drift < 1e-8,
                std::string(name) + ": residual " + sci(eq.residual) + ", 1 s drift " + sci(drift));
    }
    return v;
  });

  criterion(8, "numerical convergence", 0, [&] {
    Verdict v;
    auto decay = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
    auto solve = [&](double dt) {
      std::vector<double> x{1.0};
      Rk4 rk(1);
      const int n = static_cast<int>(std::lround(1.0 / dt));
      for (int k = 0; k < n; ++k) rk.step(decay, x, k * dt, dt);
      return std::abs(x[0] - std::exp(-1.0));
    };
    const double order = std::log2(solve(0.1) / solve(0.05));
    v.require(order >= 3.8 && order <= 4.2, "RK4 measured order " + sci(order) + " in [3.8, 4.2]");
    SimConfig fine = ieee9.sim;
    fine.dt /= 2.0;
    fine.record_stride *= 2;
    const auto half = simulate_reduced(ieee9, ieee9.events, fine);
    const double change = max_abs_diff(reduced9.final_state, half.final_state);
    v.require(!reduced9.final_state.empty() && change < 1e-8,
              "9-bus end-state change under dt/2 " + sci(change) + " < 1e-8");
    return v;
  });

  criterion(9, "step response of VSC1 d-axis current", 0, [&] {
    Verdict v;
    const auto& ts = reduced9.series;
    const auto id = ts.column("vsc1.i_d");
    const double t_step = ieee9.events.at(0).time;
    double settle = t_step;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (ts.times()[k] >= t_step && std::abs(id[k] - 2.0) > 1e-3) settle = ts.times()[k];
    }
    v.require(settle - t_step <= 0.2, "i_d within 2.0 +/- 1e-3 from " + sci(settle - t_step) + " s after the step");

    ReducedModel model(ieee9);
    model.set_devices(devices_after(ieee9, ieee9.sim.t_end));
    const auto eq = find_equilibrium(model, ieee9.sim);
    double worst = 0.0;
    for (std::size_t k = 0; k < eq.state.size(); ++k) {
      double d = reduced9.final_state[k] - eq.state[k];
      if (model.layout()[k].name == "pll_delta") d = std::remainder(d, 2.0 * std::numbers::pi);
      worst = std::max(worst, std::abs(d));
    }
    v.require(worst < 1e-6, "endpoint vs post-event equilibrium " + sci(worst) + " < 1e-6");
    return v;
  });

  criterion(10, "tooling contract", 0, [] {
    Verdict v;
    const fs::path dir = fs::temp_directory_path() / "kronsim_acceptance";
    fs::create_directories(dir);
    const std::string c = "\"" + test::case_path("ieee9_modified.json") + "\"";
    const std::string a = (dir / "reduced.csv").string();
    const std::string b = (dir / "reference.csv").string();
    const int ra = test::run_cli("run " + c + " --model reduced --out \"" + a + "\"").exit_code;
    const int rb = test::run_cli("run " + c + " --model reference --out \"" + b + "\"").exit_code;
    const int rc = test::run_cli("compare \"" + a + "\" \"" + b + "\" --tol 1e-6").exit_code;
    v.require(ra == 0 && rb == 0 && rc == 0, "CLI run/run/compare exit codes " + std::to_string(ra) +
                                                 "/" + std::to_string(rb) + "/" + std::to_string(rc));

    const TimeSeries original = simulate_reduced(test::single_vsc()).series;
    std::stringstream buf;
    write_timeseries_csv(original, buf);
    v.require(bit_equal(original, read_timeseries_csv(buf)), "CSV round trip bit-exact");
    const TimeSeries from_cli = read_timeseries_csv(a);
    const std::string a2 = (dir / "again.csv").string();
    write_timeseries_csv(from_cli, a2);
    v.require(read_text_file(a) == read_text_file(a2), "CSV rewrite is byte-identical");

    std::size_t rejected = 0, total = 0;
    for (const auto& entry : fs::directory_iterator(test::data_path("malformed"))) {
      ++total;
      try {
        load_case(entry.path().string());
      } catch (const CaseError& e) {
        rejected += e.issues().empty() ? 0 : 1;
      } catch (const SyntaxError& e) {
        rejected += e.line() > 0 ? 1 : 0;
      } catch (...) {
      }
    }
    v.require(total >= 5 && rejected == total, std::to_string(rejected) + "/" + std::to_string(total) +
                                                   " malformed cases rejected with structured errors");
    fs::remove_all(dir);
    return v;
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
