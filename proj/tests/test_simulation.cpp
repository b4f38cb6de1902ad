#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

namespace kronsim {
namespace {

const SimulationRun& ieee9_reduced() {
  static const SimulationRun run = simulate_reduced(test::ieee9());
  return run;
}

const SimulationRun& ieee9_reference() {
  static const SimulationRun run = simulate_reference(test::ieee9());
  return run;
}

double max_drift(const TimeSeries& ts) {
  double worst = 0.0;
  for (std::size_t c = 0; c < ts.width(); ++c) {
    for (std::size_t k = 1; k < ts.size(); ++k) {
      worst = std::max(worst, std::abs(ts.at(k, c) - ts.at(0, c)));
    }
  }
  return worst;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

TEST(Equilibrium, DegenerateZeroFlow) {
  const auto c = test::ieee9_no_load();
  const ReducedModel model(c);
  const auto eq = find_equilibrium(model, c.sim);
  EXPECT_LT(eq.residual, 1e-10);
  for (const auto& s : model.slots()) {
    if (s.kind != SourceKind::Vsc) continue;
    const auto st = VscState::read(std::span<const double>(eq.state).subspan(s.offset));
    EXPECT_NEAR(st.i.x, 0.0, 1e-10);
    EXPECT_NEAR(st.i.y, 0.0, 1e-10);
    EXPECT_NEAR(st.acc_xd, 0.0, 1e-10);
    EXPECT_NEAR(st.acc_xq, 0.0, 1e-10);
    EXPECT_NEAR(st.pll_xi, 0.0, 1e-10);
    EXPECT_NEAR(wrap_angle(st.pll_delta), 0.0, 1e-10);
  }
  const auto snap = model.snapshot(eq.state);
  for (Eigen::Index k = 0; k < snap.u.rows(); ++k) {
    EXPECT_NEAR(snap.u(k, 0), 1.0, 1e-10);
    EXPECT_NEAR(snap.u(k, 1), 0.0, 1e-10);
  }
}

TEST(Equilibrium, DeviceDerivativesVanish) {
  for (const auto& c : {test::single_vsc(), test::ieee9(), test::ieee9_no_load()}) {
    const ReducedModel model(c);
    const auto eq = find_equilibrium(model, c.sim);
    EXPECT_LT(eq.residual, 1e-10) << c.name;
    EXPECT_LT(max_abs(model.derivative(eq.state)), 1e-10) << c.name;
  }
}

TEST(Equilibrium, SingleVscDriftHalfSecond) {
  auto c = test::single_vsc();
  SimConfig cfg = c.sim;
  cfg.t_end = 0.5;
  const auto run = simulate_reduced(c, {}, cfg);
  EXPECT_LT(max_drift(run.series), 1e-8);
}

TEST(Equilibrium, Ieee9DriftOneSecond) {
  auto c = test::ieee9();
  SimConfig cfg = c.sim;
  cfg.t_end = 1.0;
  EXPECT_LT(max_drift(simulate_reduced(c, {}, cfg).series), 1e-8);
  EXPECT_LT(max_drift(simulate_reference(c, {}, cfg).series), 1e-8);
}

TEST(Equilibrium, JacobianMatchesCentralDifferences) {
  const auto c = test::ieee9();
  const ReducedModel model(c);
  const auto x = find_equilibrium(model, c.sim).state;
  auto f = [&](std::span<const double> s) { return model.derivative(s); };
  const auto f0 = f(x);
  const Eigen::MatrixXd J = forward_difference_jacobian(f, x, f0);

  Eigen::MatrixXd Jc(J.rows(), J.cols());
  std::vector<double> xp = x;
  for (Eigen::Index j = 0; j < J.cols(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double h = 1e-5 * (1.0 + std::abs(x[uj]));
    xp[uj] = x[uj] + h;
    const auto fp = f(xp);
    xp[uj] = x[uj] - h;
    const auto fm = f(xp);
    xp[uj] = x[uj];
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      Jc(i, j) = (fp[ui] - fm[ui]) / (2.0 * h);
    }
  }
  const double scale = Jc.cwiseAbs().maxCoeff();
  EXPECT_LT((J - Jc).cwiseAbs().maxCoeff() / scale, 1e-6);
}

TEST(Equilibrium, DivergenceIsReported) {
  auto c = test::ieee9();
  c.sim.newton_tol = 1e-30;
  c.sim.newton_max_iter = 3;
  try {
    find_equilibrium(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NewtonDivergence);
  }
}

TEST(ReducedSimulation, DividerHoldsOnline) {
  const auto c = test::single_vsc();
  const auto run = simulate_reduced(c);
  const auto& ts = run.series;
  const auto ex = ts.column("vsc1.e_x");
  const auto ey = ts.column("vsc1.e_y");
  const auto ux = ts.column("nodet.ut_x");
  const auto uy = ts.column("nodet.ut_y");
  const XY ug = c.slack().u_g;
  double worst = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    worst = std::max(worst, std::abs(ux[k] - (0.5 * ex[k] + 0.5 * ug.x)));
    worst = std::max(worst, std::abs(uy[k] - (0.5 * ey[k] + 0.5 * ug.y)));
  }
  EXPECT_LT(worst, 1e-12);
  // The step actually excites a transient.
  const auto id = ts.column("vsc1.i_d");
  EXPECT_GT(*std::max_element(id.begin(), id.end()) - id.front(), 0.3);
}

TEST(ReducedSimulation, RowCountMatchesGrid) {
  EXPECT_EQ(ieee9_reduced().series.size(), 2001u);
  EXPECT_EQ(ieee9_reduced().series.times().back(), 2.0);
}

TEST(ReducedSimulation, StepResponseSettles) {
  const auto& ts = ieee9_reduced().series;
  const auto id = ts.column("vsc1.i_d");
  const auto& t = ts.times();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (t[k] >= 0.7 - 1e-12) {
      EXPECT_NEAR(id[k], 2.0, 1e-3) << "t=" << t[k];
    }
  }
}

TEST(ReducedSimulation, EndpointMatchesPostEventEquilibrium) {
  const auto c = test::ieee9();
  ReducedModel model(c);
  model.set_devices(devices_after(c, c.sim.t_end));
  const auto eq = find_equilibrium(model, c.sim);
  const auto& x = ieee9_reduced().final_state;
  ASSERT_EQ(x.size(), eq.state.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const bool is_angle = model.layout()[k].name == "pll_delta";
    const double d = is_angle ? wrap_angle(x[k] - eq.state[k]) : x[k] - eq.state[k];
    EXPECT_LT(std::abs(d), 1e-6) << model.layout()[k].owner << "." << model.layout()[k].name;
  }
}

TEST(ReducedSimulation, HalvingStepBarelyMovesEndState) {
  auto c = test::ieee9();
  SimConfig fine = c.sim;
  fine.dt /= 2.0;
  fine.record_stride *= 2;
  const auto run = simulate_reduced(c, c.events, fine);
  const auto& coarse = ieee9_reduced().final_state;
  double worst = 0.0;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    worst = std::max(worst, std::abs(coarse[k] - run.final_state[k]));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Equivalence, Ieee9WithFeedforward) {
  const auto report = compare(ieee9_reduced().series, ieee9_reference().series);
  EXPECT_GT(report.signals.size(), 40u);
  EXPECT_LT(report.worst(), 1e-6);
}

TEST(Equivalence, Ieee9WithoutFeedforward) {
  const auto c = test::with_feedforward(test::ieee9(), false);
  SimConfig cfg = c.sim;
  cfg.t_end = 1.0;
  const auto a = simulate_reduced(c, c.events, cfg);
  const auto b = simulate_reference(c, c.events, cfg);
  EXPECT_LT(compare(a.series, b.series).worst(), 1e-6);
}

TEST(Equivalence, SingleVsc) {
  const auto c = test::single_vsc();
  EXPECT_LT(compare(simulate_reduced(c).series, simulate_reference(c).series).worst(), 1e-6);
}

TEST(Equivalence, RandomNetworks) {
  // Random topologies with converters and loads: both simulators must agree
  // through a reference step.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    NetworkCase c;
    c.name = "random";
    std::uniform_real_distribution<double> ind(0.03, 0.15);
    const int n = 5 + trial;
    for (int k = 0; k < n; ++k) c.add_node("b" + std::to_string(k));
    for (int k = 1; k < n; ++k) {
      c.add_branch("b" + std::to_string(k), "b" + std::to_string(k - 1), ind(rng));
    }
    c.add_branch("b0", "b" + std::to_string(n - 1), ind(rng));
    c.attach("b0", "grid", SlackParams{0.01, {1.0, 0.0}});
    VscParams v;
    v.feedforward_enabled = true;
    v.id_ref = 0.5;
    c.attach("b2", "vsc", v);
    c.attach("b3", "load", LoadParams{1.5, 0.4});
    c.events.push_back({0.05, "vsc", "id_ref", 0.8});
    c.sim.t_end = 0.2;
    const auto a = simulate_reduced(c);
    const auto b = simulate_reference(c);
    EXPECT_LT(compare(a.series, b.series).worst(), 1e-6) << "trial " << trial;
  }
}

TEST(ReferenceSimulation, KclPreserved) {
  const auto& ts = ieee9_reference().series;
  double worst = 0.0;
  for (std::size_t c = 0; c < ts.width(); ++c) {
    const auto& name = ts.columns()[c];
    if (name.find(".kcl_") == std::string::npos) continue;
    for (std::size_t k = 0; k < ts.size(); ++k) worst = std::max(worst, std::abs(ts.at(k, c)));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ReferenceSimulation, SlackCurrentMatchesBoundaryCondition) {
  const auto& ts = ieee9_reference().series;
  const std::vector<std::string> others = {"vsc1", "vsc2", "load5", "load7", "load9"};
  double worst = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    std::vector<XY> vsc, load;
    for (const auto& id : others) {
      const XY i{ts.at(k, *ts.index_of(id + ".i_x")), ts.at(k, *ts.index_of(id + ".i_y"))};
      (id.starts_with("vsc") ? vsc : load).push_back(i);
    }
    const XY expected = slack_injection(vsc, load);
    const XY got{ts.at(k, *ts.index_of("grid.i_x")), ts.at(k, *ts.index_of("grid.i_y"))};
    worst = std::max({worst, std::abs(got.x - expected.x), std::abs(got.y - expected.y)});
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ReferenceSimulation, RejectsInconsistentInitialState) {
  const auto c = test::ieee9();
  const ReferenceModel ref(c);
  const ReducedModel red(c);
  auto x = ref.lift(red, find_equilibrium(red, c.sim).state);
  x[ref.lines().front().offset] += 1e-3;
  try {
    simulate_reference(c, c.events, c.sim, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentInitialState);
  }
}

TEST(ReferenceSimulation, LiftedStateIsStationary) {
  const auto c = test::ieee9();
  const ReferenceModel ref(c);
  const ReducedModel red(c);
  const auto x = ref.lift(red, find_equilibrium(red, c.sim).state);
  EXPECT_LT(max_abs(ref.derivative(x)), 1e-9);
}

TEST(Simulation, BlowUpIsReported) {
  auto c = test::single_vsc();
  SimConfig cfg = c.sim;
  cfg.dt = 5e-3;
  cfg.t_end = 5.0;
  cfg.record_stride = 1;
  try {
    simulate_reduced(c, c.events, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::NonFiniteState || e.kind() == ErrorKind::NonFiniteDerivative)
        << to_string(e.kind());
  }
}

TEST(Events, ApplyUpdatesParameter) {
  const auto c = test::ieee9();
  const auto devices = apply_event(c.devices, {0.5, "vsc1", "id_ref", 2.0});
  const auto it = std::find_if(devices.begin(), devices.end(),
                               [](const Device& d) { return d.id == "vsc1"; });
  EXPECT_EQ(std::get<VscParams>(it->params).id_ref, 2.0);
}

TEST(Events, UnknownTargetAndField) {
  const auto c = test::ieee9();
  try {
    apply_event(c.devices, {0.5, "vsc9", "id_ref", 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownTarget);
  }
  try {
    apply_event(c.devices, {0.5, "vsc1", "Lf", 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownField);
  }
}

TEST(Events, BeyondHorizonIsIgnoredWithWarning) {
  auto c = test::single_vsc();
  SimConfig cfg = c.sim;
  cfg.t_end = 0.1;
  const std::vector<Event> events = {{0.3, "vsc1", "id_ref", 2.0}};
  const auto run = simulate_reduced(c, events, cfg);
  ASSERT_EQ(run.warnings.size(), 1u);
  EXPECT_LT(max_drift(run.series), 1e-8);
}

TEST(Events, SameTimeLaterListedWins) {
  auto c = test::single_vsc();
  SimConfig cfg = c.sim;
  cfg.t_end = 0.1;
  const std::vector<Event> events = {{0.01, "vsc1", "id_ref", 1.0}, {0.01, "vsc1", "id_ref", 1.2}};
  const auto schedule = schedule_events(events, cfg);
  ASSERT_EQ(schedule.entries.size(), 2u);
  EXPECT_EQ(schedule.warnings.size(), 1u);
  const auto run = simulate_reduced(c, events, cfg);
  const auto only_last = simulate_reduced(c, std::vector<Event>{events[1]}, cfg);
  EXPECT_EQ(run.final_state, only_last.final_state);
}

TEST(Events, SnapToStepBoundary) {
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  const std::vector<Event> events = {{0.25, "a", "id_ref", 1.0}, {0.3, "a", "iq_ref", 1.0}};
  const auto s = schedule_events(events, cfg);
  EXPECT_EQ(s.entries[0].step, 3u);
  EXPECT_EQ(s.entries[1].step, 3u);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Compare, SelfAndOffset) {
  const auto& a = ieee9_reduced().series;
  const auto self = compare(a, a);
  EXPECT_EQ(self.worst(), 0.0);

  TimeSeries b = a;
  const auto col = *b.index_of("vsc1.phi");
  for (std::size_t k = 0; k < b.size(); ++k) b.at(k, col) += 1e-3;
  const auto report = compare(a, b);
  for (const auto& s : report.signals) {
    if (s.name == "vsc1.phi") {
      EXPECT_NEAR(s.max_abs, 1e-3, 1e-12);
      EXPECT_NEAR(s.rms, 1e-3, 1e-12);
    } else {
      EXPECT_EQ(s.max_abs, 0.0);
      EXPECT_EQ(s.rms, 0.0);
    }
  }
}

TEST(Compare, GridMismatch) {
  TimeSeries a({"s"});
  TimeSeries b({"s"});
  const std::vector<double> v{1.0};
  a.append(0.0, v);
  a.append(0.1, v);
  b.append(0.0, v);
  EXPECT_THROW(compare(a, b), Error);
  b.append(0.2, v);
  try {
    compare(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
  }
}

}  // namespace
}  // namespace kronsim
