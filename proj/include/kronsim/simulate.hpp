#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "kronsim/case.hpp"
#include "kronsim/equilibrium.hpp"
#include "kronsim/events.hpp"
#include "kronsim/models.hpp"
#include "kronsim/rk4.hpp"
#include "kronsim/timeseries.hpp"

namespace kronsim {

struct SimulationRun {
  TimeSeries series;
  std::vector<double> final_state;
  std::vector<std::string> warnings;
};

/// Column names common to both simulators, followed by model-specific
/// diagnostics for the reference model.
template <class Model>
std::vector<std::string> record_columns(const Model& model) {
  std::vector<std::string> cols;
  for (const auto& s : model.slots()) {
    const std::string& id = model.devices()[s.device].id;
    auto add = [&](const char* name) { cols.push_back(id + "." + name); };
    switch (s.kind) {
      case SourceKind::Vsc:
        for (const char* n : VscState::names) add(n);
        for (const char* n : {"i_d", "i_q", "e_x", "e_y", "phi", "e_angle"}) add(n);
        break;
      case SourceKind::Load:
        for (const char* n : {"i_x", "i_y", "e_x", "e_y"}) add(n);
        break;
      case SourceKind::Slack:
        add("i_x");
        add("i_y");
        break;
    }
  }
  for (const auto& id : model.full().node_ids) {
    cols.push_back("node" + id + ".ut_x");
    cols.push_back("node" + id + ".ut_y");
  }
  if constexpr (std::is_same_v<Model, ReferenceModel>) {
    for (const auto& line : model.lines()) {
      cols.push_back(line.label + ".i_x");
      cols.push_back(line.label + ".i_y");
    }
    for (const auto& id : model.full().intermediate_ids()) {
      cols.push_back("node" + id + ".kcl_x");
      cols.push_back("node" + id + ".kcl_y");
    }
  }
  return cols;
}

template <class Model>
void record_row(const Model& model, std::span<const double> x, std::vector<double>& row) {
  row.clear();
  const NetworkSnapshot snap = model.snapshot(x);
  const double grid_angle = angle(model.slack().u_g);
  for (const auto& s : model.slots()) {
    const auto a = static_cast<Eigen::Index>(s.attachment);
    const XY e{snap.e(a, 0), snap.e(a, 1)};
    switch (s.kind) {
      case SourceKind::Vsc: {
        const auto st = VscState::read(x.subspan(s.offset));
        for (std::size_t k = 0; k < VscState::dim; ++k) row.push_back(x[s.offset + k]);
        const DQ i_dq = xy_to_dq(st.i, st.pll_delta);
        row.insert(row.end(), {i_dq.d, i_dq.q, e.x, e.y, st.pll_delta - grid_angle, angle(e)});
        break;
      }
      case SourceKind::Load:
        row.insert(row.end(), {x[s.offset], x[s.offset + 1], e.x, e.y});
        break;
      case SourceKind::Slack:
        row.insert(row.end(), {snap.slack_current.x, snap.slack_current.y});
        break;
    }
  }
  for (Eigen::Index k = 0; k < snap.u.rows(); ++k) {
    row.push_back(snap.u(k, 0));
    row.push_back(snap.u(k, 1));
  }
  if constexpr (std::is_same_v<Model, ReferenceModel>) {
    for (const auto& line : model.lines()) {
      row.push_back(x[line.offset]);
      row.push_back(x[line.offset + 1]);
    }
    const auto kcl = model.kcl_residuals(x);
    for (std::size_t k = model.full().source_count; k < kcl.size(); ++k) {
      row.push_back(kcl[k].x);
      row.push_back(kcl[k].y);
    }
  }
}

/// Fixed-step integration with events applied at step boundaries. A sample is
/// recorded every `record_stride` steps, after that boundary's events.
template <class Model>
SimulationRun integrate(Model& model, std::span<const Event> events, const SimConfig& cfg,
                        std::vector<double> x) {
  if (auto issues = validate_config(cfg); !issues.empty()) {
    throw Error(issues.front().code, issues.front().detail);
  }
  if (x.size() != model.state_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "initial state has " + std::to_string(x.size()) +
                                                  " entries, model needs " +
                                                  std::to_string(model.state_dim()));
  }
  const EventSchedule schedule = schedule_events(events, cfg);
  SimulationRun run{TimeSeries(record_columns(model)), {}, schedule.warnings};

  const std::size_t n_steps = step_count(cfg);
  auto next_event = schedule.entries.begin();
  Rk4 stepper(x.size());
  std::vector<double> row;
  auto rhs = [&](double t, std::span<const double> s, std::span<double> ds) {
    model.derivative(t, s, ds);
  };

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (next_event != schedule.entries.end() && next_event->step == k) {
      auto devices = model.devices();
      for (; next_event != schedule.entries.end() && next_event->step == k; ++next_event) {
        devices = apply_event(std::move(devices), next_event->event);
      }
      model.set_devices(std::move(devices));
    }
    if (k % cfg.record_stride == 0) {
      record_row(model, x, row);
      run.series.append(t, row);
    }
    if (k == n_steps) break;
    stepper.step(rhs, x, t, cfg.dt);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) {
        throw Error(ErrorKind::NonFiniteState, "state component " + std::to_string(i) +
                                                   " became non-finite at t=" +
                                                   std::to_string(t + cfg.dt));
      }
    }
  }
  run.final_state = std::move(x);
  return run;
}

/// Node ODEs with the algebraic network. Starts from the equilibrium at the
/// pre-event parameters unless `x0` is given.
inline SimulationRun simulate_reduced(const NetworkCase& c, std::span<const Event> events,
                                      const SimConfig& cfg,
                                      std::optional<std::vector<double>> x0 = std::nullopt) {
  ReducedModel model(c);
  std::vector<double> x = x0 ? std::move(*x0) : find_equilibrium(model, cfg).state;
  return integrate(model, events, cfg, std::move(x));
}

inline SimulationRun simulate_reduced(const NetworkCase& c) {
  return simulate_reduced(c, c.events, c.sim);
}

inline constexpr double kKclTolerance = 1e-9;

/// Full branch-state model. Without `x0` the initial branch currents are
/// lifted from the reduced equilibrium; a supplied `x0` must satisfy KCL at
/// every node.
inline SimulationRun simulate_reference(const NetworkCase& c, std::span<const Event> events,
                                        const SimConfig& cfg,
                                        std::optional<std::vector<double>> x0 = std::nullopt) {
  ReferenceModel model(c);
  std::vector<double> x;
  if (x0) {
    x = std::move(*x0);
  } else {
    ReducedModel reduced(c);
    x = model.lift(reduced, find_equilibrium(reduced, cfg).state);
  }
  if (x.size() != model.state_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "initial state has " + std::to_string(x.size()) +
                                                  " entries, model needs " +
                                                  std::to_string(model.state_dim()));
  }
  const auto kcl = model.kcl_residuals(x);
  for (std::size_t k = 0; k < kcl.size(); ++k) {
    const double r = std::max(std::abs(kcl[k].x), std::abs(kcl[k].y));
    if (!(r <= kKclTolerance)) {
      throw Error(ErrorKind::InconsistentInitialState,
                  "KCL residual " + std::to_string(r) + " at node '" + model.full().node_ids[k] +
                      "'");
    }
  }
  return integrate(model, events, cfg, std::move(x));
}

inline SimulationRun simulate_reference(const NetworkCase& c) {
  return simulate_reference(c, c.events, c.sim);
}

}  // namespace kronsim
