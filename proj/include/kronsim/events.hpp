#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kronsim/case.hpp"
#include "kronsim/error.hpp"

namespace kronsim {

/// Returns a copy of `devices` with the event's field set. Integrator states
/// are not touched by design of the caller: only parameters live here.
inline std::vector<Device> apply_event(std::vector<Device> devices, const Event& ev) {
  auto it = std::find_if(devices.begin(), devices.end(),
                         [&](const Device& d) { return d.id == ev.target; });
  if (it == devices.end()) {
    throw Error(ErrorKind::UnknownTarget, "no device named '" + ev.target + "'");
  }
  auto fail = [&] {
    throw Error(ErrorKind::UnknownField,
                "device '" + ev.target + "' has no steppable field '" + ev.field + "'");
  };
  if (auto* v = std::get_if<VscParams>(&it->params)) {
    if (ev.field == "id_ref") v->id_ref = ev.value;
    else if (ev.field == "iq_ref") v->iq_ref = ev.value;
    else if (ev.field == "kp_acc") v->kp_acc = ev.value;
    else if (ev.field == "ki_acc") v->ki_acc = ev.value;
    else if (ev.field == "kp_pll") v->kp_pll = ev.value;
    else if (ev.field == "ki_pll") v->ki_pll = ev.value;
    else fail();
  } else if (auto* l = std::get_if<LoadParams>(&it->params)) {
    if (ev.field == "r_load") l->r_load = ev.value;
    else fail();
  } else {
    fail();
  }
  return devices;
}

struct ScheduledEvent {
  std::size_t step;  // applied at the boundary t = step * dt
  Event event;
};

/// Events mapped onto integration step boundaries, in application order.
struct EventSchedule {
  std::vector<ScheduledEvent> entries;
  std::vector<std::string> warnings;
};

inline std::size_t step_count(const SimConfig& cfg) {
  return static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
}

/// Snaps each event to the first step boundary at or after its time. Events
/// beyond the horizon are dropped with a warning; for two events on the same
/// field at the same boundary the later-listed one wins, also with a warning.
inline EventSchedule schedule_events(std::span<const Event> events, const SimConfig& cfg) {
  EventSchedule out;
  const std::size_t n_steps = step_count(cfg);
  for (const auto& ev : events) {
    if (ev.time > cfg.t_end) {
      out.warnings.push_back("event on " + ev.target + "." + ev.field + " at t=" +
                             std::to_string(ev.time) + " s is beyond t_end and is ignored");
      continue;
    }
    const double steps = ev.time / cfg.dt;
    auto step = static_cast<std::size_t>(std::max(0.0, std::ceil(steps - 1e-9)));
    step = std::min(step, n_steps);
    out.entries.push_back({step, ev});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.step < b.step; });
  for (std::size_t k = 1; k < out.entries.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto& a = out.entries[j];
      const auto& b = out.entries[k];
      if (a.step == b.step && a.event.target == b.event.target && a.event.field == b.event.field) {
        out.warnings.push_back("events on " + b.event.target + "." + b.event.field +
                               " coincide at step " + std::to_string(b.step) +
                               "; the later-listed value " + std::to_string(b.event.value) +
                               " wins");
        break;
      }
    }
  }
  return out;
}

/// Device parameters after every event with time <= t has been applied.
inline std::vector<Device> devices_after(const NetworkCase& c, double t) {
  std::vector<Event> ordered(c.events);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  auto devices = c.devices;
  for (const auto& ev : ordered) {
    if (ev.time <= t) devices = apply_event(std::move(devices), ev);
  }
  return devices;
}

}  // namespace kronsim
