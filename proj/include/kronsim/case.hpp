#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "kronsim/devices.hpp"
#include "kronsim/error.hpp"
#include "kronsim/network.hpp"

namespace kronsim {

using DeviceParams = std::variant<VscParams, LoadParams, SlackParams>;

struct Device {
  std::string id;
  DeviceParams params;

  SourceKind kind() const {
    if (std::holds_alternative<VscParams>(params)) return SourceKind::Vsc;
    if (std::holds_alternative<LoadParams>(params)) return SourceKind::Load;
    return SourceKind::Slack;
  }

  double series_inductance() const {
    return std::visit(
        [](const auto& p) -> double {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, VscParams>) return p.Lf;
          else if constexpr (std::is_same_v<P, LoadParams>) return p.L_load;
          else return p.Lg;
        },
        params);
  }
};

/// A parameter change at a given time, e.g. a current-reference step.
struct Event {
  double time = 0.0;
  std::string target;
  std::string field;
  double value = 0.0;
};

enum class Integrator { Rk4 };

struct SimConfig {
  double dt = 20e-6;
  double t_end = 2.0;
  std::size_t record_stride = 50;
  Integrator integrator = Integrator::Rk4;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
};

inline std::vector<Issue> validate_config(const SimConfig& c) {
  std::vector<Issue> issues;
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) {
    issues.push_back({ErrorKind::InvalidConfig, "sim.dt must be positive"});
  }
  if (!(c.t_end > 0.0) || !std::isfinite(c.t_end)) {
    issues.push_back({ErrorKind::InvalidConfig, "sim.t_end must be positive"});
  }
  if (c.record_stride < 1) {
    issues.push_back({ErrorKind::InvalidConfig, "sim.record_stride must be at least 1"});
  }
  if (!(c.newton_tol > 0.0)) {
    issues.push_back({ErrorKind::InvalidConfig, "sim.newton_tol must be positive"});
  }
  if (c.newton_max_iter < 1) {
    issues.push_back({ErrorKind::InvalidConfig, "sim.newton_max_iter must be at least 1"});
  }
  return issues;
}

/// Everything needed to reproduce a run.
struct NetworkCase {
  std::string name;
  double base_frequency_hz = kDefaultFrequencyHz;
  Network network;
  std::vector<Device> devices;
  std::vector<Event> events;
  SimConfig sim;

  double omega0() const { return omega_from_frequency(base_frequency_hz); }

  const Device* find_device(const std::string& id) const {
    auto it = std::find_if(devices.begin(), devices.end(),
                           [&](const Device& d) { return d.id == id; });
    return it == devices.end() ? nullptr : &*it;
  }

  const SlackParams& slack() const {
    for (const auto& d : devices) {
      if (const auto* s = std::get_if<SlackParams>(&d.params)) return *s;
    }
    throw Error(ErrorKind::SemanticError, "case has no slack device");
  }

  // Builder helpers for programmatic cases.
  NetworkCase& add_node(const std::string& id) {
    network.nodes.push_back({id, {}});
    return *this;
  }
  NetworkCase& add_branch(const std::string& from, const std::string& to, double inductance) {
    network.branches.push_back({from, to, inductance});
    return *this;
  }
  NetworkCase& attach(const std::string& node_id, const std::string& device_id,
                      DeviceParams params) {
    devices.push_back({device_id, std::move(params)});
    const Device& d = devices.back();
    auto it = std::find_if(network.nodes.begin(), network.nodes.end(),
                           [&](const NodeSpec& n) { return n.id == node_id; });
    if (it == network.nodes.end()) {
      network.nodes.push_back({node_id, {}});
      it = std::prev(network.nodes.end());
    }
    it->attachments.push_back({d.kind(), d.series_inductance(), d.id});
    return *this;
  }

  /// Refreshes attachment kind and inductance from the device table.
  void sync_attachments() {
    for (auto& node : network.nodes) {
      for (auto& a : node.attachments) {
        if (const Device* d = find_device(a.device_id)) {
          a.kind = d->kind();
          a.series_inductance = d->series_inductance();
        }
      }
    }
  }
};

inline DaeCounts dae_counts(const NetworkCase& c) { return dae_counts(c.network); }

/// Names of the parameters an event may change, per device kind.
inline const std::vector<std::string>& event_fields(SourceKind kind) {
  static const std::vector<std::string> vsc = {"id_ref", "iq_ref", "kp_acc",
                                               "ki_acc", "kp_pll", "ki_pll"};
  static const std::vector<std::string> load = {"r_load"};
  static const std::vector<std::string> slack = {};
  switch (kind) {
    case SourceKind::Vsc: return vsc;
    case SourceKind::Load: return load;
    case SourceKind::Slack: return slack;
  }
  return slack;
}

inline std::vector<Issue> validate_case(const NetworkCase& c) {
  std::vector<Issue> issues = validate_network(c.network);

  if (!(c.base_frequency_hz > 0.0)) {
    issues.push_back({ErrorKind::InvalidConfig, "base_frequency_hz must be positive"});
  }

  std::map<std::string, int> attached;
  for (const auto& d : c.devices) {
    if (!attached.emplace(d.id, 0).second) {
      issues.push_back({ErrorKind::SemanticError, "duplicate device id '" + d.id + "'"});
    }
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, VscParams>) {
            if (p.kp_acc < 0 || p.ki_acc < 0 || p.kp_pll < 0 || p.ki_pll < 0) {
              issues.push_back({ErrorKind::SemanticError,
                                "device '" + d.id + "' has a negative controller gain"});
            }
          } else if constexpr (std::is_same_v<P, LoadParams>) {
            if (p.r_load < 0) {
              issues.push_back({ErrorKind::SemanticError,
                                "device '" + d.id + "' has negative resistance"});
            }
          } else {
            if (!(magnitude(p.u_g) > 0.0)) {
              issues.push_back({ErrorKind::SemanticError,
                                "slack '" + d.id + "' has zero grid voltage"});
            }
          }
        },
        d.params);
  }

  std::size_t slack_attachments = 0;
  for (const auto& node : c.network.nodes) {
    for (const auto& a : node.attachments) {
      auto it = attached.find(a.device_id);
      if (it == attached.end()) {
        issues.push_back({ErrorKind::SemanticError, "node '" + node.id +
                                                        "' references missing device '" +
                                                        a.device_id + "'"});
        continue;
      }
      if (++it->second == 2) {
        issues.push_back({ErrorKind::SemanticError,
                          "device '" + a.device_id + "' is attached more than once"});
      }
      if (a.kind == SourceKind::Slack) ++slack_attachments;
    }
  }
  for (const auto& [id, count] : attached) {
    if (count == 0) {
      issues.push_back({ErrorKind::SemanticError, "device '" + id + "' is not attached to any node"});
    }
  }
  if (slack_attachments != 1) {
    issues.push_back({ErrorKind::SemanticError,
                      "case must have exactly one slack attachment, found " +
                          std::to_string(slack_attachments)});
  }

  for (const auto& ev : c.events) {
    const Device* d = c.find_device(ev.target);
    if (!d) {
      issues.push_back({ErrorKind::UnknownTarget, "event targets unknown device '" + ev.target + "'"});
      continue;
    }
    const auto& fields = event_fields(d->kind());
    if (std::find(fields.begin(), fields.end(), ev.field) == fields.end()) {
      issues.push_back({ErrorKind::UnknownField, "event field '" + ev.field +
                                                     "' is not steppable on " +
                                                     std::string(to_string(d->kind())) + " '" +
                                                     d->id + "'"});
    }
    if (!std::isfinite(ev.time) || ev.time < 0.0 || !std::isfinite(ev.value)) {
      issues.push_back({ErrorKind::SemanticError, "event on '" + ev.target +
                                                      "' has a negative or non-finite time or value"});
    }
  }

  for (auto& issue : validate_config(c.sim)) issues.push_back(std::move(issue));
  return issues;
}

}  // namespace kronsim
