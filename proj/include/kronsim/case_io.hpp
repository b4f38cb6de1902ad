#pragma once

// JSON case files. See docs/case_format.md for the schema. Comments (// and
// /* */) are accepted. Parsing reports every problem it finds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kronsim/case.hpp"
#include "kronsim/error.hpp"

namespace kronsim {

namespace detail {

using nlohmann::json;

/// Pulls typed fields out of a JSON object, recording problems instead of
/// throwing so that one pass can report everything.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path, std::vector<Issue>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (!obj_.is_object()) fail(path_ + " must be an object");
  }

  bool ok() const { return obj_.is_object(); }

  void fail(const std::string& msg) { issues_.push_back({ErrorKind::SemanticError, msg}); }

  bool has(const char* key) const { return ok() && obj_.contains(key); }

  double number(const char* key, std::optional<double> fallback = std::nullopt) {
    seen_.push_back(key);
    if (!has(key)) {
      if (!fallback) fail(path_ + "." + key + " is required");
      return fallback.value_or(0.0);
    }
    const auto& v = obj_.at(key);
    if (!v.is_number()) {
      fail(path_ + "." + key + " must be a number");
      return fallback.value_or(0.0);
    }
    return v.get<double>();
  }

  /// Like number() without a fallback, but a missing or mistyped value is
  /// replaced by `placeholder` so later checks do not report it a second time.
  double required_number(const char* key, double placeholder) {
    const std::size_t before = issues_.size();
    const double v = number(key);
    return issues_.size() == before ? v : placeholder;
  }

  bool boolean(const char* key, bool fallback) {
    seen_.push_back(key);
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_boolean()) {
      fail(path_ + "." + key + " must be true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  /// Strings; integers are accepted and converted so node ids may be numeric.
  std::string text(const char* key, std::optional<std::string> fallback = std::nullopt) {
    seen_.push_back(key);
    if (!has(key)) {
      if (!fallback) fail(path_ + "." + key + " is required");
      return fallback.value_or("");
    }
    const auto& v = obj_.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    fail(path_ + "." + key + " must be a string");
    return fallback.value_or("");
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    return has(key) ? &obj_.at(key) : nullptr;
  }

  /// Flags keys that were never read. Keys starting with '_' and "note" are
  /// free-form annotations.
  void reject_unknown() {
    if (!ok()) return;
    for (const auto& [key, value] : obj_.items()) {
      if (key.empty() || key[0] == '_' || key == "note") continue;
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        fail(path_ + " has unknown key '" + key + "'");
      }
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<Issue>& issues_;
  std::vector<std::string> seen_;
};

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  for (std::size_t k = 0; k < end; ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::vector<Device> read_devices(const json* arr, std::vector<Issue>& issues) {
  std::vector<Device> devices;
  if (!arr) {
    issues.push_back({ErrorKind::SemanticError, "devices is required"});
    return devices;
  }
  if (!arr->is_array()) {
    issues.push_back({ErrorKind::SemanticError, "devices must be an array"});
    return devices;
  }
  for (std::size_t k = 0; k < arr->size(); ++k) {
    FieldReader r((*arr)[k], "devices[" + std::to_string(k) + "]", issues);
    if (!r.ok()) continue;
    const std::string id = r.text("id");
    const std::string type = r.text("type");
    const std::string where = "device '" + id + "'";
    if (type == "vsc") {
      VscParams p;
      p.Lf = r.required_number("Lf", p.Lf);
      p.kp_acc = r.number("kp_acc", p.kp_acc);
      p.ki_acc = r.number("ki_acc", p.ki_acc);
      p.kp_pll = r.number("kp_pll", p.kp_pll);
      p.ki_pll = r.number("ki_pll", p.ki_pll);
      p.id_ref = r.number("id_ref", 0.0);
      p.iq_ref = r.number("iq_ref", 0.0);
      p.decoupling_enabled = r.boolean("decoupling", true);
      p.feedforward_enabled = r.boolean("feedforward", false);
      const std::string freq = r.text("decoupling_frequency", std::string("nominal"));
      if (freq == "nominal") {
        p.decoupling_frequency = DecouplingFrequency::Nominal;
      } else if (freq == "pll") {
        p.decoupling_frequency = DecouplingFrequency::PllEstimate;
      } else {
        r.fail(where + ": decoupling_frequency must be \"nominal\" or \"pll\"");
      }
      devices.push_back({id, p});
    } else if (type == "load") {
      devices.push_back({id, LoadParams{r.required_number("r_load", 0.0), r.required_number("L_load", 1.0)}});
    } else if (type == "slack") {
      SlackParams p;
      p.Lg = r.required_number("Lg", p.Lg);
      if (const json* ug = r.child("u_g")) {
        if (ug->is_array() && ug->size() == 2 && (*ug)[0].is_number() && (*ug)[1].is_number()) {
          p.u_g = {(*ug)[0].get<double>(), (*ug)[1].get<double>()};
        } else {
          r.fail(where + ": u_g must be a two-element array [x, y]");
        }
      }
      devices.push_back({id, p});
    } else if (!type.empty()) {
      r.fail(where + " has unknown type '" + type + "' (expected vsc, load or slack)");
    }
    r.reject_unknown();
  }
  return devices;
}

}  // namespace detail

/// Parses and validates a case. Throws SyntaxError for malformed JSON and
/// CaseError listing every semantic problem otherwise.
inline NetworkCase parse_case(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw SyntaxError(line, col, what);
  }

  std::vector<Issue> issues;
  NetworkCase c;
  detail::FieldReader root(doc, "case", issues);
  if (!root.ok()) throw CaseError(std::move(issues));

  c.name = root.text("name", std::string());
  c.base_frequency_hz = root.number("base_frequency_hz", kDefaultFrequencyHz);
  c.devices = detail::read_devices(root.child("devices"), issues);

  if (const json* nodes = root.child("nodes"); nodes && nodes->is_array()) {
    for (std::size_t k = 0; k < nodes->size(); ++k) {
      detail::FieldReader r((*nodes)[k], "nodes[" + std::to_string(k) + "]", issues);
      if (!r.ok()) continue;
      NodeSpec node{r.text("id"), {}};
      if (const json* att = r.child("attach")) {
        if (!att->is_array()) {
          r.fail("node '" + node.id + "': attach must be an array of device ids");
        } else {
          for (const auto& d : *att) {
            if (!d.is_string()) {
              r.fail("node '" + node.id + "': attach entries must be strings");
              continue;
            }
            // Kind and inductance are filled in from the device table below.
            node.attachments.push_back({SourceKind::Vsc, 1.0, d.get<std::string>()});
          }
        }
      }
      r.reject_unknown();
      c.network.nodes.push_back(std::move(node));
    }
  } else {
    issues.push_back({ErrorKind::SemanticError, "nodes must be an array"});
  }

  if (const json* branches = root.child("branches")) {
    if (!branches->is_array()) {
      issues.push_back({ErrorKind::SemanticError, "branches must be an array"});
    } else {
      for (std::size_t k = 0; k < branches->size(); ++k) {
        detail::FieldReader r((*branches)[k], "branches[" + std::to_string(k) + "]", issues);
        if (!r.ok()) continue;
        BranchSpec br{r.text("from"), r.text("to"), r.number("L")};
        r.reject_unknown();
        c.network.branches.push_back(std::move(br));
      }
    }
  }

  if (const json* events = root.child("events")) {
    if (!events->is_array()) {
      issues.push_back({ErrorKind::SemanticError, "events must be an array"});
    } else {
      for (std::size_t k = 0; k < events->size(); ++k) {
        detail::FieldReader r((*events)[k], "events[" + std::to_string(k) + "]", issues);
        if (!r.ok()) continue;
        Event ev{r.number("time"), r.text("target"), r.text("field"), r.number("value")};
        r.reject_unknown();
        c.events.push_back(std::move(ev));
      }
    }
  }

  if (const json* sim = root.child("sim")) {
    detail::FieldReader r(*sim, "sim", issues);
    if (r.ok()) {
      SimConfig defaults;
      c.sim.dt = r.number("dt", defaults.dt);
      c.sim.t_end = r.number("t_end", defaults.t_end);
      const double stride = r.number("record_stride", static_cast<double>(defaults.record_stride));
      if (stride < 1 || stride != std::floor(stride)) {
        r.fail("sim.record_stride must be a positive integer");
      } else {
        c.sim.record_stride = static_cast<std::size_t>(stride);
      }
      const std::string integrator = r.text("integrator", std::string("rk4"));
      if (integrator != "rk4") r.fail("sim.integrator must be \"rk4\"");
      c.sim.newton_tol = r.number("newton_tol", defaults.newton_tol);
      c.sim.newton_max_iter = static_cast<int>(r.number("newton_max_iter", defaults.newton_max_iter));
      r.reject_unknown();
    }
  }
  root.reject_unknown();

  c.sync_attachments();
  for (auto& issue : validate_case(c)) issues.push_back(std::move(issue));
  if (!issues.empty()) throw CaseError(std::move(issues));
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline NetworkCase load_case(const std::string& path) { return parse_case(read_text_file(path)); }

}  // namespace kronsim
