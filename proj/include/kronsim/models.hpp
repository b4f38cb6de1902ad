#pragma once

// The two simulators' right-hand sides.
//
// ReducedModel holds only device states; source terminal voltages come from
// the divider matrix of the Kron-reduced network at every evaluation.
//
// ReferenceModel additionally integrates every network branch current and the
// grid branch current. Node voltages come from factoring the full unreduced
// nodal matrix, so the two models share nothing beyond Y assembly and the
// device equations.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kronsim/case.hpp"
#include "kronsim/devices.hpp"
#include "kronsim/error.hpp"
#include "kronsim/network.hpp"
#include "kronsim/xy.hpp"

namespace kronsim {

/// Location of one named state in the flat vector.
struct StateEntry {
  std::string owner;  // device id or line label
  std::string name;
  std::size_t offset;
};

/// Bookkeeping shared by both models: which device sits on which attachment
/// and node, and where its states live.
class DeviceModelBase {
 public:
  struct Slot {
    std::size_t device;      // index into devices()
    std::size_t attachment;  // column of the attachment matrix
    std::size_t node;        // row in the full node ordering
    SourceKind kind;
    std::size_t offset;  // first state (unused for the slack)
  };

  const std::vector<Device>& devices() const { return devices_; }
  const std::vector<Slot>& slots() const { return slots_; }
  const std::vector<StateEntry>& layout() const { return layout_; }
  const FullAdmittance& full() const { return full_; }
  double omega0() const { return omega0_; }
  std::size_t device_state_dim() const { return device_dim_; }

  /// Replaces device parameters (event application). Inductances and
  /// feedforward flags must stay as they were since the network matrices
  /// depend on them.
  void set_devices(std::vector<Device> devices) {
    for (std::size_t k = 0; k < devices.size(); ++k) {
      if (devices[k].id != devices_[k].id ||
          devices[k].series_inductance() != devices_[k].series_inductance() ||
          feedforward(devices[k]) != feedforward(devices_[k])) {
        throw Error(ErrorKind::InvalidConfig,
                    "device '" + devices[k].id + "' changed a structural parameter");
      }
    }
    devices_ = std::move(devices);
  }

  std::optional<std::size_t> find_entry(const std::string& owner, const std::string& name) const {
    for (const auto& e : layout_) {
      if (e.owner == owner && e.name == name) return e.offset;
    }
    return std::nullopt;
  }

  const Slot& slack_slot() const { return slots_[slack_slot_]; }

  const VscParams& vsc(const Slot& s) const { return std::get<VscParams>(devices_[s.device].params); }
  const LoadParams& load(const Slot& s) const { return std::get<LoadParams>(devices_[s.device].params); }
  const SlackParams& slack() const {
    return std::get<SlackParams>(devices_[slack_slot().device].params);
  }

  bool has_feedforward() const { return !feedforward_attachments_.empty(); }

 protected:
  DeviceModelBase(const NetworkCase& c, FullAdmittance full)
      : devices_(c.devices), full_(std::move(full)), omega0_(c.omega0()) {
    for (std::size_t a = 0; a < full_.attachments.size(); ++a) {
      const auto& att = full_.attachments[a];
      auto it = std::find_if(devices_.begin(), devices_.end(),
                             [&](const Device& d) { return d.id == att.device_id; });
      if (it == devices_.end()) {
        throw Error(ErrorKind::SemanticError, "attachment references missing device '" +
                                                  att.device_id + "'");
      }
      Slot slot{static_cast<std::size_t>(it - devices_.begin()), a, att.node, it->kind(),
                device_dim_};
      if (slot.kind == SourceKind::Vsc) {
        for (std::size_t k = 0; k < VscState::dim; ++k) {
          layout_.push_back({it->id, VscState::names[k], device_dim_ + k});
        }
        device_dim_ += VscState::dim;
        if (feedforward(*it)) feedforward_attachments_.push_back(a);
      } else if (slot.kind == SourceKind::Load) {
        for (std::size_t k = 0; k < LoadState::dim; ++k) {
          layout_.push_back({it->id, LoadState::names[k], device_dim_ + k});
        }
        device_dim_ += LoadState::dim;
      } else {
        slack_slot_ = slots_.size();
        ++slack_count_;
      }
      slots_.push_back(slot);
    }
    if (slack_count_ != 1) {
      throw Error(ErrorKind::SemanticError, "model requires exactly one slack attachment");
    }
  }

  static bool feedforward(const Device& d) {
    const auto* v = std::get_if<VscParams>(&d.params);
    return v && v->feedforward_enabled;
  }

  /// Internal voltages per attachment. For feedforward converters this is the
  /// part independent of the terminal voltage; the caller adds u_t.
  AxisMatrix internal_voltage_offsets(std::span<const double> x) const {
    AxisMatrix e(static_cast<Eigen::Index>(slots_.size()), 2);
    for (const auto& s : slots_) {
      XY v;
      switch (s.kind) {
        case SourceKind::Vsc:
          v = internal_voltage_offset(vsc(s), VscState::read(x.subspan(s.offset)), omega0_);
          break;
        case SourceKind::Load:
          v = internal_voltage(load(s), LoadState::read(x.subspan(s.offset)));
          break;
        case SourceKind::Slack:
          v = internal_voltage(slack());
          break;
      }
      e(static_cast<Eigen::Index>(s.attachment), 0) = v.x;
      e(static_cast<Eigen::Index>(s.attachment), 1) = v.y;
    }
    return e;
  }

  /// Adds u_t of the attachment's node to every feedforward attachment row.
  /// `node_voltage(row)` returns the terminal voltage of a node row.
  template <class NodeVoltage>
  void add_feedforward(AxisMatrix& e, NodeVoltage&& node_voltage) const {
    for (std::size_t a : feedforward_attachments_) {
      const XY u = node_voltage(slots_[a].node);
      e(static_cast<Eigen::Index>(a), 0) += u.x;
      e(static_cast<Eigen::Index>(a), 1) += u.y;
    }
  }

  /// Device-state derivatives given terminal voltages per node row.
  template <class NodeVoltage>
  void device_rates(std::span<const double> x, std::span<double> dx,
                    NodeVoltage&& node_voltage) const {
    for (const auto& s : slots_) {
      const XY u = node_voltage(s.node);
      if (s.kind == SourceKind::Vsc) {
        vsc_derivative(VscState::read(x.subspan(s.offset)), u, vsc(s), omega0_)
            .write(dx.subspan(s.offset));
      } else if (s.kind == SourceKind::Load) {
        load_derivative(LoadState::read(x.subspan(s.offset)), u, load(s), omega0_)
            .write(dx.subspan(s.offset));
      }
    }
  }

  /// P (a x rows): selects the node voltage seen by each feedforward
  /// attachment.
  Eigen::MatrixXd feedforward_selector(std::size_t rows) const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(slots_.size()),
                                              static_cast<Eigen::Index>(rows));
    for (std::size_t a : feedforward_attachments_) {
      P(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(slots_[a].node)) = 1.0;
    }
    return P;
  }

  std::vector<Device> devices_;
  FullAdmittance full_;
  double omega0_;
  std::vector<Slot> slots_;
  std::vector<StateEntry> layout_;
  std::size_t device_dim_ = 0;
  std::size_t slack_slot_ = 0;
  std::size_t slack_count_ = 0;
  std::vector<std::size_t> feedforward_attachments_;
};

/// Algebraic quantities at one instant, shared by both models' recorders.
struct NetworkSnapshot {
  AxisMatrix e;          // per attachment
  AxisMatrix u;          // per node row (sources then intermediates)
  XY slack_current;      // injection of the infinite bus
};

/// Node ODEs with the network replaced by u_s = M e.
class ReducedModel : public DeviceModelBase {
 public:
  explicit ReducedModel(const NetworkCase& c)
      : DeviceModelBase(c, assemble_full(c.network)), net_(full_) {
    if (has_feedforward()) {
      // u = M (a + P u)  =>  (I - M P) u = M a
      const Eigen::MatrixXd P = feedforward_selector(net_.source_count());
      const auto s = static_cast<Eigen::Index>(net_.source_count());
      feedforward_lu_.compute(Eigen::MatrixXd::Identity(s, s) - net_.M() * P);
      if (!feedforward_lu_.isInvertible()) {
        throw Error(ErrorKind::SingularIntermediateBlock,
                    "feedforward fixed point (I - M P) is singular");
      }
    }
  }

  const ReducedNetwork& network() const { return net_; }
  std::size_t state_dim() const { return device_dim_; }

  AxisMatrix source_voltages(std::span<const double> x) const {
    const AxisMatrix a = internal_voltage_offsets(x);
    if (!has_feedforward()) return net_.terminal_voltages(a);
    return feedforward_lu_.solve(net_.M() * a);
  }

  void derivative(double /*t*/, std::span<const double> x, std::span<double> dx) const {
    const AxisMatrix u = source_voltages(x);
    device_rates(x, dx, [&](std::size_t row) {
      return XY{u(static_cast<Eigen::Index>(row), 0), u(static_cast<Eigen::Index>(row), 1)};
    });
  }

  std::vector<double> derivative(std::span<const double> x) const {
    std::vector<double> dx(x.size());
    derivative(0.0, x, dx);
    return dx;
  }

  NetworkSnapshot snapshot(std::span<const double> x) const {
    NetworkSnapshot snap;
    snap.e = internal_voltage_offsets(x);
    const AxisMatrix u_s = source_voltages(x);
    const AxisMatrix u_m = net_.intermediate_voltages(u_s);
    snap.u.resize(u_s.rows() + u_m.rows(), 2);
    snap.u << u_s, u_m;
    add_feedforward(snap.e, [&](std::size_t row) {
      return XY{u_s(static_cast<Eigen::Index>(row), 0), u_s(static_cast<Eigen::Index>(row), 1)};
    });
    std::vector<XY> vsc_i, load_i;
    for (const auto& s : slots_) {
      if (s.kind == SourceKind::Vsc) vsc_i.push_back({x[s.offset], x[s.offset + 1]});
      if (s.kind == SourceKind::Load) load_i.push_back({x[s.offset], x[s.offset + 1]});
    }
    snap.slack_current = slack_injection(vsc_i, load_i);
    return snap;
  }

 private:
  ReducedNetwork net_;
  Eigen::FullPivLU<Eigen::MatrixXd> feedforward_lu_;
};

/// Full branch-state model: device states, then the grid branch current,
/// then one current per network branch (oriented from -> to).
class ReferenceModel : public DeviceModelBase {
 public:
  struct Line {
    std::size_t from;
    std::size_t to;
    double inductance;
    std::size_t offset;
    std::string label;
  };

  explicit ReferenceModel(const NetworkCase& c)
      : DeviceModelBase(c, assemble_full(c.network)), B_(full_.attachment_matrix()) {
    slack_offset_ = device_dim_;
    const std::string& slack_id = devices_[slack_slot().device].id;
    layout_.push_back({slack_id, "i_x", slack_offset_});
    layout_.push_back({slack_id, "i_y", slack_offset_ + 1});
    std::size_t offset = slack_offset_ + 2;
    for (const auto& br : c.network.branches) {
      Line line{full_.index.at(br.from), full_.index.at(br.to), br.inductance, offset,
                "line_" + br.from + "_" + br.to};
      layout_.push_back({line.label, "i_x", offset});
      layout_.push_back({line.label, "i_y", offset + 1});
      lines_.push_back(std::move(line));
      offset += 2;
    }
    dim_ = offset;

    Eigen::MatrixXd system = full_.Y;
    if (has_feedforward()) system -= B_ * feedforward_selector(full_.node_count());
    lu_.compute(system);
  }

  std::size_t state_dim() const { return dim_; }
  std::size_t slack_offset() const { return slack_offset_; }
  const std::vector<Line>& lines() const { return lines_; }

  /// Solves the unreduced nodal system for every node voltage.
  AxisMatrix node_voltages(std::span<const double> x) const {
    return lu_.solve(B_ * internal_voltage_offsets(x));
  }

  void derivative(double /*t*/, std::span<const double> x, std::span<double> dx) const {
    const AxisMatrix u = node_voltages(x);
    auto at = [&](std::size_t row) {
      return XY{u(static_cast<Eigen::Index>(row), 0), u(static_cast<Eigen::Index>(row), 1)};
    };
    device_rates(x, dx, at);

    const XY i_g{x[slack_offset_], x[slack_offset_ + 1]};
    const XY di_g = inductor_current_rate(slack().u_g - at(slack_slot().node), i_g,
                                          slack().Lg, omega0_);
    dx[slack_offset_] = di_g.x;
    dx[slack_offset_ + 1] = di_g.y;

    for (const auto& line : lines_) {
      const XY i{x[line.offset], x[line.offset + 1]};
      const XY di = inductor_current_rate(at(line.from) - at(line.to), i, line.inductance, omega0_);
      dx[line.offset] = di.x;
      dx[line.offset + 1] = di.y;
    }
  }

  std::vector<double> derivative(std::span<const double> x) const {
    std::vector<double> dx(x.size());
    derivative(0.0, x, dx);
    return dx;
  }

  NetworkSnapshot snapshot(std::span<const double> x) const {
    NetworkSnapshot snap;
    snap.u = node_voltages(x);
    snap.e = internal_voltage_offsets(x);
    add_feedforward(snap.e, [&](std::size_t row) {
      return XY{snap.u(static_cast<Eigen::Index>(row), 0), snap.u(static_cast<Eigen::Index>(row), 1)};
    });
    snap.slack_current = {x[slack_offset_], x[slack_offset_ + 1]};
    return snap;
  }

  /// Per node: attachment injections minus currents leaving through branches.
  std::vector<XY> kcl_residuals(std::span<const double> x) const {
    std::vector<XY> r(full_.node_count());
    for (const auto& s : slots_) {
      const std::size_t off = s.kind == SourceKind::Slack ? slack_offset_ : s.offset;
      r[s.node] += XY{x[off], x[off + 1]};
    }
    for (const auto& line : lines_) {
      const XY i{x[line.offset], x[line.offset + 1]};
      r[line.from] = r[line.from] - i;
      r[line.to] += i;
    }
    return r;
  }

  /// Lifts a reduced-model state onto the full branch-state manifold: device
  /// states are copied, the grid current follows from KCL and each line
  /// carries its steady-state current i = -j (u_from - u_to) / L.
  std::vector<double> lift(const ReducedModel& reduced, std::span<const double> x_reduced) const {
    if (x_reduced.size() != device_dim_) {
      throw Error(ErrorKind::DimensionMismatch, "reduced state has the wrong length");
    }
    std::vector<double> x(dim_, 0.0);
    std::copy(x_reduced.begin(), x_reduced.end(), x.begin());
    const NetworkSnapshot snap = reduced.snapshot(x_reduced);
    x[slack_offset_] = snap.slack_current.x;
    x[slack_offset_ + 1] = snap.slack_current.y;
    for (const auto& line : lines_) {
      const auto f = static_cast<Eigen::Index>(line.from);
      const auto t = static_cast<Eigen::Index>(line.to);
      x[line.offset] = (snap.u(f, 1) - snap.u(t, 1)) / line.inductance;
      x[line.offset + 1] = -(snap.u(f, 0) - snap.u(t, 0)) / line.inductance;
    }
    return x;
  }

 private:
  Eigen::MatrixXd B_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<Line> lines_;
  std::size_t slack_offset_ = 0;
  std::size_t dim_ = 0;
};

}  // namespace kronsim
