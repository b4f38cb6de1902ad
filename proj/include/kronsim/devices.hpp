#pragma once

// Source-node dynamics on the common xy frame.
//
// Currents follow the injection convention: positive current flows from the
// device branch into the network node. Each device sees only its terminal
// voltage and produces an internal voltage; the network closes the loop.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>

#include "kronsim/error.hpp"
#include "kronsim/network.hpp"
#include "kronsim/xy.hpp"

namespace kronsim {

inline constexpr double kDefaultFrequencyHz = 50.0;

inline constexpr double omega_from_frequency(double hz) { return 2.0 * std::numbers::pi * hz; }

/// Which frequency scales the current-loop cross-coupling compensation.
enum class DecouplingFrequency {
  Nominal,      // 1 pu
  PllEstimate,  // 1 + pll_xi / omega0 pu
};

struct VscParams {
  double Lf = 0.01;
  double kp_acc = 0.3;
  double ki_acc = 160.0;
  double kp_pll = 50.0;
  double ki_pll = 2000.0;
  bool decoupling_enabled = true;
  bool feedforward_enabled = false;
  DecouplingFrequency decoupling_frequency = DecouplingFrequency::Nominal;
  double id_ref = 0.0;
  double iq_ref = 0.0;
};

struct VscState {
  static constexpr std::size_t dim = kVscStateDim;
  static constexpr std::array<const char*, dim> names = {"i_x",    "i_y",    "acc_xd",
                                                         "acc_xq", "pll_xi", "pll_delta"};

  XY i;
  double acc_xd = 0.0;
  double acc_xq = 0.0;
  double pll_xi = 0.0;     // rad/s
  double pll_delta = 0.0;  // rad, unwrapped

  static VscState read(std::span<const double> x) {
    return {{x[0], x[1]}, x[2], x[3], x[4], x[5]};
  }
  void write(std::span<double> x) const {
    x[0] = i.x;
    x[1] = i.y;
    x[2] = acc_xd;
    x[3] = acc_xq;
    x[4] = pll_xi;
    x[5] = pll_delta;
  }
};

struct LoadParams {
  double r_load = 0.0;
  double L_load = 1.0;
};

struct LoadState {
  static constexpr std::size_t dim = kLoadStateDim;
  static constexpr std::array<const char*, dim> names = {"i_x", "i_y"};

  XY i;

  static LoadState read(std::span<const double> x) { return {{x[0], x[1]}}; }
  void write(std::span<double> x) const {
    x[0] = i.x;
    x[1] = i.y;
  }
};

struct SlackParams {
  double Lg = 0.01;
  XY u_g{1.0, 0.0};
};

/// Rate of change of a current through an inductance L driven by voltage
/// difference v, expressed on the frame rotating at omega0.
inline XY inductor_current_rate(XY v, XY i, double L, double omega0) {
  const double g = omega0 / L;
  return {g * v.x + omega0 * i.y, g * v.y - omega0 * i.x};
}

struct AccOutput {
  DQ e;            // internal voltage command on the local frame
  double d_acc_xd;  // integrator rates
  double d_acc_xq;
};

/// PI current control on the local frame with optional cross-coupling
/// compensation and terminal-voltage feedforward. `omega_pu` scales the
/// decoupling terms.
inline AccOutput acc_output(const VscState& state, DQ i_dq, const VscParams& p,
                            std::optional<DQ> u_t_dq = std::nullopt, double omega_pu = 1.0) {
  const double err_d = p.id_ref - i_dq.d;
  const double err_q = p.iq_ref - i_dq.q;
  AccOutput out{{p.kp_acc * err_d + state.acc_xd, p.kp_acc * err_q + state.acc_xq},
                p.ki_acc * err_d,
                p.ki_acc * err_q};
  if (p.decoupling_enabled) {
    out.e.d -= omega_pu * p.Lf * i_dq.q;
    out.e.q += omega_pu * p.Lf * i_dq.d;
  }
  if (p.feedforward_enabled) {
    if (!u_t_dq) {
      throw Error(ErrorKind::MissingFeedforwardInput,
                  "feedforward is enabled but no terminal voltage was supplied");
    }
    out.e.d += u_t_dq->d;
    out.e.q += u_t_dq->q;
  }
  return out;
}

struct PllRates {
  double d_delta;
  double d_xi;
};

/// Synchronous-frame PLL driving the q-axis terminal voltage to zero. Gains
/// are in rad/s per pu volt.
inline PllRates pll_derivative(const VscState& state, XY u_t, const VscParams& p) {
  const double u_tq = -u_t.x * std::sin(state.pll_delta) + u_t.y * std::cos(state.pll_delta);
  return {p.kp_pll * u_tq + state.pll_xi, p.ki_pll * u_tq};
}

inline double decoupling_omega_pu(const VscState& state, const VscParams& p, double omega0) {
  return p.decoupling_frequency == DecouplingFrequency::PllEstimate ? 1.0 + state.pll_xi / omega0
                                                                    : 1.0;
}

/// Converter internal voltage on the common frame. The terminal voltage is only
/// consulted when feedforward is enabled.
inline XY internal_voltage(const VscParams& p, const VscState& state, double omega0,
                           std::optional<XY> u_t = std::nullopt) {
  const DQ i_dq = xy_to_dq(state.i, state.pll_delta);
  std::optional<DQ> u_dq;
  if (u_t) u_dq = xy_to_dq(*u_t, state.pll_delta);
  const auto acc = acc_output(state, i_dq, p, u_dq, decoupling_omega_pu(state, p, omega0));
  return dq_to_xy(acc.e, state.pll_delta);
}

/// Equivalent internal voltage of an RL load: -r i.
inline XY internal_voltage(const LoadParams& p, const LoadState& state) {
  return -p.r_load * state.i;
}

inline XY internal_voltage(const SlackParams& p) { return p.u_g; }

/// The part of the converter internal voltage that does not depend on the
/// terminal voltage. With feedforward on, e = a + u_t on the xy frame since
/// the rotation in and out of the local frame cancels.
inline XY internal_voltage_offset(const VscParams& p, const VscState& state, double omega0) {
  if (!p.feedforward_enabled) return internal_voltage(p, state, omega0);
  return internal_voltage(p, state, omega0, XY{0.0, 0.0});
}

inline VscState vsc_derivative(const VscState& state, XY u_t, const VscParams& p, double omega0) {
  const DQ i_dq = xy_to_dq(state.i, state.pll_delta);
  std::optional<DQ> u_dq;
  if (p.feedforward_enabled) u_dq = xy_to_dq(u_t, state.pll_delta);
  const auto acc = acc_output(state, i_dq, p, u_dq, decoupling_omega_pu(state, p, omega0));
  const XY e = dq_to_xy(acc.e, state.pll_delta);
  const auto pll = pll_derivative(state, u_t, p);

  VscState rate;
  rate.i = inductor_current_rate(e - u_t, state.i, p.Lf, omega0);
  rate.acc_xd = acc.d_acc_xd;
  rate.acc_xq = acc.d_acc_xq;
  rate.pll_xi = pll.d_xi;
  rate.pll_delta = pll.d_delta;
  return rate;
}

inline LoadState load_derivative(const LoadState& state, XY u_t, const LoadParams& p,
                                 double omega0) {
  return {inductor_current_rate(internal_voltage(p, state) - u_t, state.i, p.L_load, omega0)};
}

/// Steady-state load current for a given terminal voltage:
/// solves -r i - u - j L i = 0, i.e. i = -u / (r + jL).
inline XY load_steady_current(XY u_t, const LoadParams& p) {
  const double r = p.r_load;
  const double L = p.L_load;
  const double den = r * r + L * L;
  return {-(r * u_t.x + L * u_t.y) / den, -(r * u_t.y - L * u_t.x) / den};
}

}  // namespace kronsim
