#pragma once

// Steady-state initialization of the reduced model.
//
// A phasor solve supplies the starting point: converters are treated as ideal
// current sources at their references on a frame aligned with their own
// terminal voltage, iterated until those angles settle. Newton's method with a
// forward-difference Jacobian and halving line search then drives the full
// derivative vector to zero.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kronsim/case.hpp"
#include "kronsim/devices.hpp"
#include "kronsim/error.hpp"
#include "kronsim/models.hpp"

namespace kronsim {

struct Equilibrium {
  std::vector<double> state;  // reduced-model layout
  double residual = 0.0;      // max |f(x)|
  int iterations = 0;
};

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Forward-difference Jacobian with per-column step 1e-7 * (1 + |x_j|).
template <class F>
Eigen::MatrixXd forward_difference_jacobian(F&& f, std::span<const double> x,
                                            std::span<const double> f0) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd J(static_cast<Eigen::Index>(f0.size()), n);
  std::vector<double> xp(x.begin(), x.end());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double h = 1e-7 * (1.0 + std::abs(x[uj]));
    xp[uj] = x[uj] + h;
    const double step = xp[uj] - x[uj];
    const std::vector<double> fp = f(std::span<const double>(xp));
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
      J(i, j) = (fp[static_cast<std::size_t>(i)] - f0[static_cast<std::size_t>(i)]) / step;
    }
    xp[uj] = x[uj];
  }
  return J;
}

/// Steady-state guess from a phasor solve of the network with converters as
/// fixed current injections.
inline std::vector<double> phasor_initial_guess(const ReducedModel& model) {
  using cd = std::complex<double>;
  const auto& full = model.full();
  const auto n = static_cast<Eigen::Index>(full.node_count());
  const cd j(0.0, 1.0);

  // Network part: branch admittance 1/(jL) between nodes.
  Eigen::MatrixXcd A = full.Y.cast<cd>() / j;
  for (const auto& s : model.slots()) {
    const auto row = static_cast<Eigen::Index>(s.node);
    const double g = full.attachments[s.attachment].admittance;
    // Remove the attachment's 1/(jL) placed on the diagonal by Y; each kind
    // re-adds its own steady-state shunt.
    A(row, row) -= g / j;
    if (s.kind == SourceKind::Load) {
      const auto& p = model.load(s);
      A(row, row) += 1.0 / cd(p.r_load, p.L_load);
    } else if (s.kind == SourceKind::Slack) {
      A(row, row) += g / j;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);

  const auto& slack = model.slack();
  const cd u_g(slack.u_g.x, slack.u_g.y);
  std::vector<double> delta(model.slots().size(), std::atan2(slack.u_g.y, slack.u_g.x));
  Eigen::VectorXcd u(n);

  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    for (const auto& s : model.slots()) {
      const auto row = static_cast<Eigen::Index>(s.node);
      if (s.kind == SourceKind::Vsc) {
        const auto& p = model.vsc(s);
        rhs(row) += cd(p.id_ref, p.iq_ref) * std::polar(1.0, delta[s.attachment]);
      } else if (s.kind == SourceKind::Slack) {
        rhs(row) += u_g * (1.0 / slack.Lg) / j;
      }
    }
    u = lu.solve(rhs);
    double change = 0.0;
    for (const auto& s : model.slots()) {
      if (s.kind != SourceKind::Vsc) continue;
      const double next = std::arg(u(static_cast<Eigen::Index>(s.node)));
      change = std::max(change, std::abs(next - delta[s.attachment]));
      delta[s.attachment] = next;
    }
    if (change < 1e-15) break;
  }

  std::vector<double> x(model.state_dim(), 0.0);
  for (const auto& s : model.slots()) {
    const cd us = u(static_cast<Eigen::Index>(s.node));
    if (s.kind == SourceKind::Vsc) {
      const auto& p = model.vsc(s);
      VscState st;
      st.pll_delta = delta[s.attachment];
      const cd i = cd(p.id_ref, p.iq_ref) * std::polar(1.0, st.pll_delta);
      st.i = {i.real(), i.imag()};
      // Filter at rest: e = u + j Lf i.
      const cd e = us + j * p.Lf * i;
      const DQ e_dq = xy_to_dq({e.real(), e.imag()}, st.pll_delta);
      const DQ u_dq = xy_to_dq({us.real(), us.imag()}, st.pll_delta);
      // Zero tracking error: integrators carry whatever the other terms do not.
      const auto rest = acc_output(st, {p.id_ref, p.iq_ref}, p, u_dq);
      st.acc_xd = e_dq.d - rest.e.d;
      st.acc_xq = e_dq.q - rest.e.q;
      st.write(std::span(x).subspan(s.offset));
    } else if (s.kind == SourceKind::Load) {
      LoadState st{load_steady_current({us.real(), us.imag()}, model.load(s))};
      st.write(std::span(x).subspan(s.offset));
    }
  }
  return x;
}

/// Damped Newton on f(x) = 0 starting from `x0`.
template <class F>
Equilibrium newton_solve(F&& f, std::vector<double> x0, double tol, int max_iter) {
  Equilibrium eq{std::move(x0)};
  std::vector<double> r = f(std::span<const double>(eq.state));
  eq.residual = max_abs(r);
  while (!(eq.residual < tol)) {
    if (eq.iterations >= max_iter) {
      throw Error(ErrorKind::NewtonDivergence,
                  "residual " + std::to_string(eq.residual) + " after " +
                      std::to_string(eq.iterations) + " iterations");
    }
    const Eigen::MatrixXd J = forward_difference_jacobian(f, eq.state, r);
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    const Eigen::VectorXd dx = J.fullPivLu().solve(rhs);
    if (!dx.allFinite()) {
      throw Error(ErrorKind::NewtonDivergence, "singular Jacobian at residual " +
                                                   std::to_string(eq.residual));
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
      std::vector<double> trial = eq.state;
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += alpha * dx(static_cast<Eigen::Index>(k));
      std::vector<double> rt = f(std::span<const double>(trial));
      const double res = max_abs(rt);
      if (res < eq.residual) {
        eq.state = std::move(trial);
        r = std::move(rt);
        eq.residual = res;
        accepted = true;
        break;
      }
    }
    ++eq.iterations;
    if (!accepted) {
      throw Error(ErrorKind::NewtonDivergence,
                  "line search could not reduce residual " + std::to_string(eq.residual));
    }
  }
  return eq;
}

/// Equilibrium of the reduced model for the parameters currently held by
/// `model`.
inline Equilibrium find_equilibrium(const ReducedModel& model, const SimConfig& cfg) {
  auto f = [&](std::span<const double> x) { return model.derivative(x); };
  return newton_solve(f, phasor_initial_guess(model), cfg.newton_tol, cfg.newton_max_iter);
}

/// Equilibrium at the case's pre-event parameters.
inline Equilibrium find_equilibrium(const NetworkCase& c) {
  return find_equilibrium(ReducedModel(c), c.sim);
}

}  // namespace kronsim
