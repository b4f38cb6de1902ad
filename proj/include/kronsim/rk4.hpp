#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kronsim/error.hpp"

namespace kronsim {

/// Classical fixed-step fourth-order Runge-Kutta. The derivative callable has
/// the shape `void(double t, std::span<const double> x, std::span<double> dx)`.
/// Stage buffers are kept between steps.
class Rk4 {
 public:
  explicit Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), w_(dim) {}

  template <class Derivative>
  void step(Derivative&& f, std::vector<double>& x, double t, double dt) {
    const std::size_t n = x.size();
    if (k1_.size() != n) *this = Rk4(n);

    f(t, std::span<const double>(x), std::span<double>(k1_));
    check(k1_, t);
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + 0.5 * dt * k1_[i];
    f(t + 0.5 * dt, std::span<const double>(w_), std::span<double>(k2_));
    check(k2_, t);
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + 0.5 * dt * k2_[i];
    f(t + 0.5 * dt, std::span<const double>(w_), std::span<double>(k3_));
    check(k3_, t);
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + dt * k3_[i];
    f(t + dt, std::span<const double>(w_), std::span<double>(k4_));
    check(k4_, t);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += dt / 6.0 * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
    }
  }

 private:
  static void check(const std::vector<double>& k, double t) {
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (!std::isfinite(k[i])) {
        throw Error(ErrorKind::NonFiniteDerivative,
                    "derivative component " + std::to_string(i) + " is not finite at t=" +
                        std::to_string(t));
      }
    }
  }

  std::vector<double> k1_, k2_, k3_, k4_, w_;
};

template <class Derivative>
std::vector<double> step_rk4(Derivative&& f, std::vector<double> x, double t, double dt) {
  Rk4 stepper(x.size());
  stepper.step(f, x, t, dt);
  return x;
}

}  // namespace kronsim
