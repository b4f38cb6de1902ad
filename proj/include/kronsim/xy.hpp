#pragma once

#include <cmath>

namespace kronsim {

/// A quantity on the common synchronous frame (x, y axes rotating at the base
/// angular frequency). Per-unit.
struct XY {
  double x = 0.0;
  double y = 0.0;

  friend constexpr XY operator+(XY a, XY b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr XY operator-(XY a, XY b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr XY operator-(XY a) { return {-a.x, -a.y}; }
  friend constexpr XY operator*(double s, XY a) { return {s * a.x, s * a.y}; }
  friend constexpr XY operator*(XY a, double s) { return {s * a.x, s * a.y}; }
  constexpr XY& operator+=(XY b) {
    x += b.x;
    y += b.y;
    return *this;
  }
  friend constexpr bool operator==(XY a, XY b) = default;
};

/// Components in a device-local rotating frame.
struct DQ {
  double d = 0.0;
  double q = 0.0;
  friend constexpr bool operator==(DQ a, DQ b) = default;
};

inline bool is_finite(XY v) { return std::isfinite(v.x) && std::isfinite(v.y); }

inline double angle(XY v) { return std::atan2(v.y, v.x); }

inline double magnitude(XY v) { return std::hypot(v.x, v.y); }

/// Projects a common-frame vector onto a local frame whose d-axis leads the
/// x-axis by `delta`.
inline DQ xy_to_dq(XY v, double delta) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  return {v.x * c + v.y * s, -v.x * s + v.y * c};
}

/// Inverse of xy_to_dq.
inline XY dq_to_xy(DQ v, double delta) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  return {v.d * c - v.q * s, v.d * s + v.q * c};
}

}  // namespace kronsim
