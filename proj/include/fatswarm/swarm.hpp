#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace fatswarm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

struct Disk {
  Vec2 center;
  double radius = 1.0;
};

/// World and robot constants shared by the geometry and the MDP.
///
/// `r_scan` may be +infinity for an unbounded sensing range.
struct SwarmConfig {
  std::size_t n = 4;
  double r_bot = 1.0;
  double r_scan = 6.0;
  double delta_s = 3.0;
  double x_w = 20.0;
  double y_w = 20.0;
  double v_min = -0.5;
  double v_max = 0.5;
  double dt = 1.0;

  static constexpr double unbounded = std::numeric_limits<double>::infinity();

  /// Throws Error(InvalidArgument) when an invariant is broken.
  void validate() const;
};

/// Robot centers at one time step (the MDP state).
struct SwarmState {
  std::vector<Vec2> positions;
  std::size_t step_index = 0;

  std::size_t size() const { return positions.size(); }
  Disk disk(std::size_t i, double r_bot) const { return {positions[i], r_bot}; }
  friend bool operator==(const SwarmState&, const SwarmState&) = default;
};

}  // namespace fatswarm
