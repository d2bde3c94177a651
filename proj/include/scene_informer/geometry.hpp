#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace scene_informer {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}
inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Maps any angle into (-pi, pi].
double wrap_angle(double angle);

// Rigid 2-D transform p -> R(rotation) p + translation.
struct Rigid2 {
  double rotation = 0.0;
  Vec2 translation;

  Vec2 apply(Vec2 p) const { return rotate(p, rotation) + translation; }
  Vec2 apply_vector(Vec2 v) const { return rotate(v, rotation); }
  double apply_heading(double heading) const { return wrap_angle(heading + rotation); }
  Rigid2 inverse() const { return {-rotation, rotate(Vec2{-translation.x, -translation.y}, -rotation)}; }

  // Transform that maps `origin` to (0,0) and `heading` to 0.
  static Rigid2 to_local(Vec2 origin, double heading) {
    return {-heading, rotate(Vec2{-origin.x, -origin.y}, -heading)};
  }
};

// Oriented rectangle: center, heading of the length axis, full length and width.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  // Counterclockwise corners starting at front-left.
  std::array<Vec2, 4> corners() const;
  Vec2 to_local(Vec2 p) const { return rotate(p - center, -heading); }
  bool contains(Vec2 p) const;
};

// Separating-axis overlap test for two oriented boxes.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

// Shoelace signed area; positive for counterclockwise vertex order.
double signed_area(std::span<const Vec2> polygon);

// Even-odd crossing test; boundary points are unspecified.
bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p);

// True when the closed segments [a0,a1] and [b0,b1] properly cross (shared
// endpoints and collinear overlaps count as non-crossing).
bool segments_cross(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);

// True when no two non-adjacent edges of the closed polygon cross.
bool polygon_is_simple(std::span<const Vec2> polygon);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
double point_polyline_distance(Vec2 p, std::span<const Vec2> polyline);

}  // namespace scene_informer
