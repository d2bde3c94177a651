#include "scene_informer/geometry.hpp"

#include <algorithm>
#include <limits>

namespace scene_informer {

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 f = unit_vector(heading) * (0.5 * length);
  const Vec2 l = unit_vector(heading + std::numbers::pi / 2.0) * (0.5 * width);
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

bool OrientedBox::contains(Vec2 p) const {
  const Vec2 q = to_local(p);
  return std::abs(q.x) <= 0.5 * length && std::abs(q.y) <= 0.5 * width;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {unit_vector(a.heading), unit_vector(a.heading + std::numbers::pi / 2.0),
                                    unit_vector(b.heading), unit_vector(b.heading + std::numbers::pi / 2.0)};
  for (const Vec2 axis : axes) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const Vec2 c : ca) {
      amin = std::min(amin, dot(c, axis));
      amax = std::max(amax, dot(c, axis));
    }
    for (const Vec2 c : cb) {
      bmin = std::min(bmin, dot(c, axis));
      bmax = std::max(bmax, dot(c, axis));
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

double signed_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * twice;
}

bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool segments_cross(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool polygon_is_simple(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

double point_polyline_distance(Vec2 p, std::span<const Vec2> polyline) {
  if (polyline.size() == 1) return distance(p, polyline[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    best = std::min(best, point_segment_distance(p, polyline[i], polyline[i + 1]));
  }
  return best;
}

}  // namespace scene_informer
