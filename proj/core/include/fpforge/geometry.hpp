#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace fpforge {

// Planar location in projected meters (x = longitude, y = latitude).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct BoundingBox {
  Point min;
  Point max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
};

// Axis-aligned bounds of a non-empty point set.
BoundingBox bounding_box(std::span<const Point> points);

// Area of the convex hull (monotone chain). Fewer than three distinct
// non-collinear points give zero.
double convex_hull_area(std::span<const Point> points);

}  // namespace fpforge
