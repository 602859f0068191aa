#pragma once

namespace csot {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Size2 {
  double width = 0.0;
  double height = 0.0;
};

/// Axis-aligned box, 0-based pixel coordinates of the top-left corner.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point2 center() const noexcept { return {x + w / 2.0, y + h / 2.0}; }
  static Box around(Point2 c, Size2 s) noexcept { return {c.x - s.width / 2.0, c.y - s.height / 2.0, s.width, s.height}; }
};

}  // namespace csot
