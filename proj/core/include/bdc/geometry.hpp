#pragma once

#include <cstddef>

namespace bdc {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in image pixels, corner-pair form.
/// (x1, y1) is the top-left corner, (x2, y2) the bottom-right one.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  constexpr double width() const { return x2 - x1; }
  constexpr double height() const { return y2 - y1; }
  constexpr double area() const { return width() * height(); }
  constexpr Point top_left() const { return {x1, y1}; }
  constexpr Point bottom_right() const { return {x2, y2}; }

  /// Finite coordinates with x1 <= x2 and y1 <= y2.
  bool valid() const;
  /// valid() and strictly positive area.
  bool non_degenerate() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Intersection over union. Two boxes with zero union yield 0.
double iou(const BBox& a, const BBox& b);

struct GridDims {
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct GridCell {
  std::size_t cx = 0;
  std::size_t cy = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Maps an image point onto the cell that contains it. Points outside the
/// image clamp to the border cell. Requires stride > 0 and non-empty dims.
GridCell image_to_grid(Point p, double stride, GridDims dims);

}  // namespace bdc
