#include "bdc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdc {

bool BBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 <= x2 && y1 <= y2;
}

bool BBox::non_degenerate() const { return valid() && x1 < x2 && y1 < y2; }

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

std::size_t to_cell(double coord, double stride, std::size_t extent) {
  const double f = std::floor(coord / stride);
  if (!(f > 0.0)) return 0;  // also catches NaN
  const auto last = static_cast<double>(extent - 1);
  if (f >= last) return extent - 1;
  return static_cast<std::size_t>(f);
}

}  // namespace

GridCell image_to_grid(Point p, double stride, GridDims dims) {
  if (!(stride > 0.0) || dims.height == 0 || dims.width == 0) {
    throw std::invalid_argument("image_to_grid: stride must be positive and dims non-empty");
  }
  return {to_cell(p.x, stride, dims.width), to_cell(p.y, stride, dims.height)};
}

}  // namespace bdc
