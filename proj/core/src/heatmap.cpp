#include "bdc/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bdc {

ClassGrid::ClassGrid(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

Plane ClassGrid::plane(std::size_t c) const {
  if (c >= channels_) throw std::out_of_range("ClassGrid::plane: channel out of range");
  Plane out(height_, width_);
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(c * height_ * width_);
  std::copy(first, first + static_cast<std::ptrdiff_t>(height_ * width_), out.values.begin());
  return out;
}

CornerHeatmap::CornerHeatmap(ClassGrid tl, ClassGrid br, double stride)
    : tl_(std::move(tl)), br_(std::move(br)), stride_(stride) {
  if (!tl_.same_shape(br_)) throw std::invalid_argument("CornerHeatmap: tl/br shape mismatch");
  if (!(stride_ > 0.0) || !std::isfinite(stride_)) {
    throw std::invalid_argument("CornerHeatmap: stride must be positive");
  }
  for (const auto* g : {&tl_, &br_}) {
    for (float v : g->values()) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw std::invalid_argument("CornerHeatmap: value outside [0,1]");
      }
    }
  }
}

CornerHeatmap CornerHeatmap::zeros(std::size_t channels, std::size_t height, std::size_t width,
                                   double stride) {
  return {ClassGrid(channels, height, width), ClassGrid(channels, height, width), stride};
}

double gaussian_radius(double box_w, double box_h, double min_overlap) {
  if (!(box_w > 0.0) || !(box_h > 0.0) || !(min_overlap > 0.0 && min_overlap < 1.0)) {
    throw std::invalid_argument("gaussian_radius: need positive box and min_overlap in (0,1)");
  }
  const double wh = box_w * box_h;
  const double sum = box_w + box_h;

  // One corner inside, one outside: the box is translated by r on both axes.
  const double c1 = wh * (1.0 - min_overlap) / (1.0 + min_overlap);
  const double r1 = (sum - std::sqrt(std::max(0.0, sum * sum - 4.0 * c1))) / 2.0;

  // Both corners move inward.
  const double b2 = 2.0 * sum;
  const double c2 = (1.0 - min_overlap) * wh;
  const double r2 = (b2 - std::sqrt(std::max(0.0, b2 * b2 - 16.0 * c2))) / 8.0;

  // Both corners move outward.
  const double a3 = 4.0 * min_overlap;
  const double b3 = 2.0 * min_overlap * sum;
  const double c3 = (min_overlap - 1.0) * wh;
  const double r3 = (-b3 + std::sqrt(std::max(0.0, b3 * b3 - 4.0 * a3 * c3))) / (2.0 * a3);

  return std::max(0.0, std::min({r1, r2, r3}));
}

double gaussian_sigma(double radius, double sigma_divisor) {
  return (2.0 * radius + 1.0) / sigma_divisor;
}

namespace {

void splat(ClassGrid& grid, std::size_t c, GridCell center, double radius, double sigma) {
  const auto reach = static_cast<long long>(std::floor(radius));
  const auto cx = static_cast<long long>(center.cx);
  const auto cy = static_cast<long long>(center.cy);
  const auto w = static_cast<long long>(grid.width());
  const auto h = static_cast<long long>(grid.height());
  const double r2 = radius * radius;
  const double denom = 2.0 * sigma * sigma;
  for (long long dy = -reach; dy <= reach; ++dy) {
    const long long y = cy + dy;
    if (y < 0 || y >= h) continue;
    for (long long dx = -reach; dx <= reach; ++dx) {
      const long long x = cx + dx;
      if (x < 0 || x >= w) continue;
      const auto d2 = static_cast<double>(dx * dx + dy * dy);
      if (d2 > r2) continue;
      const auto v = static_cast<float>(std::exp(-d2 / denom));
      float& cell = grid.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      cell = std::max(cell, v);
    }
  }
}

}  // namespace

CornerHeatmap encode_corner_heatmaps(std::span<const ClassBox> gts, std::size_t channels,
                                     GridDims dims, double stride, const GaussianConfig& cfg) {
  if (!(cfg.min_overlap > 0.0 && cfg.min_overlap < 1.0) || !(cfg.sigma_divisor > 0.0)) {
    throw std::invalid_argument("encode_corner_heatmaps: invalid GaussianConfig");
  }
  if (!(stride > 0.0) || dims.height == 0 || dims.width == 0) {
    throw std::invalid_argument("encode_corner_heatmaps: stride must be positive and dims non-empty");
  }
  ClassGrid tl(channels, dims.height, dims.width);
  ClassGrid br(channels, dims.height, dims.width);
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const ClassBox& gt = gts[i];
    if (gt.class_id >= channels) {
      throw std::invalid_argument("encode_corner_heatmaps: gt " + std::to_string(i) +
                                  " has class " + std::to_string(gt.class_id) +
                                  " >= channels " + std::to_string(channels));
    }
    if (!gt.box.non_degenerate()) {
      throw std::invalid_argument("encode_corner_heatmaps: gt " + std::to_string(i) +
                                  " has non-positive area");
    }
    const double radius =
        gaussian_radius(gt.box.width() / stride, gt.box.height() / stride, cfg.min_overlap);
    const double sigma = gaussian_sigma(radius, cfg.sigma_divisor);
    splat(tl, gt.class_id, image_to_grid(gt.box.top_left(), stride, dims), radius, sigma);
    splat(br, gt.class_id, image_to_grid(gt.box.bottom_right(), stride, dims), radius, sigma);
  }
  return {std::move(tl), std::move(br), stride};
}

Plane corner_pool(const Plane& grid, PoolDirection direction) {
  if (grid.height == 0 || grid.width == 0 || grid.values.size() != grid.height * grid.width) {
    throw std::invalid_argument("corner_pool: grid must be non-empty and consistent");
  }
  Plane out = grid;
  const std::size_t h = grid.height;
  const std::size_t w = grid.width;
  switch (direction) {
    case PoolDirection::top:
      for (std::size_t y = h - 1; y-- > 0;)
        for (std::size_t x = 0; x < w; ++x) out.at(y, x) = std::max(out.at(y, x), out.at(y + 1, x));
      break;
    case PoolDirection::bottom:
      for (std::size_t y = 1; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.at(y, x) = std::max(out.at(y, x), out.at(y - 1, x));
      break;
    case PoolDirection::left:
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = w - 1; x-- > 0;) out.at(y, x) = std::max(out.at(y, x), out.at(y, x + 1));
      break;
    case PoolDirection::right:
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 1; x < w; ++x) out.at(y, x) = std::max(out.at(y, x), out.at(y, x - 1));
      break;
  }
  return out;
}

namespace {

void check_loss_inputs(std::span<const double> pred, std::span<const double> target,
                       const FocalConfig& cfg) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("corner_focal_loss: prediction/target shape mismatch");
  }
  if (!(cfg.alpha >= 0.0) || !(cfg.beta >= 0.0)) {
    throw std::invalid_argument("corner_focal_loss: alpha and beta must be non-negative");
  }
}

double positive_count(std::span<const double> target) {
  const auto n = std::count(target.begin(), target.end(), 1.0);
  return std::max<double>(1.0, static_cast<double>(n));
}

double clamp_prob(double m) { return std::clamp(m, kProbEpsilon, 1.0 - kProbEpsilon); }

}  // namespace

double corner_focal_loss(std::span<const double> pred, std::span<const double> target,
                         const FocalConfig& cfg) {
  check_loss_inputs(pred, target, cfg);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double m = clamp_prob(pred[i]);
    const double y = target[i];
    if (y == 1.0) {
      sum += std::pow(1.0 - m, cfg.alpha) * std::log(m);
    } else {
      sum += std::pow(1.0 - y, cfg.beta) * std::pow(m, cfg.alpha) * std::log1p(-m);
    }
  }
  return -sum / positive_count(target);
}

std::vector<double> corner_focal_loss_gradient(std::span<const double> pred,
                                               std::span<const double> target,
                                               const FocalConfig& cfg) {
  check_loss_inputs(pred, target, cfg);
  const double norm = positive_count(target);
  const double a = cfg.alpha;
  std::vector<double> grad(pred.size(), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double m = pred[i];
    if (m < kProbEpsilon || m > 1.0 - kProbEpsilon) continue;
    const double y = target[i];
    double d = 0.0;
    if (y == 1.0) {
      // d/dm (1-m)^a log m
      const double da = a == 0.0 ? 0.0 : -a * std::pow(1.0 - m, a - 1.0) * std::log(m);
      d = da + std::pow(1.0 - m, a) / m;
    } else {
      // d/dm (1-y)^b m^a log(1-m)
      const double da = a == 0.0 ? 0.0 : a * std::pow(m, a - 1.0) * std::log1p(-m);
      d = std::pow(1.0 - y, cfg.beta) * (da - std::pow(m, a) / (1.0 - m));
    }
    grad[i] = -d / norm;
  }
  return grad;
}

double corner_focal_loss(const CornerHeatmap& pred, const CornerHeatmap& target,
                         const FocalConfig& cfg) {
  if (!pred.tl().same_shape(target.tl())) {
    throw std::invalid_argument("corner_focal_loss: prediction/target shape mismatch");
  }
  std::vector<double> p;
  std::vector<double> t;
  p.reserve(2 * pred.tl().size());
  t.reserve(2 * pred.tl().size());
  for (Corner which : {Corner::top_left, Corner::bottom_right}) {
    for (float v : pred.map(which).values()) p.push_back(v);
    for (float v : target.map(which).values()) t.push_back(v);
  }
  return corner_focal_loss(p, t, cfg);
}

double lookup(const CornerHeatmap& hm, Corner which, std::size_t class_id, Point p) {
  if (class_id >= hm.channels()) {
    throw std::out_of_range("lookup: class " + std::to_string(class_id) + " >= channels " +
                            std::to_string(hm.channels()));
  }
  const GridCell cell = image_to_grid(p, hm.stride(), hm.dims());
  return hm.map(which).at(class_id, cell.cy, cell.cx);
}

}  // namespace bdc
