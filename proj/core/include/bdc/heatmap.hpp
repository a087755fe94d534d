#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bdc/geometry.hpp"

namespace bdc {

/// Dense H x W grid of 32-bit reals, row-major.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), values(h * w, fill) {}

  float& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }

  friend bool operator==(const Plane&, const Plane&) = default;
};

/// Dense C x H x W grid of 32-bit reals, row-major (channel, then y, then x).
class ClassGrid {
 public:
  ClassGrid() = default;
  ClassGrid(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  GridDims dims() const { return {height_, width_}; }
  std::size_t size() const { return data_.size(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) { return data_[index(c, y, x)]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return data_[index(c, y, x)]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  Plane plane(std::size_t c) const;

  bool same_shape(const ClassGrid& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const ClassGrid&, const ClassGrid&) = default;

 private:
  std::size_t index(std::size_t c, std::size_t y, std::size_t x) const {
    return (c * height_ + y) * width_ + x;
  }

  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

enum class Corner { top_left, bottom_right };

/// Top-left and bottom-right corner confidence maps sharing one shape and
/// stride. Every value lies in [0, 1]; the constructor enforces both.
class CornerHeatmap {
 public:
  CornerHeatmap() = default;
  CornerHeatmap(ClassGrid tl, ClassGrid br, double stride);

  /// All-zero heatmap pair.
  static CornerHeatmap zeros(std::size_t channels, std::size_t height, std::size_t width,
                             double stride);

  const ClassGrid& tl() const { return tl_; }
  const ClassGrid& br() const { return br_; }
  const ClassGrid& map(Corner which) const { return which == Corner::top_left ? tl_ : br_; }
  double stride() const { return stride_; }
  std::size_t channels() const { return tl_.channels(); }
  GridDims dims() const { return tl_.dims(); }

  friend bool operator==(const CornerHeatmap&, const CornerHeatmap&) = default;

 private:
  ClassGrid tl_;
  ClassGrid br_;
  double stride_ = 1.0;
};

struct GaussianConfig {
  double min_overlap = 0.3;
  double sigma_divisor = 6.0;
};

struct FocalConfig {
  double alpha = 2.0;
  double beta = 4.0;
};

/// Predictions are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-6;

struct ClassBox {
  std::size_t class_id = 0;
  BBox box;
};

/// Largest corner displacement (in grid cells) that keeps IoU with the
/// original box at or above min_overlap. Minimum over the translated,
/// shrunk and grown cases; never negative.
double gaussian_radius(double box_w, double box_h, double min_overlap);

/// Gaussian sigma used for a splat of the given radius.
double gaussian_sigma(double radius, double sigma_divisor);

/// Ground-truth corner targets. Each box contributes an unnormalized Gaussian
/// (peak exactly 1) around its corner cell on its class channel; overlapping
/// splats merge by element-wise max.
CornerHeatmap encode_corner_heatmaps(std::span<const ClassBox> gts, std::size_t channels,
                                     GridDims dims, double stride, const GaussianConfig& cfg = {});

enum class PoolDirection { top, left, bottom, right };

/// Directional running max. top: max over rows at or below; bottom: rows at
/// or above; left: columns at or to the right; right: columns at or to the left.
Plane corner_pool(const Plane& grid, PoolDirection direction);

/// Positives-normalized corner focal loss over flat aligned arrays.
/// Cells with target exactly 1 are positives.
double corner_focal_loss(std::span<const double> pred, std::span<const double> target,
                         const FocalConfig& cfg = {});

/// d(loss)/d(pred) for every cell; zero where the prediction is clamped.
std::vector<double> corner_focal_loss_gradient(std::span<const double> pred,
                                               std::span<const double> target,
                                               const FocalConfig& cfg = {});

/// Loss summed over both corner maps with a shared positive count.
double corner_focal_loss(const CornerHeatmap& pred, const CornerHeatmap& target,
                         const FocalConfig& cfg = {});

/// Value of the selected map at the cell containing p.
double lookup(const CornerHeatmap& hm, Corner which, std::size_t class_id, Point p);

}  // namespace bdc
