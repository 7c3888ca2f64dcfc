#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "crackseg/error.hpp"

namespace crackseg {

/// Row-major pixel plane: rows = height, cols = width, indexed (y, x).
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;
using MaskPlane = PlaneT<std::uint8_t>;

struct PixelPos {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPos&, const PixelPos&) = default;
  friend auto operator<=>(const PixelPos&, const PixelPos&) = default;
};

/// Image with 1 or 3 channels stored as separate planes, values in [0, 1].
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels);
  explicit RasterImage(Plane gray);
  explicit RasterImage(std::vector<Plane> planes);

  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty() || planes_[0].size() == 0; }

  const Plane& channel(int c) const { return planes_.at(static_cast<std::size_t>(c)); }
  Plane& channel(int c) { return planes_.at(static_cast<std::size_t>(c)); }
  const std::vector<Plane>& planes() const { return planes_; }

  /// Rec. 601 luma for RGB, identity for grayscale.
  Plane luma() const;

  /// Clamp every value into [0, 1].
  void clamp();

  friend bool operator==(const RasterImage& a, const RasterImage& b);

 private:
  std::vector<Plane> planes_;
};

/// Soft predictions in [0, 1].
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  ProbabilityMap(int width, int height, double fill = 0.0);
  /// Throws std::invalid_argument when any value lies outside [0, 1].
  explicit ProbabilityMap(Plane values);

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }
  const Plane& values() const { return values_; }
  double operator()(int y, int x) const { return values_(y, x); }

  friend bool operator==(const ProbabilityMap& a, const ProbabilityMap& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           (a.values_ == b.values_).all();
  }

 private:
  Plane values_;
};

/// Hard labels, 1 = crack, 0 = background.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);
  /// Throws std::invalid_argument when any value is not 0 or 1.
  explicit BinaryMask(MaskPlane values);

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }
  const MaskPlane& values() const { return values_; }
  std::uint8_t operator()(int y, int x) const { return values_(y, x); }
  void set(int y, int x, bool on) { values_(y, x) = on ? 1 : 0; }

  std::int64_t count() const;
  /// Values as doubles, convenient for loss expressions.
  Plane as_plane() const { return values_.cast<double>(); }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           (a.values_ == b.values_).all();
  }

 private:
  MaskPlane values_;
};

/// Square-patch decomposition of an image. Origins are in row-major scan
/// order (top row first, left to right).
struct PatchGrid {
  int patch_size = 0;
  int cols = 0;
  int rows = 0;
  std::vector<PixelPos> origins;

  int width() const;
  int height() const;
  std::size_t size() const { return origins.size(); }
  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

/// Non-overlapping tiling where only the final row / column is shifted
/// inward to stay inside the image.
PatchGrid split_into_patches(int width, int height, int patch_size);

// {patch_size, cols, rows, origins: [[x, y], ...]}
std::string grid_to_json(const PatchGrid& grid);

RasterImage extract_patch(const RasterImage& image, PixelPos origin, int patch_size);
BinaryMask extract_patch(const BinaryMask& mask, PixelPos origin, int patch_size);
ProbabilityMap extract_patch(const ProbabilityMap& map, PixelPos origin, int patch_size);

/// Writes `patch` into `image` at `origin`; the rectangle must fit.
void insert_patch(RasterImage& image, const RasterImage& patch, PixelPos origin);

/// Reassembles per-patch maps; later patches in scan order overwrite
/// earlier ones in overlap regions.
ProbabilityMap stitch_predictions(const PatchGrid& grid, const std::vector<ProbabilityMap>& patch_maps);

}  // namespace crackseg
