#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "crackseg/raster.hpp"

namespace crackseg {

struct Range {
  double lo = 1.0;
  double hi = 1.0;
};

/// Training-time augmentation. Defaults are the values used for the crack
/// patch datasets.
struct AugmentationConfig {
  double flip_prob = 0.5;                        // each of horizontal / vertical
  std::vector<int> rotation_choices = {0, 90, 180, 270};
  Range brightness = {0.75, 1.25};
  Range contrast = {0.75, 1.25};
  Range saturation = {0.75, 1.25};
  Range hue = {-0.10, 0.10};                     // fraction of a full turn
  double noise_prob = 0.5;
  Range noise_factor = {0.9, 1.1};
  double geometric_prob = 0.4;
  Range reduce_scale = {0.75, 1.25};
  Range zoom_scale = {0.75, 1.00};
  std::optional<int> random_crop_size;           // unconstrained crop, CFD style

  /// All probabilities zero and every range the identity.
  static AugmentationConfig identity();
  void validate() const;
};

/// Applies the configured augmentation. Spatial steps hit both patch and
/// mask (mask resampled nearest-neighbour), photometric steps only the
/// patch. Output values are clamped to [0, 1].
std::pair<RasterImage, BinaryMask> augment(const RasterImage& patch, const BinaryMask& mask,
                                           const AugmentationConfig& cfg, std::uint64_t seed);

// Building blocks, exposed for tests and tooling.
template <typename Scalar>
PlaneT<Scalar> rotate90(const PlaneT<Scalar>& p, int quarter_turns);
Plane resize_bilinear(const Plane& p, int width, int height);
MaskPlane resize_nearest(const MaskPlane& p, int width, int height);
template <typename Scalar>
PlaneT<Scalar> mirror_pad_to(const PlaneT<Scalar>& p, int width, int height);
/// Hue rotation by `turns` of the colour wheel (RGB only).
RasterImage shift_hue(const RasterImage& image, double turns);

}  // namespace crackseg
