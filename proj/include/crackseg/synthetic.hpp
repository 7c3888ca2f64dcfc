#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "crackseg/raster.hpp"

namespace crackseg {

/// Generative model of a test image: one curved dark crack of varying width,
/// straight dark distractor lines crossing it, smooth background shading and
/// additive Gaussian noise.
struct SyntheticParams {
  int width = 512;
  int height = 512;
  double min_width = 3.0, max_width = 9.0;   // crack width range, pixels
  double amplitude_min = 10.0, amplitude_max = 35.0;  // sideways swing of the curve
  double cycles_min = 0.5, cycles_max = 1.5;
  double crack_contrast = 0.35;
  int n_distractors = 2;
  double distractor_width_min = 2.0, distractor_width_max = 4.0;
  double distractor_contrast_min = 0.6, distractor_contrast_max = 1.0;  // relative to the crack
  double noise_sigma = 0.03;
  double background = 0.6;
  int margin = 24;  // endpoints stay this far from the border
  int supersample = 5;  // odd; pixel coverage is estimated on this sub-grid
};

struct SyntheticCrack {
  RasterImage image;       // grayscale
  BinaryMask mask;         // pixel centres within width/2 of the centreline
  std::vector<Eigen::Vector2d> centreline;  // dense samples, endpoint A first
  std::vector<double> widths;               // crack width at each sample
  PixelPos a, b;           // rounded centreline endpoints
};

SyntheticCrack make_synthetic_crack(const SyntheticParams& params, std::uint64_t seed);

/// Distance from `p` to the polyline.
double distance_to_polyline(const std::vector<Eigen::Vector2d>& line, const Eigen::Vector2d& p);

/// Root-mean-square of distance_to_polyline over the points.
double polyline_rmse(const std::vector<Eigen::Vector2d>& points, const std::vector<Eigen::Vector2d>& reference);

}  // namespace crackseg
