#pragma once

#include <string>
#include <vector>

#include "crackseg/geodesic.hpp"
#include "crackseg/raster.hpp"

namespace crackseg {

struct WidthParams {
  double sigma = 2.0;      // scale of the Gaussian-derivative edge filter, pixels
  int max_width = 32;      // largest offset searched on either side, pixels
  double step_penalty = 0.05;  // cost of moving the edge by one pixel between vertices
  bool bias_correction = true; // undo the outward shift of edges on narrow bars

  void validate() const;
};

/// Perpendicular unit vector on the +offset ("right") side of a track
/// travelling in direction theta: (-sin theta, cos theta).
Eigen::Vector2d track_normal(double theta);

struct EdgeProfile {
  std::vector<double> values;  // offsets -max_width .. +max_width
  bool truncated = false;      // part of the sampling line left the image
  double at(int offset) const { return values[static_cast<std::size_t>(offset + (int(values.size()) - 1) / 2)]; }
};

/// Gaussian first-derivative response along the perpendicular through
/// (x, y), sampled at unit steps; positive where the image brightens towards
/// +normal. Unit gain on a linear ramp.
EdgeProfile edge_response(const Plane& image, double x, double y, double theta, double sigma, int max_width);

struct WidthProfile {
  std::vector<double> s;      // arc length at each vertex
  std::vector<double> left;   // offset of the edge on the -normal side, >= 0
  std::vector<double> right;  // offset on the +normal side, >= 0
  std::vector<bool> low_confidence;
  std::vector<bool> truncated;

  std::size_t size() const { return left.size(); }
  double width(std::size_t i) const { return left[i] + right[i]; }
};

/// Edge offsets on both sides of the track, each side chained as a minimal
/// path over (vertex, offset) where strong edges are cheap.
WidthProfile extract_widths(const Plane& image, const std::vector<TrackVertex>& track, const WidthParams& params = {});

/// Peak offset of the Gaussian-derivative response of an ideal bar with the
/// given half-width (>= half_width, -> sigma as half_width -> 0).
double bar_edge_peak(double half_width, double sigma);
/// Inverse of bar_edge_peak; 0 for peaks at or below sigma.
double bar_half_width_from_peak(double peak, double sigma);

/// Union of the quadrilaterals between consecutive vertices plus the
/// 8-connected centre polyline.
BinaryMask rasterize_mask(const std::vector<TrackVertex>& track, const WidthProfile& widths, int width, int height);

/// Overrides sigma, max_width, step_penalty, bias_correction from a JSON
/// object; unknown keys are rejected.
WidthParams width_params_from_json(const std::string& text, WidthParams base = {});

// [{s, left, right, width, low_confidence}, ...]
std::string widths_to_json(const WidthProfile& widths, int indent = 2);

}  // namespace crackseg
