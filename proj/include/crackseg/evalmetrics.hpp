#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "crackseg/raster.hpp"

namespace crackseg {

struct CountTally {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  CountTally& operator+=(const CountTally& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend CountTally operator+(CountTally a, const CountTally& b) { return a += b; }
  friend bool operator==(const CountTally&, const CountTally&) = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ImageEval {
  std::string image_id;
  CountTally tally;
  Metrics metrics;
};

struct EvalReport {
  double tolerance = 0.0;
  double threshold = 0.5;
  std::vector<ImageEval> per_image;
  CountTally aggregate;
  Metrics aggregate_metrics;
};

/// pixel = 1 iff value > threshold; threshold must lie in (0, 1).
BinaryMask binarize(const ProbabilityMap& map, double threshold = 0.5);

/// Exact squared Euclidean distance to the nearest set pixel; +inf
/// everywhere when the mask is empty.
Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> squared_distance_transform(const MaskPlane& mask);

/// Predicted crack pixels within `tolerance` (Euclidean) of a ground-truth
/// crack pixel are not false positives; ground-truth pixels within
/// `tolerance` of a prediction are not false negatives. tp = |pred| - fp.
CountTally tally_with_tolerance(const BinaryMask& pred, const BinaryMask& gt, double tolerance = 0.0);

/// Degenerate conventions: no predicted pixels -> precision 1; no
/// ground-truth pixels matched -> recall 0; tp = 0 -> F1 = 0.
Metrics metrics_from_tally(const CountTally& t);

struct EvalPair {
  ProbabilityMap prediction;
  BinaryMask ground_truth;
  std::string image_id;
};

EvalReport evaluate_dataset(const std::vector<EvalPair>& pairs, double tolerance = 0.0, double threshold = 0.5);

/// Prediction callback for one patch; `origin` is the patch's top-left
/// corner in the full image.
using PatchPredictor = std::function<ProbabilityMap(const RasterImage& patch, PixelPos origin)>;

struct FullImageEval {
  ImageEval entry;
  ProbabilityMap stitched;
};

FullImageEval evaluate_full_image(const RasterImage& image, const BinaryMask& gt, const PatchPredictor& predict_patch,
                                  int patch_size, double tolerance = 0.0, double threshold = 0.5,
                                  const std::string& image_id = {});

// {tolerance, threshold, aggregate:{tp,fp,fn,pr,re,f1}, per_image:[...]}
std::string report_to_json(const EvalReport& report, int indent = 2);
/// Plain-text table: one row per image plus the aggregate row.
std::string report_to_table(const EvalReport& report);

}  // namespace crackseg
