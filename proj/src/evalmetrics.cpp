#include "crackseg/evalmetrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace crackseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform by lower envelope of parabolas
// (Felzenszwalb & Huttenlocher). `f` holds 0 / +inf / partial results.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[q] = double(q - p) * (q - p) + f[p];
  }
}

void check_shapes(const BinaryMask& a, const BinaryMask& b, const std::string& what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(what + ": prediction is " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     ", ground truth is " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

nlohmann::json tally_json(const CountTally& t, const Metrics& m) {
  return {{"tp", t.tp}, {"fp", t.fp}, {"fn", t.fn}, {"pr", m.precision}, {"re", m.recall}, {"f1", m.f1}};
}

}  // namespace

BinaryMask binarize(const ProbabilityMap& map, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("binarize: threshold " + std::to_string(threshold) + " outside (0, 1)");
  }
  return BinaryMask(MaskPlane((map.values() > threshold).cast<std::uint8_t>()));
}

Plane squared_distance_transform(const MaskPlane& mask) {
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  Plane d(h, w);
  for (Eigen::Index i = 0; i < mask.size(); ++i) d.data()[i] = mask.data()[i] ? 0.0 : kInf;
  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = d(y, x);
    edt_1d(f.data(), out.data(), h, v, z);
    for (int y = 0; y < h; ++y) d(y, x) = out[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = d(y, x);
    edt_1d(f.data(), out.data(), w, v, z);
    for (int x = 0; x < w; ++x) d(y, x) = out[static_cast<std::size_t>(x)];
  }
  return d;
}

CountTally tally_with_tolerance(const BinaryMask& pred, const BinaryMask& gt, double tolerance) {
  check_shapes(pred, gt, "tally_with_tolerance");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tally_with_tolerance: negative tolerance");
  CountTally t;
  if (tolerance == 0.0) {
    const auto& p = pred.values();
    const auto& g = gt.values();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const bool a = p.data()[i], b = g.data()[i];
      t.tp += a && b;
      t.fp += a && !b;
      t.fn += !a && b;
    }
    return t;
  }
  const double t2 = tolerance * tolerance;
  const Plane to_gt = squared_distance_transform(gt.values());
  const Plane to_pred = squared_distance_transform(pred.values());
  std::int64_t npred = 0;
  for (Eigen::Index i = 0; i < to_gt.size(); ++i) {
    if (pred.values().data()[i]) {
      ++npred;
      t.fp += to_gt.data()[i] > t2;
    }
    if (gt.values().data()[i]) t.fn += to_pred.data()[i] > t2;
  }
  t.tp = npred - t.fp;
  return t;
}

Metrics metrics_from_tally(const CountTally& t) {
  Metrics m;
  m.precision = (t.tp + t.fp) == 0 ? 1.0 : double(t.tp) / double(t.tp + t.fp);
  m.recall = (t.tp + t.fn) == 0 ? 0.0 : double(t.tp) / double(t.tp + t.fn);
  m.f1 = t.tp == 0 ? 0.0 : 2.0 * double(t.tp) / double(2 * t.tp + t.fp + t.fn);
  return m;
}

EvalReport evaluate_dataset(const std::vector<EvalPair>& pairs, double tolerance, double threshold) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_dataset: no image pairs");
  EvalReport r;
  r.tolerance = tolerance;
  r.threshold = threshold;
  for (const auto& p : pairs) {
    const BinaryMask pred = binarize(p.prediction, threshold);
    if (pred.width() != p.ground_truth.width() || pred.height() != p.ground_truth.height()) {
      throw ShapeError("evaluate_dataset: image '" + p.image_id + "' prediction and ground truth differ in shape");
    }
    ImageEval e{p.image_id, tally_with_tolerance(pred, p.ground_truth, tolerance), {}};
    e.metrics = metrics_from_tally(e.tally);
    r.aggregate += e.tally;
    r.per_image.push_back(std::move(e));
  }
  r.aggregate_metrics = metrics_from_tally(r.aggregate);
  return r;
}

FullImageEval evaluate_full_image(const RasterImage& image, const BinaryMask& gt, const PatchPredictor& predict_patch,
                                  int patch_size, double tolerance, double threshold, const std::string& image_id) {
  if (image.width() != gt.width() || image.height() != gt.height()) {
    throw ShapeError("evaluate_full_image: image and ground truth differ in shape");
  }
  const PatchGrid grid = split_into_patches(image.width(), image.height(), patch_size);
  std::vector<ProbabilityMap> maps;
  maps.reserve(grid.size());
  for (const auto& o : grid.origins) {
    try {
      maps.push_back(predict_patch(extract_patch(image, o, patch_size), o));
    } catch (const std::exception& e) {
      throw std::runtime_error("patch prediction failed at origin (" + std::to_string(o.x) + ", " +
                               std::to_string(o.y) + "): " + e.what());
    }
  }
  FullImageEval out{{}, stitch_predictions(grid, maps)};
  out.entry.image_id = image_id;
  out.entry.tally = tally_with_tolerance(binarize(out.stitched, threshold), gt, tolerance);
  out.entry.metrics = metrics_from_tally(out.entry.tally);
  return out;
}

std::string report_to_json(const EvalReport& r, int indent) {
  nlohmann::json j;
  j["tolerance"] = r.tolerance;
  j["threshold"] = r.threshold;
  j["aggregate"] = tally_json(r.aggregate, r.aggregate_metrics);
  j["per_image"] = nlohmann::json::array();
  for (const auto& e : r.per_image) {
    auto row = tally_json(e.tally, e.metrics);
    row["image_id"] = e.image_id;
    j["per_image"].push_back(row);
  }
  return j.dump(indent);
}

std::string report_to_table(const EvalReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "tolerance %g px, threshold %g\n", r.tolerance, r.threshold);
  os << line;
  std::snprintf(line, sizeof line, "%-28s %10s %10s %10s %8s %8s %8s\n", "image", "TP", "FP", "FN", "Pr", "Re",
                "F1");
  os << line;
  auto row = [&](const std::string& id, const CountTally& t, const Metrics& m) {
    std::snprintf(line, sizeof line, "%-28s %10lld %10lld %10lld %8.2f %8.2f %8.2f\n", id.substr(0, 28).c_str(),
                  static_cast<long long>(t.tp), static_cast<long long>(t.fp), static_cast<long long>(t.fn),
                  100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1);
    os << line;
  };
  for (const auto& e : r.per_image) row(e.image_id, e.tally, e.metrics);
  row("aggregate", r.aggregate, r.aggregate_metrics);
  return os.str();
}

}  // namespace crackseg
