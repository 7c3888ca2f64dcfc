#include "crackseg/widthseg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace crackseg {
namespace {

double sample_clamped(const Plane& img, double x, double y, bool& outside) {
  const int w = static_cast<int>(img.cols()), h = static_cast<int>(img.rows());
  if (x < 0.0 || y < 0.0 || x > w - 1 || y > h - 1) outside = true;
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 1), y0 = std::min(static_cast<int>(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) + fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
}

double gauss(double t, double sigma) { return std::exp(-0.5 * t * t / (sigma * sigma)); }

// d/do of G(o - h) - G(o + h), unnormalised.
double bar_slope(double o, double h, double sigma) {
  return -(o - h) * gauss(o - h, sigma) + (o + h) * gauss(o + h, sigma);
}

// Sub-pixel position of the maximum at integer k of s (parabola through
// the neighbours).
double refine_peak(const std::vector<double>& s, int k) {
  if (k <= 0 || k + 1 >= static_cast<int>(s.size())) return k;
  const double a = s[k - 1], b = s[k], c = s[k + 1];
  const double den = a - 2.0 * b + c;
  if (!(den < 0.0)) return k;
  return k + std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

// Minimal chain over (vertex, offset), offsets moving by at most one pixel
// between neighbouring vertices.
std::vector<int> chain_edges(const std::vector<std::vector<double>>& cost, double step_penalty) {
  const std::size_t n = cost.size();
  const int m = static_cast<int>(cost[0].size());
  std::vector<std::vector<double>> acc(n, std::vector<double>(m));
  std::vector<std::vector<int>> from(n, std::vector<int>(m, 0));
  acc[0] = cost[0];
  for (std::size_t i = 1; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      double best = acc[i - 1][k];
      int arg = k;
      for (int d : {-1, 1}) {
        const int kk = k + d;
        if (kk < 0 || kk >= m) continue;
        const double v = acc[i - 1][kk] + step_penalty;
        if (v < best) best = v, arg = kk;
      }
      acc[i][k] = best + cost[i][k];
      from[i][k] = arg;
    }
  }
  std::vector<int> out(n);
  out[n - 1] = static_cast<int>(std::min_element(acc[n - 1].begin(), acc[n - 1].end()) - acc[n - 1].begin());
  for (std::size_t i = n - 1; i > 0; --i) out[i - 1] = from[i][out[i]];
  return out;
}

}  // namespace

void WidthParams::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (max_width < 1) throw std::invalid_argument("max_width must be >= 1");
  if (!(step_penalty >= 0.0)) throw std::invalid_argument("step_penalty must be >= 0");
}

Eigen::Vector2d track_normal(double theta) { return {-std::sin(theta), std::cos(theta)}; }

EdgeProfile edge_response(const Plane& image, double x, double y, double theta, double sigma, int max_width) {
  if (!(sigma > 0.0) || max_width < 0) throw std::invalid_argument("edge_response: sigma > 0 and max_width >= 0 required");
  if (image.size() == 0) throw std::invalid_argument("edge_response: empty image");
  const int r = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> w(2 * r + 1);
  double norm = 0.0;
  for (int k = -r; k <= r; ++k) {
    w[k + r] = k * gauss(k, sigma);
    norm += k * w[k + r];
  }
  for (double& v : w) v /= norm;

  const Eigen::Vector2d n = track_normal(theta);
  const int reach = max_width + r;
  std::vector<double> line(2 * reach + 1);
  EdgeProfile out;
  for (int k = -reach; k <= reach; ++k) line[k + reach] = sample_clamped(image, x + k * n.x(), y + k * n.y(), out.truncated);
  out.values.resize(2 * max_width + 1);
  for (int o = -max_width; o <= max_width; ++o) {
    double s = 0.0;
    for (int k = -r; k <= r; ++k) s += w[k + r] * line[o + k + reach];
    out.values[o + max_width] = s;
  }
  return out;
}

double bar_edge_peak(double half_width, double sigma) {
  if (half_width <= 0.0) return sigma;
  double lo = half_width, hi = half_width + 6.0 * sigma;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bar_slope(mid, half_width, sigma) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double bar_half_width_from_peak(double peak, double sigma) {
  if (peak <= sigma) return 0.0;
  double lo = 0.0, hi = peak;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bar_edge_peak(mid, sigma) < peak ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

WidthProfile extract_widths(const Plane& image, const std::vector<TrackVertex>& track, const WidthParams& P) {
  P.validate();
  if (track.empty()) throw std::invalid_argument("extract_widths: empty track");
  const std::size_t n = track.size();
  const int K = P.max_width;

  WidthProfile out;
  out.s.resize(n);
  out.left.assign(n, 0.0);
  out.right.assign(n, 0.0);
  out.low_confidence.assign(n, false);
  out.truncated.assign(n, false);
  for (std::size_t i = 1; i < n; ++i) {
    out.s[i] = out.s[i - 1] + std::hypot(track[i].x - track[i - 1].x, track[i].y - track[i - 1].y);
  }

  // Edge strength outward on each side: the image brightens leaving a dark
  // crack, so +normal wants positive response and -normal negative.
  std::vector<std::vector<double>> right(n, std::vector<double>(K + 1)), left = right;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const EdgeProfile e = edge_response(image, track[i].x, track[i].y, track[i].theta, P.sigma, K);
    out.truncated[i] = e.truncated;
    for (int k = 0; k <= K; ++k) {
      right[i][k] = std::max(0.0, e.at(k));
      left[i][k] = std::max(0.0, -e.at(-k));
      peak = std::max({peak, right[i][k], left[i][k]});
    }
  }
  if (peak < 1e-9) {
    out.low_confidence.assign(n, true);
    return out;
  }

  auto side = [&](const std::vector<std::vector<double>>& strength, std::vector<double>& offsets) {
    std::vector<std::vector<double>> cost(n, std::vector<double>(K + 1));
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k <= K; ++k) cost[i][k] = 1.0 - strength[i][k] / peak;
    const std::vector<int> chain = chain_edges(cost, P.step_penalty);
    for (std::size_t i = 0; i < n; ++i) {
      offsets[i] = refine_peak(strength[i], chain[i]);
      if (strength[i][chain[i]] < 0.1 * peak) out.low_confidence[i] = true;
    }
  };
  side(right, out.right);
  side(left, out.left);

  if (P.bias_correction) {
    // Blurred edges of a narrow bar peak outside the true boundary; undo it
    // on the total width and keep the measured centre shift.
    for (std::size_t i = 0; i < n; ++i) {
      const double half = bar_half_width_from_peak(0.5 * (out.left[i] + out.right[i]), P.sigma);
      const double shift = 0.5 * (out.right[i] - out.left[i]);
      out.left[i] = std::max(0.0, half - shift);
      out.right[i] = std::max(0.0, half + shift);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.left[i] = std::clamp(out.left[i], 0.0, double(K));
    out.right[i] = std::clamp(out.right[i], 0.0, double(K) - out.left[i]);
  }
  return out;
}

BinaryMask rasterize_mask(const std::vector<TrackVertex>& track, const WidthProfile& widths, int width, int height) {
  if (widths.left.size() != track.size() || widths.right.size() != track.size()) {
    throw std::invalid_argument("rasterize_mask: width profile and track lengths differ");
  }
  BinaryMask mask(width, height);
  auto put = [&](int x, int y) {
    if (x >= 0 && y >= 0 && x < width && y < height) mask.set(y, x, true);
  };

  using V = Eigen::Vector2d;
  auto cross = [](const V& a, const V& b) { return a.x() * b.y() - a.y() * b.x(); };
  auto fill_triangle = [&](const V& a, const V& b, const V& c) {
    const double area = cross(b - a, c - a);
    if (std::abs(area) < 1e-12) return;
    const double sgn = area > 0 ? 1.0 : -1.0;
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}) - 1e-9)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}) + 1e-9)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}) - 1e-9)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}) + 1e-9)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const V p(x, y);
        if (sgn * cross(b - a, p - a) >= -1e-9 && sgn * cross(c - b, p - b) >= -1e-9 &&
            sgn * cross(a - c, p - c) >= -1e-9)
          put(x, y);
      }
    }
  };

  for (std::size_t i = 0; i + 1 < track.size(); ++i) {
    const V p0(track[i].x, track[i].y), p1(track[i + 1].x, track[i + 1].y);
    const V n0 = track_normal(track[i].theta), n1 = track_normal(track[i + 1].theta);
    const V l0 = p0 - widths.left[i] * n0, r0 = p0 + widths.right[i] * n0;
    const V l1 = p1 - widths.left[i + 1] * n1, r1 = p1 + widths.right[i + 1] * n1;
    fill_triangle(l0, r0, r1);
    fill_triangle(l0, r1, l1);
    // Inner side of a sharp bend folds the quad; cover both diagonals.
    fill_triangle(l0, r0, l1);
    fill_triangle(r0, r1, l1);
  }

  // Centre polyline (Bresenham), keeps the mask connected at zero width.
  for (std::size_t i = 0; i < track.size(); ++i) {
    int x = static_cast<int>(std::lround(track[i].x)), y = static_cast<int>(std::lround(track[i].y));
    if (i + 1 == track.size()) {
      put(x, y);
      break;
    }
    const int xe = static_cast<int>(std::lround(track[i + 1].x)), ye = static_cast<int>(std::lround(track[i + 1].y));
    const int dx = std::abs(xe - x), dy = -std::abs(ye - y);
    const int sx = x < xe ? 1 : -1, sy = y < ye ? 1 : -1;
    int err = dx + dy;
    while (true) {
      put(x, y);
      if (x == xe && y == ye) break;
      const int e2 = 2 * err;
      if (e2 >= dy) err += dy, x += sx;
      if (e2 <= dx) err += dx, y += sy;
    }
  }
  return mask;
}

std::string widths_to_json(const WidthProfile& widths, int indent) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    arr.push_back({{"s", widths.s[i]},
                   {"left", widths.left[i]},
                   {"right", widths.right[i]},
                   {"width", widths.width(i)},
                   {"low_confidence", bool(widths.low_confidence[i])}});
  }
  return arr.dump(indent);
}

WidthParams width_params_from_json(const std::string& text, WidthParams base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("width params: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("width params: expected a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "bias_correction") {
      if (!v.is_boolean()) throw std::invalid_argument("width params: \"bias_correction\" must be a boolean");
      base.bias_correction = v.get<bool>();
      continue;
    }
    if (!v.is_number()) throw std::invalid_argument("width params: \"" + key + "\" must be a number");
    if (key == "sigma") base.sigma = v.get<double>();
    else if (key == "max_width") {
      if (!v.is_number_integer()) throw std::invalid_argument("width params: \"max_width\" must be an integer");
      base.max_width = v.get<int>();
    } else if (key == "step_penalty") base.step_penalty = v.get<double>();
    else throw std::invalid_argument("width params: unknown key \"" + key + "\"");
  }
  base.validate();
  return base;
}

}  // namespace crackseg
