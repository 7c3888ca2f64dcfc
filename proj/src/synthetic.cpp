#include "crackseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crackseg/rng.hpp"

namespace crackseg {
namespace {

using Vec2 = Eigen::Vector2d;
constexpr double kPi = std::numbers::pi;

struct SegmentHit {
  double dist2;
  double t;  // position along the segment, [0, 1]
};

SegmentHit closest_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return {(a + t * ab - p).squaredNorm(), t};
}

// Per sub-sample: squared distance to the nearest stroke and the half-width
// there. Strokes are painted segment by segment over their bounding boxes.
class CoverageGrid {
 public:
  CoverageGrid(int width, int height, int factor)
      : w_(width * factor), h_(height * factor), f_(factor),
        d2_(static_cast<std::size_t>(w_) * h_, std::numeric_limits<float>::infinity()),
        half_(static_cast<std::size_t>(w_) * h_, 0.0f) {}

  // Sub-sample (i, j) sits at pixel coordinate ((i + 0.5) / f - 0.5).
  double coord(int i) const { return (i + 0.5) / f_ - 0.5; }

  void paint(const std::vector<Vec2>& line, const std::vector<double>& half_widths) {
    for (std::size_t k = 0; k + 1 < line.size(); ++k) {
      const Vec2& a = line[k];
      const Vec2& b = line[k + 1];
      const double reach = std::max(half_widths[k], half_widths[k + 1]) + 1.0;
      const int i0 = std::max(0, static_cast<int>(std::floor((std::min(a.x(), b.x()) - reach + 0.5) * f_)));
      const int i1 = std::min(w_ - 1, static_cast<int>(std::ceil((std::max(a.x(), b.x()) + reach + 0.5) * f_)));
      const int j0 = std::max(0, static_cast<int>(std::floor((std::min(a.y(), b.y()) - reach + 0.5) * f_)));
      const int j1 = std::min(h_ - 1, static_cast<int>(std::ceil((std::max(a.y(), b.y()) + reach + 0.5) * f_)));
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
          const SegmentHit hit = closest_on_segment(a, b, Vec2(coord(i), coord(j)));
          const std::size_t idx = static_cast<std::size_t>(j) * w_ + i;
          if (hit.dist2 < d2_[idx]) {
            d2_[idx] = static_cast<float>(hit.dist2);
            half_[idx] = static_cast<float>(half_widths[k] + hit.t * (half_widths[k + 1] - half_widths[k]));
          }
        }
      }
    }
  }

  bool inside(int i, int j) const {
    const std::size_t idx = static_cast<std::size_t>(j) * w_ + i;
    return d2_[idx] <= double(half_[idx]) * half_[idx];
  }

  // Fraction of the pixel's sub-samples inside the stroke.
  double coverage(int x, int y) const {
    int n = 0;
    for (int j = 0; j < f_; ++j)
      for (int i = 0; i < f_; ++i) n += inside(x * f_ + i, y * f_ + j);
    return double(n) / (f_ * f_);
  }

  // The centre sub-sample of an odd factor is the pixel centre.
  bool centre_inside(int x, int y) const { return inside(x * f_ + f_ / 2, y * f_ + f_ / 2); }

 private:
  int w_, h_, f_;
  std::vector<float> d2_;
  std::vector<float> half_;
};

}  // namespace

double distance_to_polyline(const std::vector<Vec2>& line, const Vec2& p) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return (line[0] - p).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < line.size(); ++k) best = std::min(best, closest_on_segment(line[k], line[k + 1], p).dist2);
  return std::sqrt(best);
}

double polyline_rmse(const std::vector<Vec2>& points, const std::vector<Vec2>& reference) {
  if (points.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : points) {
    const double d = distance_to_polyline(reference, p);
    s += d * d;
  }
  return std::sqrt(s / double(points.size()));
}

SyntheticCrack make_synthetic_crack(const SyntheticParams& P, std::uint64_t seed) {
  if (P.width < 4 * P.margin || P.height < 4 * P.margin) throw std::invalid_argument("make_synthetic_crack: image too small");
  if (P.supersample < 1 || P.supersample % 2 == 0) throw std::invalid_argument("make_synthetic_crack: supersample must be odd");
  Rng rng(seed);
  const Vec2 centre(0.5 * (P.width - 1), 0.5 * (P.height - 1));

  // Chord across the image at a random angle; a sine swing on top of it.
  const double angle = uniform_real(rng, 0.0, kPi);
  const Vec2 dir(std::cos(angle), std::sin(angle));
  const Vec2 side(-dir.y(), dir.x());
  const double amp = uniform_real(rng, P.amplitude_min, P.amplitude_max) * (bernoulli(rng, 0.5) ? 1.0 : -1.0);
  const double cycles = uniform_real(rng, P.cycles_min, P.cycles_max);
  const double phase = uniform_real(rng, 0.0, 2.0 * kPi);
  const double w0 = uniform_real(rng, P.min_width, P.max_width);
  const double w1 = uniform_real(rng, P.min_width, P.max_width);
  const Vec2 offset(uniform_real(rng, -0.1, 0.1) * P.width, uniform_real(rng, -0.1, 0.1) * P.height);

  // Half-length of the chord: as long as the swing and margin allow.
  const double box_x = 0.5 * P.width - P.margin, box_y = 0.5 * P.height - P.margin;
  auto fits = [&](double half_len) {
    for (int k = 0; k <= 200; ++k) {
      const double s = -1.0 + 2.0 * k / 200.0;
      const Vec2 p = centre + offset + s * half_len * dir +
                     amp * std::sin(phase + cycles * kPi * (s + 1.0)) * side;
      const double r = 0.5 * std::max(w0, w1) + 1.0;
      if (std::abs(p.x() - centre.x()) > box_x - r || std::abs(p.y() - centre.y()) > box_y - r) return false;
    }
    return true;
  };
  double lo = 0.0, hi = std::hypot(P.width, P.height);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? lo : hi) = mid;
  }
  const double half_len = lo;
  if (half_len < 0.25 * std::min(P.width, P.height)) {
    throw std::invalid_argument("make_synthetic_crack: swing too large for the image");
  }

  SyntheticCrack out;
  const int n_samples = std::max(64, static_cast<int>(4.0 * half_len * (1.0 + std::abs(amp) / half_len * cycles)));
  // Snap the end points to pixel centres so the endpoints are exact.
  auto curve = [&](double s) {
    return Vec2(centre + offset + s * half_len * dir + amp * std::sin(phase + cycles * kPi * (s + 1.0)) * side);
  };
  const Vec2 ea = curve(-1.0).array().round().matrix();
  const Vec2 eb = curve(1.0).array().round().matrix();
  for (int k = 0; k <= n_samples; ++k) {
    const double u = double(k) / n_samples;
    Vec2 p = curve(-1.0 + 2.0 * u);
    p += (1.0 - u) * (ea - curve(-1.0)) + u * (eb - curve(1.0));
    out.centreline.push_back(p);
    const double sm = u * u * (3.0 - 2.0 * u);
    out.widths.push_back(w0 + (w1 - w0) * sm);
  }
  out.a = {static_cast<int>(ea.x()), static_cast<int>(ea.y())};
  out.b = {static_cast<int>(eb.x()), static_cast<int>(eb.y())};

  // Crack coverage and ground truth.
  CoverageGrid crack(P.width, P.height, P.supersample);
  std::vector<double> half(out.widths.size());
  for (std::size_t k = 0; k < half.size(); ++k) half[k] = 0.5 * out.widths[k];
  crack.paint(out.centreline, half);

  // Distractors: straight lines through a point of the crack, steeply
  // crossing it, spanning the whole image.
  Plane distract = Plane::Zero(P.height, P.width);
  for (int k = 0; k < P.n_distractors; ++k) {
    const double u = uniform_real(rng, 0.25, 0.75);
    const Vec2 through = out.centreline[static_cast<std::size_t>(u * n_samples)];
    const double cross = angle + 0.5 * kPi + uniform_real(rng, -kPi / 6, kPi / 6);
    const Vec2 ld(std::cos(cross), std::sin(cross));
    const double lw = uniform_real(rng, P.distractor_width_min, P.distractor_width_max);
    const double lc = P.crack_contrast * uniform_real(rng, P.distractor_contrast_min, P.distractor_contrast_max);
    const double reach = std::hypot(P.width, P.height);
    CoverageGrid one(P.width, P.height, P.supersample);
    one.paint({through - reach * ld, through + reach * ld}, {0.5 * lw, 0.5 * lw});
    for (int y = 0; y < P.height; ++y)
      for (int x = 0; x < P.width; ++x) distract(y, x) = std::max(distract(y, x), lc * one.coverage(x, y));
  }

  // Smooth shading: a few long-wavelength cosines.
  Plane img(P.height, P.width);
  struct Wave {
    double kx, ky, ph, a;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < 3; ++k) {
    const double th = uniform_real(rng, 0.0, 2.0 * kPi);
    const double f = 2.0 * kPi / uniform_real(rng, 150.0, 400.0);
    waves.push_back({f * std::cos(th), f * std::sin(th), uniform_real(rng, 0.0, 2.0 * kPi), uniform_real(rng, 0.01, 0.03)});
  }
  out.mask = BinaryMask(P.width, P.height);
  for (int y = 0; y < P.height; ++y) {
    for (int x = 0; x < P.width; ++x) {
      double bg = P.background;
      for (const auto& w : waves) bg += w.a * std::cos(w.kx * x + w.ky * y + w.ph);
      const double dark = std::max(P.crack_contrast * crack.coverage(x, y), distract(y, x));
      img(y, x) = bg - dark + P.noise_sigma * standard_normal(rng);
      if (crack.centre_inside(x, y)) out.mask.set(y, x, true);
    }
  }
  out.image = RasterImage(std::move(img));
  out.image.clamp();
  return out;
}

}  // namespace crackseg
