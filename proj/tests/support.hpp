#pragma once

// Independent oracles and fixtures shared by the unit tests and the
// acceptance runner. Everything here is written from the defining formulas
// with plain loops, not by calling the code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crackseg/evalmetrics.hpp"
#include "crackseg/geodesic.hpp"
#include "crackseg/orientation.hpp"
#include "crackseg/patchset.hpp"
#include "crackseg/raster.hpp"

namespace oracle {

using namespace crackseg;

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- masks and tallies -------------------------------------------------

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(y, x, u(rng) < density);
  return m;
}

// All-pairs distance counting; O(n^2) but obviously right.
inline CountTally brute_tally(const BinaryMask& pred, const BinaryMask& gt, double t) {
  std::vector<std::pair<int, int>> ps, gs;
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) {
      if (pred(y, x)) ps.push_back({x, y});
      if (gt(y, x)) gs.push_back({x, y});
    }
  auto near = [&](const std::pair<int, int>& p, const std::vector<std::pair<int, int>>& set) {
    for (const auto& q : set) {
      const double dx = p.first - q.first, dy = p.second - q.second;
      if (dx * dx + dy * dy <= t * t) return true;
    }
    return false;
  };
  CountTally c;
  for (const auto& p : ps) c.fp += near(p, gs) ? 0 : 1;
  for (const auto& g : gs) c.fn += near(g, ps) ? 0 : 1;
  c.tp = std::int64_t(ps.size()) - c.fp;
  return c;
}

inline double f1_of(const CountTally& c) {
  const double d = 2.0 * c.tp + c.fp + c.fn;
  return c.tp == 0 ? 0.0 : 2.0 * c.tp / d;
}

// ---- losses by direct summation ---------------------------------------

inline double bce(const std::vector<double>& y, const std::vector<double>& p, double clamp = 1e-7) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::min(std::max(p[i], clamp), 1.0 - clamp);
    s += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return -s / double(y.size());
}

inline double dice(const std::vector<double>& y, const std::vector<double>& p, double c = 2.0, double eps = 1.0) {
  double yp = 0, sy = 0, sp = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    yp += y[i] * p[i];
    sy += y[i];
    sp += p[i];
  }
  return 1.0 - (c * yp + eps) / (sy + sp + eps);
}

inline double inversion(const std::vector<double>& y, const std::vector<double>& p) {
  double sy = 0;
  for (double v : y) sy += v;
  if (sy != 0.0) return bce(y, p) + dice(y, p);
  std::vector<double> iy(y.size()), ip(p.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    iy[i] = 1.0 - y[i];
    ip[i] = 1.0 - p[i];
  }
  return bce(iy, ip) + dice(iy, ip);
}

inline double tversky(const std::vector<double>& y, const std::vector<double>& p, double a, double b,
                      double eps = 1.0) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    tp += y[i] * p[i];
    fp += (1 - y[i]) * p[i];
    fn += y[i] * (1 - p[i]);
  }
  return 1.0 - (tp + eps) / (tp + a * fp + b * fn + eps);
}

inline Plane to_plane(const std::vector<double>& v, int w) {
  Plane p(int(v.size()) / w, w);
  for (std::size_t i = 0; i < v.size(); ++i) p(Eigen::Index(i) / w, Eigen::Index(i) % w) = v[i];
  return p;
}

// ---- patch pools ---------------------------------------------------------

// Records of `n_crack` crack and `n_bg` background patches spread over
// images, 80% of them in the train split.
inline std::vector<PatchRecord> synthetic_pool(int n_crack, int n_bg, int patch = 512) {
  std::vector<PatchRecord> pool;
  auto add = [&](int count, PatchLabel label, int base) {
    for (int i = 0; i < count; ++i) {
      const int k = base + i;
      PatchRecord r;
      r.image_id = "img" + std::to_string(k / 63);
      r.origin = {(k % 9) * patch, ((k / 9) % 7) * patch};
      r.patch_size = patch;
      r.label = label;
      r.split = (k / 63) % 5 == 4 ? Split::test : Split::train;
      pool.push_back(r);
    }
  };
  // Crack and background records never share an (image, origin) pair.
  add(n_crack, PatchLabel::crack, 0);
  add(n_bg, PatchLabel::background, ((n_crack + 62) / 63) * 63);
  return pool;
}

// ---- lifted-grid Dijkstra --------------------------------------------------

// Shortest paths over the 26-neighbour graph (dx, dy, dj in {-1, 0, 1}) with
// edge weights from metric_speed: cost at the arrival node, orientation at the
// step midpoint, forward constraint applied.
inline std::vector<double> graph_distances(const CostVolume& c, const MetricParams& p, GridNode seed,
                                           bool forward_only = true) {
  const int W = c.width(), H = c.height(), N = c.n_orientations();
  const double dt = c.orientation_step();
  auto idx = [&](int x, int y, int j) { return (std::size_t(j) * H + y) * W + x; };
  std::vector<double> d(std::size_t(W) * H * N, std::numeric_limits<double>::infinity());
  std::vector<char> done(d.size(), 0);
  using E = std::pair<double, std::size_t>;
  std::priority_queue<E, std::vector<E>, std::greater<>> q;
  d[idx(seed.x, seed.y, seed.j)] = 0;
  q.push({0, idx(seed.x, seed.y, seed.j)});
  while (!q.empty()) {
    const auto [dv, i] = q.top();
    q.pop();
    if (done[i]) continue;
    done[i] = 1;
    const int j = int(i / (std::size_t(W) * H));
    const int r = int(i % (std::size_t(W) * H));
    const int y = r / W, x = r % W;
    for (int dj = -1; dj <= 1; ++dj)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dj) continue;
          const int X = x + dx, Y = y + dy, J = (j + dj + N) % N;
          if (X < 0 || Y < 0 || X >= W || Y >= H) continue;
          const double th = J * dt - dj * 0.5 * dt;
          const Eigen::Vector2d n(std::cos(th), std::sin(th));
          const Eigen::Vector2d xd(dx, dy), nd(-std::sin(th) * dj * dt, std::cos(th) * dj * dt);
          const double w = metric_speed(p, c(X, Y, J), 0.0, xd, nd, n, forward_only);
          if (!std::isfinite(w)) continue;
          const std::size_t k = idx(X, Y, J);
          if (dv + w < d[k]) {
            d[k] = dv + w;
            q.push({d[k], k});
          }
        }
  }
  return d;
}

inline CostVolume random_cost(std::mt19937_64& rng, int w, int h, int n, double lo = 0.1) {
  std::uniform_real_distribution<double> u(lo, 1.0);
  CostVolume c(w, h, n);
  for (int j = 0; j < n; ++j)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) c.slab(j)(y, x) = u(rng);
  return c;
}

// ---- image fixtures --------------------------------------------------------

inline double pearson(const Plane& a, const Plane& b) {
  const double ma = a.mean(), mb = b.mean();
  return ((a - ma) * (b - mb)).sum() / std::sqrt((a - ma).square().sum() * (b - mb).square().sum());
}

inline double relative_l2(const Plane& got, const Plane& want) {
  return std::sqrt((got - want).square().sum() / want.square().sum());
}

// Smooth test scene: bright background with Gaussian ridges and a blob.
inline Plane ridge_scene(int n, double rotation = 0.0) {
  const double c = (n - 1) / 2.0;
  auto scene = [](double x, double y) {
    auto ridge = [&](double px, double py, double ang, double w, double a) {
      const double d = (x - px) * -std::sin(ang) + (y - py) * std::cos(ang);
      const double t = (x - px) * std::cos(ang) + (y - py) * std::sin(ang);
      return a * std::exp(-d * d / (2 * w * w)) * std::exp(-t * t / (2 * 30.0 * 30.0));
    };
    return 0.5 + ridge(10, 5, 0.3, 2.5, -0.3) + ridge(-15, -10, 1.2, 3.0, 0.25) + ridge(5, -20, 2.4, 2.5, -0.2) +
           0.1 * std::exp(-((x - 20) * (x - 20) + (y - 15) * (y - 15)) / 200.0);
  };
  Plane f(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double dx = x - c, dy = y - c;
      // f_rot(x) = f(R^-1 x)
      const double bx = std::cos(rotation) * dx + std::sin(rotation) * dy;
      const double by = -std::sin(rotation) * dx + std::cos(rotation) * dy;
      f(y, x) = scene(bx, by);
    }
  return f;
}

// Relative L2 gap between lift(rotated scene) and the rotated, theta-shifted
// lift of the scene, on a disk of radius 45 around the centre. Rotation by k
// orientation steps; slabs resampled bicubically.
inline double rotation_covariance_error(const CakeWaveletStack& st, int k, int n = 160) {
  const int no = st.n_orientations();
  const double a = st.orientation(k), c = (n - 1) / 2.0;
  const OrientationScore U = lift(ridge_scene(n), st), V = lift(ridge_scene(n, a), st);
  auto cubic = [](double t) {
    t = std::abs(t);
    const double A = -0.5;
    return t < 1 ? (A + 2) * t * t * t - (A + 3) * t * t + 1 : t < 2 ? A * t * t * t - 5 * A * t * t + 8 * A * t - 4 * A : 0.0;
  };
  double num = 0, den = 0;
  for (int j = 0; j < no; ++j)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double dx = x - c, dy = y - c;
        if (dx * dx + dy * dy > 45 * 45) continue;
        const double sx = std::cos(a) * dx + std::sin(a) * dy + c, sy = -std::sin(a) * dx + std::cos(a) * dy + c;
        const int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
        Complex u = 0;
        for (int yy = -1; yy <= 2; ++yy)
          for (int xx = -1; xx <= 2; ++xx) u += cubic(xx - (sx - x0)) * cubic(yy - (sy - y0)) * U(x0 + xx, y0 + yy, j);
        const Complex v = V((x), (y), (j + k) % no);
        num += std::norm(v - u);
        den += std::norm(v);
      }
  return std::sqrt(num / den);
}

// Gaussian ridge (line) and erf step (edge) along the vertical axis through
// the centre column; returns {line Re/Im, edge Im/Re} at the spine.
struct LineEdgeRatios {
  double line = 0, edge = 0;
};
inline LineEdgeRatios line_edge_ratios(const CakeWaveletStack& st, int n = 128) {
  Plane line(n, n), edge(n, n);
  const int cx = n / 2;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double d = x - cx;
      line(y, x) = std::exp(-d * d / (2 * 1.5 * 1.5));
      edge(y, x) = 0.5 * (1 + std::erf(d / std::sqrt(2.0)));
    }
  const OrientationScore UL = lift(line, st), UE = lift(edge, st);
  const int j = st.n_orientations() / 4;  // line direction pi/2
  const Complex l = UL(cx, n / 2, j), e = UE(cx, n / 2, j);
  return {std::abs(l.real()) / std::abs(l.imag()), std::abs(e.imag()) / std::abs(e.real())};
}

// Band-limited noise image with a 1/f spectrum, values in [0, 1].
inline Plane pink_noise(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ComplexPlane F(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double fy = y < n / 2 ? y : y - n, fx = x < n / 2 ? x : x - n;
      const double r = std::hypot(fx, fy);
      F(y, x) = r == 0 ? Complex(0) : Complex(nd(rng), nd(rng)) / r;
    }
  fft2(F, true);
  Plane f = F.real();
  return (f - f.minCoeff()) / (f.maxCoeff() - f.minCoeff());
}

// Dark bar of the given width along the line through (cx, cy) at angle theta
// on a bright background, with pixel-area antialiasing.
inline Plane dark_bar(int w, int h, double cx, double cy, double theta, double width, double contrast = 0.4,
                      double background = 0.7) {
  Plane p(h, w);
  const double nx = -std::sin(theta), ny = std::cos(theta);
  constexpr int ss = 5;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int inside = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const double px = x - 0.5 + (sx + 0.5) / ss, py = y - 0.5 + (sy + 0.5) / ss;
          inside += std::abs((px - cx) * nx + (py - cy) * ny) <= width / 2 ? 1 : 0;
        }
      p(y, x) = background - contrast * inside / double(ss * ss);
    }
  return p;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   (name + "-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
