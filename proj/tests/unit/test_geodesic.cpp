#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "crackseg/geodesic.hpp"
#include "crackseg/orientation.hpp"
#include "crackseg/synthetic.hpp"
#include "support.hpp"

using namespace crackseg;

namespace {

const CakeWaveletStack& default_stack() {
  static const CakeWaveletStack st;
  return st;
}

double shortest_turn(double a, double b) {
  double d = std::fmod(b - a, 2 * std::numbers::pi);
  if (d > std::numbers::pi) d -= 2 * std::numbers::pi;
  if (d < -std::numbers::pi) d += 2 * std::numbers::pi;
  return d;
}

// Smallest x-dot-n over the segments of a lifted path, n at each segment's
// mid-orientation.
double worst_forward(const LiftedPath& path) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double th = path[i - 1].theta + 0.5 * shortest_turn(path[i - 1].theta, path[i].theta);
    const double a = (path[i].x - path[i - 1].x) * std::cos(th) + (path[i].y - path[i - 1].y) * std::sin(th);
    worst = std::min(worst, a);
  }
  return worst;
}

// Dark sine curve y = 48 + 10 sin(2 pi x / 80), 3 px wide, crossed by a
// vertical distractor of the same contrast at x = 64.
Plane sine_scene(std::vector<Eigen::Vector2d>& curve) {
  const int w = 128, h = 96;
  curve.clear();
  for (int i = 0; i <= 2000; ++i) {
    const double x = 8 + (w - 16) * i / 2000.0;
    curve.emplace_back(x, 48 + 10 * std::sin(2 * std::numbers::pi * x / 80));
  }
  Plane img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = distance_to_polyline(curve, {double(x), double(y)});
      double v = 0.7;
      if (d <= 1.5) v -= 0.35;
      if (std::abs(x - 64) <= 1) v = std::min(v, 0.7 - 0.35);
      img(y, x) = v;
    }
  return img;
}

std::vector<Eigen::Vector2d> points_of(const CrackTrack& t) {
  std::vector<Eigen::Vector2d> p;
  for (const auto& v : t.vertices) p.emplace_back(v.x, v.y);
  return p;
}

}  // namespace

TEST_CASE("metric speed by direct substitution") {
  MetricParams p;
  p.xi = 1.7;
  p.zeta = 0.2;
  const Eigen::Vector2d n(std::cos(0.4), std::sin(0.4)), side(-std::sin(0.4), std::cos(0.4)), zero(0, 0);
  CHECK(metric_speed(p, 0.3, 0, n, zero, n) == doctest::Approx(0.3 * 1.7).epsilon(1e-12));
  CHECK(metric_speed(p, 0.3, 0, side, zero, n) == doctest::Approx(0.3 * 1.7 / 0.2).epsilon(1e-12));
  CHECK(std::isinf(metric_speed(p, 0.3, 0, Eigen::Vector2d(-n), zero, n)));
  CHECK(metric_speed(p, 0.3, 0, Eigen::Vector2d(-n), zero, n, false) == doctest::Approx(0.3 * 1.7));
  // Pure rotation: |ndot|.
  CHECK(metric_speed(p, 0.5, 0, zero, Eigen::Vector2d(0, 0.25), n) == doctest::Approx(0.5 * 0.25));
  // Mixed velocity against the formula.
  const Eigen::Vector2d xd(0.6, -0.2), nd(0.1, 0.3);
  const double a = xd.dot(n);
  const double g = 1.7 * 1.7 * a * a + 1.7 * 1.7 / 0.04 * (xd.squaredNorm() - a * a) + nd.squaredNorm();
  CHECK(metric_speed(p, 0.8, 0, xd, nd, n) == doctest::Approx(0.8 * std::sqrt(g)).epsilon(1e-12));
  CHECK_THROWS_AS(metric_speed(p, 1, 0, n, zero, Eigen::Vector2d(1, 1)), std::invalid_argument);
}

TEST_CASE("hessian data term") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 9; ++i) A.data()[i] = nd(rng);
    const Eigen::Matrix3d H = A + A.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    const Eigen::Vector3d ev = es.eigenvalues().cwiseAbs();
    Eigen::Index k;
    ev.maxCoeff(&k);
    CHECK(hessian_data_term(H, es.eigenvectors().col(k)) == doctest::Approx(1.0).epsilon(1e-9));

    // Brute force over sampled unit directions q, and over p for the normaliser.
    Eigen::Vector3d d(nd(rng), nd(rng), nd(rng));
    d.normalize();
    double num = 0, den = 0;
    for (int i = 0; i < 120; ++i)
      for (int j = 0; j < 240; ++j) {
        const double th = std::numbers::pi * (i + 0.5) / 120, ph = 2 * std::numbers::pi * j / 240;
        const Eigen::Vector3d q(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        num = std::max(num, std::pow(d.dot(H * q), 2));
        den = std::max(den, std::pow(q.dot(H * q), 2));
      }
    const double v = hessian_data_term(H, d);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(v == doctest::Approx(num / den).epsilon(2e-3));
  }
  const Eigen::Vector3d u = Eigen::Vector3d(1, 2, 2) / 3.0;
  for (const Eigen::Vector3d& d : {Eigen::Vector3d(1, 0, 0), u}) CHECK(hessian_data_term(2.5 * Eigen::Matrix3d::Identity(), d) == doctest::Approx(1.0));
  const Eigen::Matrix3d rank1 = u * u.transpose();
  const Eigen::Vector3d in_kernel = Eigen::Vector3d(2, -1, 0).normalized();
  CHECK(std::abs(hessian_data_term(rank1, in_kernel)) < 1e-15);
  CHECK(hessian_data_term(Eigen::Matrix3d::Zero(), u) == 0.0);
  CHECK_THROWS_AS(hessian_data_term(rank1, Eigen::Vector3d(1, 1, 0)), std::invalid_argument);
}

TEST_CASE("hessian field is symmetric") {
  const Plane img = oracle::dark_bar(48, 48, 24, 24, 0.5, 3.0);
  const HessianField hf(lift(img, default_stack()), 8.0);
  for (int j = 0; j < hf.n_orientations(); j += 3)
    for (int y = 0; y < 48; y += 7)
      for (int x = 0; x < 48; x += 7) {
        const Eigen::Matrix3d H = hf.at(x, y, j);
        REQUIRE((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
      }
}

TEST_CASE("cost volume from the orientation score") {
  const CakeWaveletStack& st = default_stack();
  MetricParams p;
  const CostVolume flat = compute_cost(OrientationScore(32, 32, st.n_orientations()), p);
  for (int j = 0; j < flat.n_orientations(); ++j) CHECK((flat.slab(j) == 1.0).all());

  const Plane img = oracle::dark_bar(96, 96, 48, 48, 0.0, 3.0);
  const OrientationScore U = lift(img, st);
  const CostVolume c = compute_cost(U, p);
  double spine = 0;
  for (int x = 20; x <= 76; ++x) {
    double m = 1;
    for (int j = 0; j < c.n_orientations(); ++j) m = std::min(m, c(x, 48, j));
    spine = std::max(spine, m);
  }
  CHECK(spine < 0.5);
  std::vector<double> bg;
  for (int j = 0; j < c.n_orientations(); ++j)
    for (int y = 0; y < 96; ++y)
      for (int x = 0; x < 96; ++x)
        if (std::abs(y - 48) > 15) bg.push_back(c(x, y, j));
  std::nth_element(bg.begin(), bg.begin() + bg.size() / 2, bg.end());
  CHECK(bg[bg.size() / 2] > 0.9);

  for (int j = 0; j < c.n_orientations(); ++j) {
    CHECK(c.slab(j).minCoeff() > 0.0);
    CHECK(c.slab(j).maxCoeff() <= 1.0);
  }
  MetricParams lo = p, hi = p;
  lo.cost_mu = 10;
  hi.cost_mu = 1000;
  const CostVolume cl = compute_cost(U, lo), ch = compute_cost(U, hi);
  for (int j = 0; j < c.n_orientations(); ++j) {
    CHECK((c.slab(j) <= cl.slab(j)).all());
    CHECK((ch.slab(j) <= c.slab(j)).all());
  }
}

TEST_CASE("fast marching: seed, aligned distances, homogeneity") {
  MetricParams p;
  p.xi = 1.3;
  const CostVolume ones(48, 48, 8);
  const DistanceMap d = fast_march(ones, {}, p, GridNode{4, 16, 0});
  CHECK(d.at({4, 16, 0}) == 0.0);
  for (int t : {5, 10, 20, 40}) {
    CAPTURE(t);
    CHECK(d.at({4 + t, 16, 0}) == doctest::Approx(p.xi * t).epsilon(0.05));
  }
  // Diagonal slab (theta = pi/4).
  const DistanceMap dd = fast_march(ones, {}, p, GridNode{4, 4, 1});
  CHECK(dd.at({24, 24, 1}) == doctest::Approx(p.xi * 20 * std::sqrt(2.0)).epsilon(0.05));

  // The oracle agrees on aligned targets.
  const auto g = oracle::graph_distances(ones, p, {4, 16, 0});
  CHECK(g[d.index({24, 16, 0})] == doctest::Approx(p.xi * 20).epsilon(1e-12));

  std::mt19937_64 rng(3);
  CostVolume c = oracle::random_cost(rng, 24, 24, 8);
  const DistanceMap a = fast_march(c, {}, p, GridNode{12, 12, 3});
  c *= 2.0;
  const DistanceMap b = fast_march(c, {}, p, GridNode{12, 12, 3});
  for (std::size_t i = 0; i < a.d.size(); ++i) {
    if (std::isinf(a.d[i])) {
      REQUIRE(std::isinf(b.d[i]));
      continue;
    }
    REQUIRE(std::abs(b.d[i] - 2 * a.d[i]) <= 1e-12 * std::max(1.0, a.d[i]));
  }

  CHECK_THROWS_AS(fast_march(ones, {}, p, GridNode{48, 0, 0}), std::out_of_range);
  CHECK_THROWS_AS(fast_march(ones, {}, p, std::vector<GridNode>{}), std::invalid_argument);
}

TEST_CASE("fast marching: monotone acceptance, bounded by the graph oracle, triangle property") {
  std::mt19937_64 rng(4);
  MetricParams p;
  for (int trial = 0; trial < 4; ++trial) {
    const CostVolume c = oracle::random_cost(rng, 20, 20, 8);
    const GridNode s{int(rng() % 20), int(rng() % 20), int(rng() % 8)};
    const DistanceMap d = fast_march(c, {}, p, s);
    const auto g = oracle::graph_distances(c, p, s);

    std::vector<std::size_t> by_rank(d.d.size());
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < d.d.size(); ++i) {
      // Interpolating updates can only shorten the stencil-graph distance.
      REQUIRE(d.d[i] <= g[i] * (1 + 1e-12));
      REQUIRE(std::isfinite(d.d[i]) == std::isfinite(g[i]));
      if (d.order[i] >= 0) by_rank[std::size_t(d.order[i])] = i, ++accepted;
    }
    for (std::size_t r = 1; r < accepted; ++r) REQUIRE(d.d[by_rank[r]] >= d.d[by_rank[r - 1]]);

    // d(p -> r) <= d(p -> q) + d(q -> r) + 2 cells at the sideward speed.
    for (int k = 0; k < 5; ++k) {
      const GridNode q{int(rng() % 20), int(rng() % 20), int(rng() % 8)};
      const DistanceMap dq = fast_march(c, {}, p, q);
      for (int m = 0; m < 40; ++m) {
        const GridNode r{int(rng() % 20), int(rng() % 20), int(rng() % 8)};
        const double tol = 2 * c(r.x, r.y, r.j) * p.xi / p.zeta;
        REQUIRE(d.at(r) <= d.at(q) + dq.at(r) + tol);
      }
    }
  }
}

TEST_CASE("xi scaling: aligned paths scale exactly, turning is unweighted") {
  const CostVolume ones(40, 24, 8);
  MetricParams p, q;
  q.xi = 2.0 * p.xi;
  const DistanceMap a = fast_march(ones, {}, p, GridNode{2, 12, 0}), b = fast_march(ones, {}, q, GridNode{2, 12, 0});
  for (int t = 1; t < 38; ++t) CHECK(b.at({2 + t, 12, 0}) == doctest::Approx(2 * a.at({2 + t, 12, 0})).epsilon(1e-12));
  // Eq. (G) weighs |ndot|^2 without xi, so for s > 1: d <= d(s xi) <= s d.
  std::mt19937_64 rng(5);
  const CostVolume c = oracle::random_cost(rng, 20, 20, 8);
  const DistanceMap ra = fast_march(c, {}, p, GridNode{10, 10, 2}), rb = fast_march(c, {}, q, GridNode{10, 10, 2});
  for (std::size_t i = 0; i < ra.d.size(); ++i) {
    if (!std::isfinite(ra.d[i])) continue;
    REQUIRE(rb.d[i] >= ra.d[i] * (1 - 1e-12));
    REQUIRE(rb.d[i] <= 2 * ra.d[i] * (1 + 1e-12));
  }
  // A pure rotation at the seed costs the same under both.
  CHECK(rb.at({10, 10, 3}) == doctest::Approx(ra.at({10, 10, 3})).epsilon(1e-12));
}

TEST_CASE("backtracking") {
  MetricParams p;
  const CostVolume ones(40, 32, 8);
  const DistanceMap d = fast_march(ones, {}, p, GridNode{4, 16, 0});
  const LiftedPath self = backtrack(d, {4, 16, 0}, ones.orientation_step());
  CHECK(self.size() == 1);

  const LiftedPath line = backtrack(d, {30, 16, 0}, ones.orientation_step());
  REQUIRE(line.size() >= 2);
  CHECK(line.front().x == 4);
  CHECK(line.back().x == 30);
  for (const auto& v : line) CHECK(std::abs(v.y - 16) <= 1);
  CHECK(line.front().t == 0.0);
  CHECK(line.back().t == doctest::Approx(1.0));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const CostVolume c = oracle::random_cost(rng, 24, 24, 8);
    const GridNode s{int(rng() % 24), int(rng() % 24), int(rng() % 8)};
    const DistanceMap dm = fast_march(c, {}, p, s);
    for (int k = 0; k < 10; ++k) {
      const GridNode t{int(rng() % 24), int(rng() % 24), int(rng() % 8)};
      if (!std::isfinite(dm.at(t))) continue;
      const LiftedPath path = backtrack(dm, t, c.orientation_step());
      REQUIRE(path.front().x == s.x);
      REQUIRE(path.front().y == s.y);
      for (std::size_t i = 1; i < path.size(); ++i) {
        REQUIRE(dm.at({path[i].x, path[i].y, path[i].j}) > dm.at({path[i - 1].x, path[i - 1].y, path[i - 1].j}));
        REQUIRE(std::abs(path[i].x - path[i - 1].x) <= 1);
        REQUIRE(std::abs(path[i].y - path[i - 1].y) <= 1);
      }
      REQUIRE(worst_forward(path) >= -1e-6);
    }
  }
  CHECK_THROWS_AS(backtrack(d, {40, 0, 0}, ones.orientation_step()), std::out_of_range);
  MarchOptions stop;
  stop.stop_at = {{8, 16, 0}};
  const DistanceMap partial = fast_march(ones, {}, p, GridNode{4, 16, 0}, stop);
  CHECK_THROWS_AS(backtrack(partial, {39, 31, 4}, ones.orientation_step()), UnreachableError);
}

TEST_CASE("tracking a straight dark line") {
  const Plane img = oracle::dark_bar(96, 64, 48, 32, 0.15, 3.0);
  const CrackTrack t = track_crack(RasterImage(img), {14, 27}, {82, 37}, {}, default_stack());
  std::vector<Eigen::Vector2d> spine;
  for (int i = 0; i <= 200; ++i) {
    const double s = -40 + 80 * i / 200.0;
    spine.emplace_back(48 + s * std::cos(0.15), 32 + s * std::sin(0.15));
  }
  REQUIRE(t.vertices.size() >= 2);
  CHECK(t.vertices.front().x == 14);
  CHECK(t.vertices.back().x == 82);
  CHECK(polyline_rmse(points_of(t), spine) <= 1.0);
  CHECK(worst_forward(t.lifted) >= -1e-6);
  CHECK(t.mean_cost < 0.5);
}

TEST_CASE("tracking a sine curve across a distractor") {
  std::vector<Eigen::Vector2d> curve;
  const Plane img = sine_scene(curve);
  const OrientationScore U = lift(img, default_stack());
  const PixelPos a{12, int(std::lround(48 + 10 * std::sin(2 * std::numbers::pi * 12 / 80)))};
  const PixelPos b{116, int(std::lround(48 + 10 * std::sin(2 * std::numbers::pi * 116 / 80)))};
  const CrackTrack t = track_crack(U, a, b);
  CHECK(polyline_rmse(points_of(t), curve) <= 2.0);

  TrackParams sym;
  sym.symmetric = true;
  const CrackTrack fwd = track_crack(U, a, b, sym), rev = track_crack(U, b, a, sym);
  CHECK(polyline_rmse(points_of(fwd), curve) <= 2.0);
  // Swapped endpoints: same vertex set, reversed, within 1 px.
  const auto pf = points_of(fwd), pr = points_of(rev);
  CHECK(polyline_rmse(pf, pr) <= 1.0);
  CHECK(polyline_rmse(pr, pf) <= 1.0);
  CHECK((pf.front() - pr.back()).norm() == 0.0);
}

TEST_CASE("track errors and parameter overrides") {
  const OrientationScore U(32, 32, 8);
  CHECK_THROWS_AS(track_crack(U, {3, 3}, {3, 3}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(track_crack(U, {3, 3}, {40, 3}), doctest::Contains("(40, 3)"), std::out_of_range);

  const TrackParams tp = track_params_from_json(R"({"xi": 2.5, "zeta": 0.2, "symmetric": true, "scheme": "dijkstra"})");
  CHECK(tp.metric.xi == 2.5);
  CHECK(tp.metric.zeta == 0.2);
  CHECK(tp.symmetric);
  CHECK(tp.scheme == MarchScheme::Dijkstra);
  CHECK(track_params_from_json("{}").metric.xi == TrackParams{}.metric.xi);
  CHECK_THROWS_AS(track_params_from_json(R"({"xii": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(track_params_from_json(R"({"xi": "big"})"), std::invalid_argument);
  MetricParams bad;
  bad.zeta = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // JSON round-trip of the polyline.
  const Plane img = oracle::dark_bar(64, 40, 32, 20, 0.0, 3.0);
  const CrackTrack t = track_crack(lift(img, default_stack()), {8, 20}, {56, 20});
  const CrackTrack back = track_from_json(track_to_json(t, {}));
  REQUIRE(back.vertices.size() == t.vertices.size());
  for (std::size_t i = 0; i < t.vertices.size(); ++i) {
    CHECK(back.vertices[i].x == t.vertices[i].x);
    CHECK(back.vertices[i].theta == doctest::Approx(t.vertices[i].theta));
  }
}
