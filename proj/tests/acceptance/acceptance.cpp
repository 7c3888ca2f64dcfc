// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// FAIL. Tolerances and fixture sizes are fixed here and not tuned per run.

#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "crackseg/augment.hpp"
#include "crackseg/png_io.hpp"
#include "crackseg/synthetic.hpp"
#include "crackseg/trainmath.hpp"
#include "crackseg/widthseg.hpp"
#include "support.hpp"

using namespace crackseg;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a sub-check; the criterion passes only if all of them do.
  void need(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------

void patch_grid(Outcome& o, double& limit) {
  limit = 1.0;
  const PatchGrid g = split_into_patches(4608, 3456, 512);
  o.need(g.size() == 63 && g.cols == 9 && g.rows == 7, "4608x3456/512 -> " + std::to_string(g.size()) + " patches");

  // Every (W, H, P) with P <= W, H <= 64. Origins come in row-major scan
  // order, so origin (r, c) must be (xs[c], ys[r]) for strictly increasing
  // axis offsets; each axis must then be covered by patches inside the image.
  std::int64_t grids = 0, bad = 0;
  auto covers = [](const std::vector<int>& offs, int n, int P) {
    std::vector<int> hit(std::size_t(n) + 1, 0);
    for (std::size_t i = 0; i < offs.size(); ++i) {
      if (offs[i] < 0 || offs[i] + P > n || (i > 0 && offs[i] <= offs[i - 1])) return false;
      ++hit[std::size_t(offs[i])];
      --hit[std::size_t(offs[i] + P)];
    }
    for (int i = 0, run = 0; i < n; ++i)
      if ((run += hit[std::size_t(i)]) < 1) return false;
    return true;
  };
  std::vector<int> xs, ys;
  for (int P = 1; P <= 64; ++P)
    for (int H = P; H <= 64; ++H)
      for (int W = P; W <= 64; ++W) {
        const PatchGrid q = split_into_patches(W, H, P);
        ++grids;
        const int cols = (W + P - 1) / P, rows = (H + P - 1) / P;
        bool ok = q.cols == cols && q.rows == rows && q.size() == std::size_t(cols) * rows;
        if (ok) {
          xs.assign(std::size_t(cols), 0);
          ys.assign(std::size_t(rows), 0);
          for (int c = 0; c < cols; ++c) xs[std::size_t(c)] = q.origins[std::size_t(c)].x;
          for (int r = 0; r < rows; ++r) ys[std::size_t(r)] = q.origins[std::size_t(r) * cols].y;
          for (int r = 0; r < rows && ok; ++r)
            for (int c = 0; c < cols; ++c)
              if (!(q.origins[std::size_t(r) * cols + c] == PixelPos{xs[std::size_t(c)], ys[std::size_t(r)]})) {
                ok = false;
                break;
              }
          ok = ok && covers(xs, W, P) && covers(ys, H, P);
        }
        bad += !ok;
      }
  o.need(bad == 0, std::to_string(grids) + " grids up to 64 px, " + std::to_string(bad) + " bad");
}

// ---- 2 ---------------------------------------------------------------------

std::set<std::tuple<std::string, int, int, int>> keys(const PatchManifest& m) {
  std::set<std::tuple<std::string, int, int, int>> k;
  for (const auto& r : m.records) k.insert({r.image_id, r.origin.x, r.origin.y, int(r.split)});
  return k;
}

void dataset_arithmetic(Outcome& o, double& limit) {
  limit = 1.0;
  // Pool shaped like the crack data: 3950 crack and 57276 background patches.
  const auto pool = oracle::synthetic_pool(3950, 57276);
  const std::pair<double, std::int64_t> cases[] = {{0.7, 600}, {0.3, 3267}, {0.1, 12600}};
  for (const auto& [f, bg] : cases) {
    const PatchManifest m = compose_ratio_dataset(pool, 1400, f, 42);
    const LabelCounts c = m.counts();
    o.need(c.crack == 1400 && c.background == bg && keys(m).size() == m.records.size(),
           fmt("%.0f%%", 100 * f) + " -> " + std::to_string(c.crack) + "/" + std::to_string(c.background));
  }
  const PatchManifest base = compose_ratio_dataset(pool, 1400, 0.7, 7, "base");
  const PatchManifest e1 = extend_dataset(base, pool, 0.3, 8), e2 = extend_dataset(e1, pool, 0.1, 9);
  const auto kb = keys(base), k1 = keys(e1), k2 = keys(e2);
  const bool superset = std::includes(k1.begin(), k1.end(), kb.begin(), kb.end()) &&
                        std::includes(k2.begin(), k2.end(), k1.begin(), k1.end());
  o.need(e1.counts().background == 3267 && e2.counts().background == 12600 && e2.counts().crack == 1400 && superset,
         "extend 600 -> " + std::to_string(e1.counts().background) + " -> " + std::to_string(e2.counts().background) +
             (superset ? ", supersets" : ", not supersets"));
}

// ---- 3 ---------------------------------------------------------------------

void loss_oracles(Outcome& o, double& limit) {
  limit = 10.0;
  constexpr double kTol = 1e-9;
  double worst = 0;
  auto against = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  // Worked examples against closed forms and the direct-sum oracle.
  {
    std::vector<double> y(64), h(64, 0.5);
    for (int i = 0; i < 64; ++i) y[std::size_t(i)] = i % 3 == 0;
    against(bce_loss(oracle::to_plane(y, 8), oracle::to_plane(h, 8)), std::log(2.0));
    against(bce_loss(Plane::Constant(1, 1, 1.0), Plane::Constant(1, 1, 0.25)), 1.3862943611198906);
    against(bce_loss(Plane::Constant(1, 1, 1.0), Plane::Constant(1, 1, 0.0)), -std::log(1e-7));

    Plane y10 = Plane::Zero(5, 5);
    for (int i = 0; i < 10; ++i) y10(i / 5, i % 5) = 1.0;
    against(dice_loss(y10, y10), 0.0);
    LossConfig literal;
    literal.dice_numerator_factor = 1.0;
    against(dice_loss(y10, y10, literal), 1.0 - 11.0 / 21.0);

    std::vector<double> yb(100, 0.0), pb(100, 1e-7);
    for (int i = 0; i < 50; ++i) pb[std::size_t(i)] = 0.9;
    const Plane Yb = oracle::to_plane(yb, 10), Pb = oracle::to_plane(pb, 10);
    against(bce_loss(Yb, Pb), oracle::bce(yb, pb));
    against(bce_loss(Yb, Pb), -(50 * std::log(0.1) + 50 * std::log(1 - 1e-7)) / 100);
    against(dice_loss(Yb, Pb), 1.0 - 1.0 / (45.0 + 50e-7 + 1.0));
    against(dice_bce_loss(Yb, Pb), oracle::bce(yb, pb) + oracle::dice(yb, pb));
    against(dice_bce_loss(Plane::Zero(10, 10), Plane::Constant(10, 10, 1e-7)),
            -std::log(1 - 1e-7) + 1.0 - 1.0 / (100e-7 + 1.0));
    against(inversion_loss(Yb, Pb), oracle::inversion(yb, pb));
    against(tversky_loss(y10, y10, TverskyConfig{0.3, 0.7}), 0.0);
    for (double s : {10.0, 100.0, 1000.0})
      against(tversky_loss(Plane::Zero(50, 50), Plane::Constant(50, 50, s / 2500.0), TverskyConfig{0.01, 0.99}),
              1.0 - 1.0 / (0.01 * s + 1.0));
  }

  // Random inputs against the direct-sum oracle.
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> y(256), p(256);
    const bool background = trial % 4 == 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = background ? 0.0 : double(u(rng) < 0.3);
      p[i] = u(rng);
    }
    const Plane Y = oracle::to_plane(y, 16), P = oracle::to_plane(p, 16);
    against(bce_loss(Y, P), oracle::bce(y, p));
    against(dice_loss(Y, P), oracle::dice(y, p));
    against(inversion_loss(Y, P), oracle::inversion(y, p));
    against(tversky_loss(Y, P, {0.01, 0.99}), oracle::tversky(y, p, 0.01, 0.99));
  }
  o.need(worst <= kTol, "max |loss - oracle| " + fmt("%.1e", worst));

  // Background patches with at least 100 confident false positives.
  double dice_gap = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> y(1024, 0.0), p(1024);
    for (auto& v : p) v = 0.5 * u(rng);
    const int k = 100 + int(rng() % 401);
    for (int i = 0; i < k; ++i) p[std::size_t(i)] = 1.0;
    std::shuffle(p.begin(), p.end(), rng);
    dice_gap = std::max(dice_gap, std::abs(dice_loss(oracle::to_plane(y, 32), oracle::to_plane(p, 32)) - 1.0));
  }
  o.need(dice_gap < 1e-2, "Dice degeneracy max |Dice - 1| " + fmt("%.2e", dice_gap));

  // Inversion loss strictly increases with the number of false positives.
  int monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> y(1024, 0.0), p(1024);
    for (auto& v : p) v = 1e-7 + 0.1 * u(rng);
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const double hi = 0.6 + 0.4 * u(rng);
    double last = -1;
    bool ok = true;
    int placed = 0;
    for (int k : {1, 10, 50}) {
      for (; placed < k; ++placed) p[order[std::size_t(placed)]] = hi;
      const double v = inversion_loss(oracle::to_plane(y, 32), oracle::to_plane(p, 32));
      ok = ok && v > last && std::abs(v - oracle::inversion(y, p)) <= kTol;
      last = v;
    }
    monotone += ok;
  }
  o.need(monotone == 1000, "inversion monotone on " + std::to_string(monotone) + "/1000");
}

// ---- 4 ---------------------------------------------------------------------

void dice_f1(Outcome& o, double&) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0, 1);
  LossConfig tiny;
  tiny.epsilon = 1e-12;
  double worst = 0;
  int pairs = 0;
  while (pairs < 1000) {
    const BinaryMask gt = oracle::random_mask(rng, 32, 32, 0.01 + 0.3 * u(rng));
    const BinaryMask pred = oracle::random_mask(rng, 32, 32, 0.4 * u(rng));
    // An empty ground truth is the degenerate convention, checked under 5.
    if (gt.count() == 0) continue;
    ++pairs;
    const double f1 = metrics_from_tally(tally_with_tolerance(pred, gt, 0)).f1;
    worst = std::max(worst, std::abs(1.0 - dice_loss(gt.as_plane(), pred.as_plane(), tiny) - f1));
  }
  o.need(worst <= 1e-6, "1000 pairs, max |1 - Dice - F1| " + fmt("%.1e", worst));
}

// ---- 5 ---------------------------------------------------------------------

void tolerance_metrics(Outcome& o, double&) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0, 1);
  int exact = 0, exact_t = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const BinaryMask gt = oracle::random_mask(rng, 40, 30, 0.15 * u(rng));
    const BinaryMask pred = oracle::random_mask(rng, 40, 30, 0.15 * u(rng));
    exact += tally_with_tolerance(pred, gt, 0) == oracle::brute_tally(pred, gt, 0);
    const double t = 0.5 + 4.5 * u(rng);
    exact_t += tally_with_tolerance(pred, gt, t) == oracle::brute_tally(pred, gt, t);
  }
  o.need(exact == 200, "t=0 brute-force equal " + std::to_string(exact) + "/200");
  o.need(exact_t == 200, "random t brute-force equal " + std::to_string(exact_t) + "/200");

  BinaryMask g(12, 12), p(12, 12);
  g.set(5, 5, true);
  p.set(6, 6, true);
  const CountTally t0 = tally_with_tolerance(p, g, 0), t2 = tally_with_tolerance(p, g, 2);
  o.need(t0 == CountTally{0, 1, 1} && t2 == CountTally{1, 0, 0}, "(5,5)/(6,6): t=0 FP+FN, t=2 TP");

  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const BinaryMask gt = oracle::random_mask(rng, 48, 48, 0.02 + 0.1 * u(rng));
    const BinaryMask pred = oracle::random_mask(rng, 48, 48, 0.02 + 0.1 * u(rng));
    double last = -1;
    bool ok = true;
    for (double t : {0.0, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0}) {
      const double f1 = metrics_from_tally(tally_with_tolerance(pred, gt, t)).f1;
      ok = ok && f1 >= last;
      last = f1;
    }
    monotone += ok;
  }
  o.need(monotone == 100, "F1 monotone in t on " + std::to_string(monotone) + "/100");

  // All-white prediction (no crack pixel) against a cracked ground truth.
  BinaryMask crack(16, 16);
  for (int x = 0; x < 16; ++x) crack.set(8, x, true);
  const Metrics white = metrics_from_tally(tally_with_tolerance(BinaryMask(16, 16), crack, 2));
  o.need(white.precision == 1.0 && white.recall == 0.0 && white.f1 == 0.0,
         "all-white (Pr, Re, F1) = (" + fmt("%g", white.precision) + ", " + fmt("%g", white.recall) + ", " +
             fmt("%g", white.f1) + ")");
}

// ---- 6 ---------------------------------------------------------------------

void orientation_score(Outcome& o, double& limit) {
  limit = 30.0;
  const CakeWaveletStack st;
  o.need(st.n_orientations() == 16, std::to_string(st.n_orientations()) + " orientations");
  const Plane f = oracle::pink_noise(256, 3);
  const OrientationScore U = lift(f, st);
  const double rec = oracle::relative_l2(reconstruct(U), bandpass(f, st));
  o.need(rec <= 0.01, "256^2 reconstruction rel. L2 " + fmt("%.2e", rec));
  double rot = 0;
  for (int k : {1, 3}) rot = std::max(rot, oracle::rotation_covariance_error(st, k));
  o.need(rot <= 0.02, "rotation covariance " + fmt("%.4f", rot));
  const auto r = oracle::line_edge_ratios(st);
  o.need(r.line >= 3 && r.edge >= 3, "line Re/Im " + fmt("%.1f", r.line) + ", edge Im/Re " + fmt("%.1f", r.edge));
}

// ---- 7 ---------------------------------------------------------------------

double shortest_turn(double a, double b) { return std::remainder(b - a, 2 * std::numbers::pi); }

void fast_marching(Outcome& o, double&) {
  const MetricParams p;
  std::mt19937_64 rng(707);
  double worst = 0, sum = 0;
  std::int64_t nodes = 0, within = 0;
  double fwd = std::numeric_limits<double>::infinity();
  int paths = 0;
  for (int s = 0; s < 20; ++s) {
    const CostVolume c = oracle::random_cost(rng, 32, 32, 8);
    const GridNode seed{int(rng() % 32), int(rng() % 32), int(rng() % 8)};
    const DistanceMap d = fast_march(c, {}, p, seed);
    const auto g = oracle::graph_distances(c, p, seed);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]) || g[i] == 0) continue;
      const double e = std::abs(d.d[i] - g[i]) / g[i];
      worst = std::max(worst, e);
      sum += e;
      ++nodes;
      within += e <= 0.10;
    }
    // Forward motion along backtracked paths, measured at the step midpoint.
    for (int k = 0; k < 25; ++k) {
      const GridNode t{int(rng() % 32), int(rng() % 32), int(rng() % 8)};
      const LiftedPath path = backtrack(d, t, c.orientation_step());
      ++paths;
      for (std::size_t i = 1; i < path.size(); ++i) {
        const double th = path[i - 1].theta + 0.5 * shortest_turn(path[i - 1].theta, path[i].theta);
        fwd = std::min(fwd, (path[i].x - path[i - 1].x) * std::cos(th) + (path[i].y - path[i - 1].y) * std::sin(th));
      }
    }
  }
  o.need(worst <= 0.10, "vs Dijkstra oracle: worst " + fmt("%.1f%%", 100 * worst) + ", mean " +
                            fmt("%.1f%%", 100 * sum / double(nodes)) + ", within 10% on " +
                            fmt("%.1f%%", 100.0 * double(within) / double(nodes)) + " of " + std::to_string(nodes) +
                            " nodes");

  const CostVolume ones(64, 48, 16);
  double aligned = 0;
  for (double xi : {0.5, 1.0, 2.0}) {
    MetricParams q;
    q.xi = xi;
    for (int j : {0, 2, 4}) {  // 0, pi/4, pi/2
      const int dx = j == 4 ? 0 : 1, dy = j == 0 ? 0 : 1;
      const GridNode seed{4, 4, j};
      const DistanceMap d = fast_march(ones, {}, q, seed);
      for (int t : {5, 10, 20, 40}) {
        const double len = t * std::hypot(dx, dy);
        aligned = std::max(aligned, std::abs(d.at({4 + dx * t, 4 + dy * t, j}) - xi * len) / (xi * len));
      }
    }
  }
  o.need(aligned <= 0.05, "aligned distance vs xi t: worst " + fmt("%.2f%%", 100 * aligned));

  // Doubling xi should double every distance.
  MetricParams q2 = p;
  q2.xi = 2 * p.xi;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (int s = 0; s < 5; ++s) {
    const CostVolume c = oracle::random_cost(rng, 32, 32, 8);
    const GridNode seed{int(rng() % 32), int(rng() % 32), int(rng() % 8)};
    const DistanceMap a = fast_march(c, {}, p, seed), b = fast_march(c, {}, q2, seed);
    for (std::size_t i = 0; i < a.d.size(); ++i) {
      if (!std::isfinite(a.d[i]) || a.d[i] == 0) continue;
      const double r = b.d[i] / (2 * a.d[i]);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  o.need(std::abs(lo - 1) <= 1e-9 && std::abs(hi - 1) <= 1e-9,
         "xi scaling d(2xi)/(2d) in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "]");
  o.need(fwd >= -1e-6, std::to_string(paths) + " backtracked paths, min forward step " + fmt("%.3f", fwd));
}

// ---- 8 ---------------------------------------------------------------------

void end_to_end(Outcome& o, double& limit) {
  limit = 300.0;
  const CakeWaveletStack st;
  const SyntheticParams sp;  // 512^2, widths 3-9, 2 distractors, noise 0.03
  int good = 0;
  double worst_rmse = 0, min_f1 = 1;
  CountTally total;
  for (int s = 0; s < 50; ++s) {
    const SyntheticCrack c = make_synthetic_crack(sp, 1000 + std::uint64_t(s));
    const Plane img = c.image.luma();
    const CrackTrack t = track_crack(lift(img, st), c.a, c.b);
    std::vector<Eigen::Vector2d> pts;
    for (const auto& v : t.vertices) pts.push_back({v.x, v.y});
    const double rmse = polyline_rmse(pts, c.centreline);
    good += rmse <= 2.0;
    worst_rmse = std::max(worst_rmse, rmse);
    const BinaryMask m = rasterize_mask(t.vertices, extract_widths(img, t.vertices), sp.width, sp.height);
    const CountTally tally = tally_with_tolerance(m, c.mask, 0);
    total += tally;
    min_f1 = std::min(min_f1, metrics_from_tally(tally).f1);
  }
  o.need(good >= 45, "track RMSE <= 2 px on " + std::to_string(good) + "/50 (worst " + fmt("%.2f", worst_rmse) + ")");
  const double f1 = metrics_from_tally(total).f1;
  o.need(f1 >= 0.90, "mask F1 at t=0 " + fmt("%.3f", f1) + " (per-image min " + fmt("%.3f", min_f1) + ")");
}

// ---- 9 ---------------------------------------------------------------------

struct Artifacts {
  std::string manifest;
  RasterImage patch;
  BinaryMask patch_mask;
  Bytes mask_png;
  std::string track, report;
};

Artifacts produce() {
  Artifacts a;
  const auto pool = oracle::synthetic_pool(300, 3000);
  const PatchManifest base = compose_ratio_dataset(pool, 200, 0.7, 11, "base");
  a.manifest = manifest_to_jsonl(base) + manifest_to_jsonl(extend_dataset(base, pool, 0.3, 12, "ext"));

  SyntheticParams sp;
  sp.width = sp.height = 256;
  const SyntheticCrack c = make_synthetic_crack(sp, 77);
  const Plane gray = c.image.luma();
  const RasterImage rgb(std::vector<Plane>{gray, Plane(0.9 * gray), Plane(0.8 * gray + 0.1)});
  const auto [patch, mask] = augment(extract_patch(rgb, {64, 64}, 128), extract_patch(c.mask, {64, 64}, 128),
                                     AugmentationConfig{}, 13);
  a.patch = patch;
  a.patch_mask = mask;

  const CrackTrack t = track_crack(c.image, c.a, c.b, {}, CakeWaveletStack{});
  const BinaryMask m = rasterize_mask(t.vertices, extract_widths(gray, t.vertices), sp.width, sp.height);
  a.mask_png = encode_mask(m);
  a.track = track_to_json(t, {});
  a.report = report_to_json(evaluate_dataset({{ProbabilityMap(m.as_plane()), c.mask, "s77"}}, 2.0));
  return a;
}

void determinism(Outcome& o, double&) {
  const Artifacts a = produce(), b = produce();
  o.need(a.manifest == b.manifest, "manifests");
  o.need(a.patch == b.patch && a.patch_mask == b.patch_mask, "augmented patches");
  o.need(a.mask_png == b.mask_png && a.track == b.track, "masks and tracks");
  o.need(a.report == b.report, "reports");
}

// ---- 10 --------------------------------------------------------------------

void schedules(Outcome& o, double&) {
  const ScheduleConfig cfg;
  double worst = 0;
  auto against = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  against(lr_at_epoch(cfg, 0), 0.001);
  against(lr_at_epoch(cfg, 1), 0.00099);
  against(lr_at_epoch(cfg, 2), 0.0009801);
  for (int e = 0; e <= 300; ++e) {
    double v = 0.001;
    for (int i = 0; i < e; ++i) v *= 0.99;
    against(lr_at_epoch(cfg, e), v);
  }
  for (double lam : {0.001, 0.0005, 0.02}) {
    const double want[] = {0.2401, 0.343, 0.49, 0.7};
    for (int n = 1; n <= 4; ++n) against(lr_at_stage(lam, cfg, n), want[n - 1] * lam);
  }
  o.need(worst <= 1e-12, "max deviation from closed form " + fmt("%.1e", worst));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&, double&)>>> criteria = {
      {"patch grid", patch_grid},
      {"dataset arithmetic", dataset_arithmetic},
      {"loss oracles", loss_oracles},
      {"dice/F1 duality", dice_f1},
      {"tolerance metrics", tolerance_metrics},
      {"orientation score", orientation_score},
      {"fast marching", fast_marching},
      {"end-to-end annotation", end_to_end},
      {"determinism", determinism},
      {"schedules", schedules},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    double limit = std::numeric_limits<double>::infinity();  // only where a budget is stated
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o, limit);
    } catch (const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    const double secs = oracle::seconds_since(t0);
    if (std::isfinite(limit))
      o.need(secs < limit, fmt("%.2f s", secs) + " < " + fmt("%g s", limit));
    else
      o.need(true, fmt("%.2f s", secs));
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
