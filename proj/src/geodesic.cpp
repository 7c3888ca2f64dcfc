#include "crackseg/geodesic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include <Eigen/Eigenvalues>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "crackseg/error.hpp"

namespace crackseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Slack on the forward constraint for steps that are exactly perpendicular.
constexpr double kForwardSlack = 1e-12;

struct Offset {
  int dx, dy, dj;
};

// The 26 neighbours of a lifted node, plus for each one the neighbours in the
// same theta layer that are 4-adjacent to it in the (dx, dy) plane. Those
// pairs span the segments the semi-Lagrangian update interpolates along.
struct Stencil {
  std::vector<Offset> offsets;
  std::vector<std::vector<int>> partners;

  Stencil() {
    for (int dj = -1; dj <= 1; ++dj)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (dx || dy || dj) offsets.push_back({dx, dy, dj});
    partners.resize(offsets.size());
    for (std::size_t a = 0; a < offsets.size(); ++a) {
      for (std::size_t b = 0; b < offsets.size(); ++b) {
        const Offset& p = offsets[a];
        const Offset& q = offsets[b];
        if (p.dj == q.dj && std::abs(p.dx - q.dx) + std::abs(p.dy - q.dy) == 1) {
          partners[a].push_back(static_cast<int>(b));
        }
      }
    }
  }
};

const Stencil& stencil() {
  static const Stencil s;
  return s;
}

double wrap_theta(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0 ? t + kTwoPi : t;
}

class Marcher {
 public:
  Marcher(const CostVolume& cost, const HessianField& hessian, const MetricParams& params, const MarchOptions& opts)
      : cost_(cost), hessian_(hessian), p_(params), opts_(opts) {
    w_ = cost.width();
    h_ = cost.height();
    n_ = cost.n_orientations();
    dtheta_ = cost.orientation_step();
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < 3; ++k) {
        const double th = j * dtheta_ - (k - 1) * 0.5 * dtheta_;
        mid_n_.push_back(Eigen::Vector2d(std::cos(th), std::sin(th)));
      }
    }
    use_data_ = params.lambda_data > 0.0;
    if (use_data_) {
      if (hessian.empty()) throw std::invalid_argument("fast_march: lambda_data > 0 needs a Hessian field");
      if (hessian.width() != w_ || hessian.height() != h_ || hessian.n_orientations() != n_) {
        throw ShapeError("fast_march: Hessian field and cost volume differ in shape");
      }
      data_cache_.assign(total(), std::array<float, 6>{std::numeric_limits<float>::quiet_NaN()});
    }
  }

  std::size_t total() const { return static_cast<std::size_t>(w_) * h_ * n_; }

  DistanceMap run(const std::vector<GridNode>& seeds) {
    DistanceMap dm;
    dm.width = w_;
    dm.height = h_;
    dm.n_orientations = n_;
    dm.d.assign(total(), kInf);
    dm.parent.assign(total(), -1);
    dm.order.assign(total(), -1);
    std::vector<std::uint8_t> stop(opts_.stop_at.empty() ? 0 : total(), 0);
    for (const auto& s : opts_.stop_at) stop[checked_index(dm, s, "stop node")] = 1;

    using Entry = std::pair<double, std::int32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (const auto& s : seeds) {
      const std::size_t i = checked_index(dm, s, "seed");
      dm.d[i] = 0.0;
      heap.push({0.0, static_cast<std::int32_t>(i)});
    }
    const Stencil& st = stencil();
    std::int32_t rank = 0;
    while (!heap.empty()) {
      const auto [dv, yi] = heap.top();
      heap.pop();
      if (dm.order[static_cast<std::size_t>(yi)] >= 0 || dv != dm.d[static_cast<std::size_t>(yi)]) continue;
      dm.order[static_cast<std::size_t>(yi)] = rank++;
      if (!stop.empty() && stop[static_cast<std::size_t>(yi)]) break;
      const GridNode y = dm.node(static_cast<std::size_t>(yi));

      for (std::size_t a = 0; a < st.offsets.size(); ++a) {
        const Offset& o = st.offsets[a];
        const GridNode x{y.x + o.dx, y.y + o.dy, (y.j + o.dj + n_) % n_};
        if (x.x < 0 || x.y < 0 || x.x >= w_ || x.y >= h_) continue;
        const std::size_t xi = dm.index(x);
        if (dm.order[xi] >= 0) continue;
        const int layer = o.dj + 1;
        const Eigen::Matrix3d m = form(x, layer);
        const Eigen::Vector2d& nm = mid_n_[static_cast<std::size_t>(x.j) * 3 + static_cast<std::size_t>(layer)];
        const Eigen::Vector3d va(o.dx, o.dy, o.dj);
        const double fa = nm.x() * o.dx + nm.y() * o.dy;

        double best = dm.d[xi];
        std::int32_t best_parent = dm.parent[xi];
        auto offer = [&](double value, std::int32_t parent) {
          value = std::max(value, dv);  // keep acceptance order monotone
          if (value < best) {
            best = value;
            best_parent = parent;
          }
        };

        if (!opts_.forward_only || fa >= -kForwardSlack) offer(dv + std::sqrt(va.dot(m * va)), yi);

        if (opts_.scheme == MarchScheme::SemiLagrangian) {
          for (int b : st.partners[a]) {
            const Offset& q = st.offsets[static_cast<std::size_t>(b)];
            const GridNode z{x.x - q.dx, x.y - q.dy, ((x.j - q.dj) % n_ + n_) % n_};
            if (z.x < 0 || z.y < 0 || z.x >= w_ || z.y >= h_) continue;
            const std::size_t zi = dm.index(z);
            if (dm.order[zi] < 0) continue;
            const Eigen::Vector3d vb(q.dx, q.dy, q.dj);
            const double fb = nm.x() * q.dx + nm.y() * q.dy;
            pair_update(dv, dm.d[zi], va, vb, fa, fb, m, yi, static_cast<std::int32_t>(zi), offer);
          }
        }
        if (best < dm.d[xi]) {
          dm.d[xi] = best;
          dm.parent[xi] = best_parent;
          heap.push({best, static_cast<std::int32_t>(xi)});
        }
      }
    }
    dm.accepted = rank;
    // Tentative values of nodes never accepted are not distances.
    for (std::size_t i = 0; i < dm.d.size(); ++i) {
      if (dm.order[i] < 0) {
        dm.d[i] = kInf;
        dm.parent[i] = -1;
      }
    }
    return dm;
  }

 private:
  std::size_t checked_index(const DistanceMap& dm, const GridNode& p, const char* what) const {
    if (p.x < 0 || p.y < 0 || p.j < 0 || p.x >= w_ || p.y >= h_ || p.j >= n_) {
      throw std::out_of_range(std::string("fast_march: ") + what + " (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ", " + std::to_string(p.j) + ") outside the " +
                              std::to_string(w_) + "x" + std::to_string(h_) + "x" + std::to_string(n_) + " grid");
    }
    return dm.index(p);
  }

  // min over s in [0, 1] of (1 - s) da + s db + sqrt(v(s)' M v(s)),
  // v(s) = (1 - s) va + s vb, restricted to v(s) . n >= 0 when forward-only.
  template <typename Offer>
  void pair_update(double da, double db, const Eigen::Vector3d& va, const Eigen::Vector3d& vb, double fa, double fb,
                   const Eigen::Matrix3d& m, std::int32_t ia, std::int32_t ib, Offer& offer) const {
    double lo = 0.0, hi = 1.0;
    if (opts_.forward_only) {
      if (fa < -kForwardSlack && fb < -kForwardSlack) return;
      if (fa < -kForwardSlack) lo = fa / (fa - fb);
      if (fb < -kForwardSlack) hi = fa / (fa - fb);
    }
    const Eigen::Vector3d u = vb - va;
    const double A = u.dot(m * u), B = va.dot(m * u), Cq = va.dot(m * va);
    const double delta = db - da;
    auto value = [&](double s) { return da + s * delta + std::sqrt(std::max(0.0, A * s * s + 2.0 * B * s + Cq)); };
    double s_best = value(lo) <= value(hi) ? lo : hi;
    double v = value(s_best);
    if (A > delta * delta) {
      const double disc = std::max(0.0, A * Cq - B * B);
      // (A s + B) = -delta sqrt(q(s)) with q(s) = disc / (A - delta^2) at the optimum.
      const double cand = (-B - delta * std::sqrt(disc / (A - delta * delta))) / A;
      if (cand > lo && cand < hi && value(cand) < v) {
        s_best = cand;
        v = value(cand);
      }
    }
    // Predecessor: the endpoint nearer the optimal direction, else the other
    // one; it must be a forward step and strictly below the new value so
    // backtracking stays monotone.
    const bool ok_a = (!opts_.forward_only || fa >= -kForwardSlack) && da < v;
    const bool ok_b = (!opts_.forward_only || fb >= -kForwardSlack) && db < v;
    std::int32_t parent = -1;
    if (ok_a && ok_b) parent = s_best <= 0.5 ? ia : ib;
    else if (ok_a) parent = ia;
    else if (ok_b) parent = ib;
    if (parent < 0) return;
    offer(v, parent);
  }

  // G as a quadratic form in grid displacements (dx, dy, dj) arriving at x
  // from theta layer `layer` (dj + 1); n is taken at the step midpoint.
  Eigen::Matrix3d form(const GridNode& x, int layer) {
    const double c = cost_(x.x, x.y, x.j);
    const Eigen::Vector2d& nm = mid_n_[static_cast<std::size_t>(x.j) * 3 + static_cast<std::size_t>(layer)];
    const double xi2 = p_.xi * p_.xi;
    const double side = xi2 / (p_.zeta * p_.zeta);
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m.topLeftCorner<2, 2>() = side * Eigen::Matrix2d::Identity() + (xi2 - side) * nm * nm.transpose();
    m(2, 2) = dtheta_ * dtheta_;
    if (use_data_) {
      // lambda * S Hn^2 S, Hn = H / rho(H), S = diag(1, 1, L dtheta).
      auto& cached = data_cache_[(static_cast<std::size_t>(x.j) * h_ + x.y) * w_ + x.x];
      if (std::isnan(cached[0])) {
        const Eigen::Matrix3d hm = hessian_.at(x.x, x.y, x.j);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hm, Eigen::EigenvaluesOnly);
        const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
        Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
        if (rho > 0.0) {
          const Eigen::Vector3d s(1.0, 1.0, p_.stiffness_length * dtheta_);
          const Eigen::Matrix3d hs = s.asDiagonal() * (hm / rho);
          q = hs * hs.transpose();
        }
        cached = {float(q(0, 0)), float(q(0, 1)), float(q(0, 2)), float(q(1, 1)), float(q(1, 2)), float(q(2, 2))};
      }
      Eigen::Matrix3d q;
      q << cached[0], cached[1], cached[2], cached[1], cached[3], cached[4], cached[2], cached[4], cached[5];
      m += p_.lambda_data * q;
    }
    return c * c * m;
  }

  const CostVolume& cost_;
  const HessianField& hessian_;
  MetricParams p_;
  MarchOptions opts_;
  int w_ = 0, h_ = 0, n_ = 0;
  double dtheta_ = 0.0;
  bool use_data_ = false;
  std::vector<Eigen::Vector2d> mid_n_;
  std::vector<std::array<float, 6>> data_cache_;
};

void check_endpoint(PixelPos p, int w, int h, const char* name) {
  if (p.x < 0 || p.y < 0 || p.x >= w || p.y >= h) {
    throw std::out_of_range(std::string("track_crack: endpoint ") + name + " (" + std::to_string(p.x) + ", " +
                            std::to_string(p.y) + ") outside the " + std::to_string(w) + "x" + std::to_string(h) +
                            " image");
  }
}

double path_mean_cost(const CostVolume& cost, const LiftedPath& path) {
  if (path.empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : path) s += cost(v.x, v.y, v.j);
  return s / double(path.size());
}

void assign_arc_length(LiftedPath& path) {
  if (path.empty()) return;
  std::vector<double> acc(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& a = path[i - 1];
    const auto& b = path[i];
    double dj = std::abs(b.theta - a.theta);
    dj = std::min(dj, kTwoPi - dj);
    acc[i] = acc[i - 1] + std::sqrt(double(b.x - a.x) * (b.x - a.x) + double(b.y - a.y) * (b.y - a.y) + dj * dj);
  }
  const double total = acc.back();
  for (std::size_t i = 0; i < path.size(); ++i) path[i].t = total > 0 ? acc[i] / total : 0.0;
}

}  // namespace

void MetricParams::validate() const {
  if (!(xi > 0.0) || !std::isfinite(xi)) throw std::invalid_argument("MetricParams: xi must be > 0");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("MetricParams: zeta must lie in (0, 1]");
  if (!(lambda_data >= 0.0)) throw std::invalid_argument("MetricParams: lambda_data must be >= 0");
  if (!(cost_mu >= 0.0)) throw std::invalid_argument("MetricParams: cost_mu must be >= 0");
  if (!(cost_power > 0.0)) throw std::invalid_argument("MetricParams: cost_power must be > 0");
  if (!(stiffness_length > 0.0)) throw std::invalid_argument("MetricParams: stiffness_length must be > 0");
}

CostVolume::CostVolume(int width, int height, int n_orientations, double fill)
    : width_(width), height_(height), n_(n_orientations),
      slabs_(static_cast<std::size_t>(n_orientations), Plane::Constant(height, width, fill)) {}

double CostVolume::orientation_step() const { return kTwoPi / n_; }

CostVolume& CostVolume::operator*=(double s) {
  for (auto& p : slabs_) p *= s;
  return *this;
}

CostVolume compute_cost(const OrientationScore& score, const MetricParams& params) {
  params.validate();
  const int n = score.n_orientations();
  CostVolume c(score.width(), score.height(), n);
  double mx = 0.0;
  for (int j = 0; j < n; ++j) mx = std::max(mx, (-score.slab(j).real()).maxCoeff());
  if (!(mx > 0.0)) {
    spdlog::warn("compute_cost: no dark-line response in the score; using uniform cost");
    return c;
  }
  for (int j = 0; j < n; ++j) {
    const Plane r = (-score.slab(j).real()).max(0.0) / mx;
    c.slab(j) = 1.0 / (1.0 + params.cost_mu * r.pow(params.cost_power));
  }
  return c;
}

HessianField::HessianField(const OrientationScore& score, double stiffness_length)
    : width_(score.width()), height_(score.height()), n_(score.n_orientations()) {
  if (!(stiffness_length > 0.0)) throw std::invalid_argument("HessianField: stiffness length must be > 0");
  step_ = stiffness_length * score.orientation_step();
  magnitude_.resize(static_cast<std::size_t>(width_) * height_ * n_);
  for (int j = 0; j < n_; ++j) {
    const auto& s = score.slab(j);
    float* out = magnitude_.data() + static_cast<std::size_t>(j) * width_ * height_;
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = static_cast<float>(std::abs(s.data()[i]));
  }
}

float HessianField::mag(int x, int y, int j) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  j = ((j % n_) + n_) % n_;
  return magnitude_[(static_cast<std::size_t>(j) * height_ + y) * width_ + x];
}

Eigen::Matrix3d HessianField::at(int x, int y, int j) const {
  auto m = [&](int dx, int dy, int dj) { return double(mag(x + dx, y + dy, j + dj)); };
  const double c = m(0, 0, 0);
  Eigen::Matrix3d h;
  h(0, 0) = m(1, 0, 0) - 2 * c + m(-1, 0, 0);
  h(1, 1) = m(0, 1, 0) - 2 * c + m(0, -1, 0);
  h(2, 2) = (m(0, 0, 1) - 2 * c + m(0, 0, -1)) / (step_ * step_);
  h(0, 1) = h(1, 0) = (m(1, 1, 0) - m(1, -1, 0) - m(-1, 1, 0) + m(-1, -1, 0)) / 4.0;
  h(0, 2) = h(2, 0) = (m(1, 0, 1) - m(1, 0, -1) - m(-1, 0, 1) + m(-1, 0, -1)) / (4.0 * step_);
  h(1, 2) = h(2, 1) = (m(0, 1, 1) - m(0, 1, -1) - m(0, -1, 1) + m(0, -1, -1)) / (4.0 * step_);
  return h;
}

double hessian_data_term(const Eigen::Matrix3d& hessian, const Eigen::Vector3d& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw std::invalid_argument("hessian_data_term: direction is not unit");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hessian, Eigen::EigenvaluesOnly);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho > 0.0)) return 0.0;
  return std::clamp((hessian * direction).squaredNorm() / (rho * rho), 0.0, 1.0);
}

double hessian_data_term(const HessianField& field, const GridNode& p, const Eigen::Vector3d& direction) {
  return hessian_data_term(field.at(p.x, p.y, p.j), direction);
}

double metric_speed(const MetricParams& params, double cost, double data_term, const Eigen::Vector2d& xdot,
                    const Eigen::Vector2d& ndot, const Eigen::Vector2d& n, bool forward_only) {
  if (std::abs(n.norm() - 1.0) > 1e-9) throw std::invalid_argument("metric_speed: n is not a unit vector");
  const double a = xdot.dot(n);
  if (forward_only && a < -kForwardSlack) return kInf;
  const double x2 = xdot.squaredNorm();
  const double side = std::max(0.0, x2 - a * a);
  const double xi2 = params.xi * params.xi;
  const double L = params.stiffness_length;
  const double ps2 = x2 + L * L * ndot.squaredNorm();
  const double g = xi2 * a * a + xi2 / (params.zeta * params.zeta) * side + ndot.squaredNorm() +
                   params.lambda_data * data_term * ps2;
  return cost * std::sqrt(g);
}

GridNode DistanceMap::node(std::size_t i) const {
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  const int j = static_cast<int>(i / plane);
  const std::size_t r = i % plane;
  return {static_cast<int>(r % static_cast<std::size_t>(width)), static_cast<int>(r / static_cast<std::size_t>(width)), j};
}

DistanceMap fast_march(const CostVolume& cost, const HessianField& hessian, const MetricParams& params,
                       const std::vector<GridNode>& seeds, const MarchOptions& options) {
  params.validate();
  if (seeds.empty()) throw std::invalid_argument("fast_march: no seeds");
  Marcher m(cost, hessian, params, options);
  return m.run(seeds);
}

DistanceMap fast_march(const CostVolume& cost, const HessianField& hessian, const MetricParams& params,
                       const GridNode& seed, const MarchOptions& options) {
  return fast_march(cost, hessian, params, std::vector<GridNode>{seed}, options);
}

LiftedPath backtrack(const DistanceMap& dist, const GridNode& target, double orientation_step) {
  if (target.x < 0 || target.y < 0 || target.j < 0 || target.x >= dist.width || target.y >= dist.height ||
      target.j >= dist.n_orientations) {
    throw std::out_of_range("backtrack: target outside the grid");
  }
  std::size_t i = dist.index(target);
  if (!std::isfinite(dist.d[i])) {
    throw UnreachableError("backtrack: target (" + std::to_string(target.x) + ", " + std::to_string(target.y) +
                           ", " + std::to_string(target.j) + ") was not reached");
  }
  LiftedPath path;
  while (true) {
    const GridNode p = dist.node(i);
    path.push_back({p.x, p.y, p.j, p.j * orientation_step, 0.0});
    const std::int32_t next = dist.parent[i];
    if (next < 0) break;
    if (!(dist.d[static_cast<std::size_t>(next)] < dist.d[i])) {
      throw std::logic_error("backtrack: distance does not decrease along predecessors");
    }
    i = static_cast<std::size_t>(next);
  }
  std::reverse(path.begin(), path.end());
  assign_arc_length(path);
  return path;
}

std::vector<TrackVertex> project_path(const LiftedPath& path) {
  std::vector<TrackVertex> out;
  for (const auto& v : path) {
    if (!out.empty() && out.back().x == v.x && out.back().y == v.y) continue;
    out.push_back({double(v.x), double(v.y), v.theta});
  }
  const std::size_t n = out.size();
  if (n < 2) return out;
  constexpr std::size_t k = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= k ? i - k : 0;
    const std::size_t b = std::min(n - 1, i + k);
    out[i].theta = wrap_theta(std::atan2(out[b].y - out[a].y, out[b].x - out[a].x));
  }
  return out;
}

CrackTrack track_crack(const OrientationScore& score, PixelPos a, PixelPos b, const TrackParams& params) {
  params.metric.validate();
  check_endpoint(a, score.width(), score.height(), "A");
  check_endpoint(b, score.width(), score.height(), "B");
  if (a == b) throw std::invalid_argument("track_crack: endpoints are identical");

  const CostVolume cost = compute_cost(score, params.metric);
  HessianField hessian;
  if (params.metric.lambda_data > 0.0) hessian = HessianField(score, params.metric.stiffness_length);
  const int n = score.n_orientations();
  const double step = score.orientation_step();
  std::vector<GridNode> at_a, at_b;
  for (int j = 0; j < n; ++j) {
    at_a.push_back({a.x, a.y, j});
    at_b.push_back({b.x, b.y, j});
  }

  MarchOptions opts;
  opts.scheme = params.scheme;
  opts.forward_only = !params.symmetric;
  CrackTrack out;

  if (!params.symmetric) {
    opts.stop_at = at_b;
    const DistanceMap d = fast_march(cost, hessian, params.metric, at_a, opts);
    out.visited = d.accepted;
    GridNode best = at_b[0];
    for (const auto& q : at_b)
      if (d.at(q) < d.at(best)) best = q;
    if (!std::isfinite(d.at(best))) {
      throw UnreachableError("track_crack: endpoint B is unreachable from endpoint A");
    }
    out.lifted = backtrack(d, best, step);
    out.distance = d.at(best);
  } else {
    opts.stop_at = at_b;
    const DistanceMap da = fast_march(cost, hessian, params.metric, at_a, opts);
    opts.stop_at = at_a;
    const DistanceMap db = fast_march(cost, hessian, params.metric, at_b, opts);
    out.visited = da.accepted + db.accepted;
    std::size_t meet = 0;
    double best = kInf;
    for (std::size_t i = 0; i < da.d.size(); ++i) {
      const double s = da.d[i] + db.d[i];
      if (s < best) {
        best = s;
        meet = i;
      }
    }
    if (!std::isfinite(best)) throw UnreachableError("track_crack: the endpoints are not connected");
    LiftedPath first = backtrack(da, da.node(meet), step);
    LiftedPath second = backtrack(db, db.node(meet), step);
    second.pop_back();  // the meeting node is already the end of `first`
    first.insert(first.end(), second.rbegin(), second.rend());
    assign_arc_length(first);
    out.lifted = std::move(first);
    out.distance = best;
  }
  out.vertices = project_path(out.lifted);
  out.mean_cost = path_mean_cost(cost, out.lifted);
  return out;
}

CrackTrack track_crack(const RasterImage& image, PixelPos a, PixelPos b, const TrackParams& params,
                       const CakeWaveletStack& stack) {
  check_endpoint(a, image.width(), image.height(), "A");
  check_endpoint(b, image.width(), image.height(), "B");
  const Plane gray = image.channels() == 1 ? image.channel(0) : image.luma();
  return track_crack(lift(gray, stack), a, b, params);
}

std::string track_to_json(const CrackTrack& track, const TrackParams& params, int indent) {
  nlohmann::json j;
  j["track"] = nlohmann::json::array();
  for (const auto& v : track.vertices) j["track"].push_back({{"x", v.x}, {"y", v.y}, {"theta", v.theta}});
  j["distance"] = track.distance;
  j["mean_cost"] = track.mean_cost;
  const auto& m = params.metric;
  j["params"] = {{"xi", m.xi},
                 {"zeta", m.zeta},
                 {"lambda", m.lambda_data},
                 {"cost_mu", m.cost_mu},
                 {"cost_power", m.cost_power},
                 {"stiffness_length", m.stiffness_length},
                 {"symmetric", params.symmetric}};
  return j.dump(indent);
}

CrackTrack track_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("track_from_json: ") + e.what());
  }
  const nlohmann::json& arr = j.is_array() ? j : j.value("track", nlohmann::json());
  if (!arr.is_array()) throw std::invalid_argument("track_from_json: missing \"track\" array");
  CrackTrack t;
  for (const auto& v : arr) {
    if (!v.is_object() || !v.contains("x") || !v.contains("y") || !v["x"].is_number() || !v["y"].is_number()) {
      throw std::invalid_argument("track_from_json: every vertex needs numeric x and y");
    }
    t.vertices.push_back({v["x"].get<double>(), v["y"].get<double>(), v.value("theta", 0.0)});
  }
  return t;
}

TrackParams track_params_from_json(const std::string& text, TrackParams base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("track params: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("track params: expected a JSON object");
  auto num = [&](const std::string& key, const nlohmann::json& v) {
    if (!v.is_number()) throw std::invalid_argument("track params: \"" + key + "\" must be a number");
    return v.get<double>();
  };
  auto& m = base.metric;
  for (const auto& [key, v] : j.items()) {
    if (key == "xi") m.xi = num(key, v);
    else if (key == "zeta") m.zeta = num(key, v);
    else if (key == "lambda") m.lambda_data = num(key, v);
    else if (key == "cost_mu") m.cost_mu = num(key, v);
    else if (key == "cost_power") m.cost_power = num(key, v);
    else if (key == "stiffness_length") m.stiffness_length = num(key, v);
    else if (key == "symmetric") {
      if (!v.is_boolean()) throw std::invalid_argument("track params: \"symmetric\" must be a boolean");
      base.symmetric = v.get<bool>();
    } else if (key == "scheme") {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "semi_lagrangian") base.scheme = MarchScheme::SemiLagrangian;
      else if (s == "dijkstra") base.scheme = MarchScheme::Dijkstra;
      else throw std::invalid_argument("track params: scheme must be \"semi_lagrangian\" or \"dijkstra\"");
    } else {
      throw std::invalid_argument("track params: unknown key \"" + key + "\"");
    }
  }
  m.validate();
  return base;
}

}  // namespace crackseg
