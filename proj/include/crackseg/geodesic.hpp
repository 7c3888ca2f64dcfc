#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crackseg/orientation.hpp"
#include "crackseg/raster.hpp"

namespace crackseg {

/// Parameters of the data-driven left-invariant metric on R^2 x S^1.
struct MetricParams {
  double xi = 1.0;                // cost of forward motion per pixel, relative to turning per radian
  double zeta = 0.1;              // sideward motion costs xi / zeta per pixel
  double lambda_data = 0.0;       // weight of the Hessian data term
  double cost_mu = 100.0;         // C = 1 / (1 + mu * r^q), r the normalised dark-line response
  double cost_power = 2.0;
  double stiffness_length = 8.0;  // pixels per radian when mixing theta into the Hessian

  void validate() const;
};

/// Node of the lifted grid: pixel (x, y) and orientation slab j.
struct GridNode {
  int x = 0;
  int y = 0;
  int j = 0;
  friend bool operator==(const GridNode&, const GridNode&) = default;
};

/// Values in (0, 1] on the orientation score's grid; low on dark lines.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, int n_orientations, double fill = 1.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int n_orientations() const { return n_; }
  double orientation_step() const;

  double operator()(int x, int y, int j) const { return slabs_[static_cast<std::size_t>(j)](y, x); }
  Plane& slab(int j) { return slabs_.at(static_cast<std::size_t>(j)); }
  const Plane& slab(int j) const { return slabs_.at(static_cast<std::size_t>(j)); }

  /// Scales every value; doubling the cost doubles every distance.
  CostVolume& operator*=(double s);

 private:
  int width_ = 0, height_ = 0, n_ = 0;
  std::vector<Plane> slabs_;
};

/// C = (1 + mu * (max(0, -Re U) / max)^q)^-1. An all-zero response gives C = 1
/// everywhere (and a logged warning).
CostVolume compute_cost(const OrientationScore& score, const MetricParams& params);

/// Hessian of |U| over (x, y, L * theta), by central differences; periodic in
/// theta, clamped at the image border. Evaluated on demand.
class HessianField {
 public:
  HessianField() = default;
  HessianField(const OrientationScore& score, double stiffness_length);

  bool empty() const { return magnitude_.empty(); }
  int width() const { return width_; }
  int height() const { return height_; }
  int n_orientations() const { return n_; }
  Eigen::Matrix3d at(int x, int y, int j) const;

 private:
  float mag(int x, int y, int j) const;
  int width_ = 0, height_ = 0, n_ = 0;
  double step_ = 1.0;  // theta step in scaled units
  std::vector<float> magnitude_;
};

/// max_q |H(d, q)|^2 / max_{p,q} |H(p, q)|^2 = |H d|^2 / rho(H)^2 for a unit
/// direction d. Zero Hessian gives 0.
double hessian_data_term(const Eigen::Matrix3d& hessian, const Eigen::Vector3d& direction);
double hessian_data_term(const HessianField& field, const GridNode& p, const Eigen::Vector3d& direction);

/// sqrt(G_p(pdot, pdot)) for velocity (xdot, ndot) at orientation n. The data
/// term weighs |pdot|^2 taken in (x, y, L * theta) units. Returns +inf when
/// xdot . n < 0 and the forward constraint is on. n must be a unit vector.
double metric_speed(const MetricParams& params, double cost, double data_term, const Eigen::Vector2d& xdot,
                    const Eigen::Vector2d& ndot, const Eigen::Vector2d& n, bool forward_only = true);

enum class MarchScheme { SemiLagrangian, Dijkstra };

struct MarchOptions {
  MarchScheme scheme = MarchScheme::SemiLagrangian;
  bool forward_only = true;
  /// Stop as soon as any of these nodes is accepted (all nodes if empty).
  std::vector<GridNode> stop_at;
};

struct DistanceMap {
  int width = 0, height = 0, n_orientations = 0;
  std::vector<double> d;               // +inf where not reached
  std::vector<std::int32_t> parent;    // flat index of the predecessor, -1 for seeds / unreached
  std::vector<std::int32_t> order;     // acceptance rank, -1 if never accepted
  std::int64_t accepted = 0;

  std::size_t index(const GridNode& p) const {
    return (static_cast<std::size_t>(p.j) * height + p.y) * width + p.x;
  }
  GridNode node(std::size_t i) const;
  double at(const GridNode& p) const { return d[index(p)]; }
};

/// Anisotropic fast marching from `seeds` (distance 0). `hessian` may be
/// empty when lambda_data == 0.
DistanceMap fast_march(const CostVolume& cost, const HessianField& hessian, const MetricParams& params,
                       const std::vector<GridNode>& seeds, const MarchOptions& options = {});
DistanceMap fast_march(const CostVolume& cost, const HessianField& hessian, const MetricParams& params,
                       const GridNode& seed, const MarchOptions& options = {});

struct LiftedVertex {
  int x = 0, y = 0, j = 0;
  double theta = 0.0;
  double t = 0.0;  // normalised arc length, 0 at the seed
};
using LiftedPath = std::vector<LiftedVertex>;

/// Follows predecessors from `target` down to a seed; d strictly decreases
/// along the way. Returned seed-first.
LiftedPath backtrack(const DistanceMap& dist, const GridNode& target, double orientation_step);

struct TrackVertex {
  double x = 0.0, y = 0.0;
  double theta = 0.0;  // local direction of travel, radians in [0, 2 pi)
};

struct CrackTrack {
  std::vector<TrackVertex> vertices;
  LiftedPath lifted;
  double distance = 0.0;     // geodesic length of the lifted path
  double mean_cost = 0.0;    // mean C along the lifted path
  std::int64_t visited = 0;  // accepted nodes in the distance maps
};

struct TrackParams {
  MetricParams metric;
  /// Symmetric mode drops the forward constraint and takes the path through
  /// the minimiser of d_A + d_B, so swapping the endpoints reverses the path.
  bool symmetric = false;
  MarchScheme scheme = MarchScheme::SemiLagrangian;
};

/// Projects a lifted path to the image plane; the local direction is the
/// tangent of the projected polyline.
std::vector<TrackVertex> project_path(const LiftedPath& path);

CrackTrack track_crack(const OrientationScore& score, PixelPos a, PixelPos b, const TrackParams& params = {});
CrackTrack track_crack(const RasterImage& image, PixelPos a, PixelPos b, const TrackParams& params,
                       const CakeWaveletStack& stack);

// {"track": [{x, y, theta}, ...], "distance", "mean_cost", "params": {...}}
std::string track_to_json(const CrackTrack& track, const TrackParams& params, int indent = 2);
/// Reads the "track" array back (lifted path is left empty).
CrackTrack track_from_json(const std::string& text);
/// Overrides fields of `base` from a JSON object with any of xi, zeta,
/// lambda, cost_mu, cost_power, stiffness_length, symmetric, scheme
/// ("semi_lagrangian" | "dijkstra"). Unknown keys are rejected.
TrackParams track_params_from_json(const std::string& text, TrackParams base = {});

}  // namespace crackseg
