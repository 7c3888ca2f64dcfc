#include "crackseg/raster.hpp"

#include <sstream>

#include <json.hpp>

namespace crackseg {
namespace {

void check_range(const Plane& p, const char* what) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double v = p.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream os;
      os << what << ": value " << v << " at index " << i << " outside [0, 1]";
      throw std::invalid_argument(os.str());
    }
  }
}

void check_rect(int width, int height, PixelPos origin, int size) {
  if (size <= 0 || origin.x < 0 || origin.y < 0 || origin.x + size > width ||
      origin.y + size > height) {
    std::ostringstream os;
    os << "patch rectangle (" << origin.x << ", " << origin.y << ") size " << size
       << " outside " << width << "x" << height << " image";
    throw std::out_of_range(os.str());
  }
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels) {
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("RasterImage: channels must be 1 or 3");
  }
  if (width < 0 || height < 0) throw std::invalid_argument("RasterImage: negative size");
  planes_.assign(static_cast<std::size_t>(channels), Plane::Zero(height, width));
}

RasterImage::RasterImage(Plane gray) {
  check_range(gray, "RasterImage");
  planes_.push_back(std::move(gray));
}

RasterImage::RasterImage(std::vector<Plane> planes) : planes_(std::move(planes)) {
  if (planes_.size() != 1 && planes_.size() != 3) {
    throw std::invalid_argument("RasterImage: channels must be 1 or 3");
  }
  for (const auto& p : planes_) {
    if (p.rows() != planes_[0].rows() || p.cols() != planes_[0].cols()) {
      throw ShapeError("RasterImage: channel planes differ in shape");
    }
    check_range(p, "RasterImage");
  }
}

Plane RasterImage::luma() const {
  if (planes_.size() == 1) return planes_[0];
  return 0.299 * planes_[0] + 0.587 * planes_[1] + 0.114 * planes_[2];
}

void RasterImage::clamp() {
  for (auto& p : planes_) p = p.max(0.0).min(1.0);
}

bool operator==(const RasterImage& a, const RasterImage& b) {
  if (a.channels() != b.channels() || a.width() != b.width() || a.height() != b.height()) return false;
  for (int c = 0; c < a.channels(); ++c) {
    if (!(a.channel(c) == b.channel(c)).all()) return false;
  }
  return true;
}

ProbabilityMap::ProbabilityMap(int width, int height, double fill)
    : values_(Plane::Constant(height, width, fill)) {
  check_range(values_, "ProbabilityMap");
}

ProbabilityMap::ProbabilityMap(Plane values) : values_(std::move(values)) {
  check_range(values_, "ProbabilityMap");
}

BinaryMask::BinaryMask(int width, int height) : values_(MaskPlane::Zero(height, width)) {}

BinaryMask::BinaryMask(MaskPlane values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (values_.data()[i] > 1) {
      std::ostringstream os;
      os << "BinaryMask: value " << int(values_.data()[i]) << " at index " << i << " is not 0/1";
      throw std::invalid_argument(os.str());
    }
  }
}

std::int64_t BinaryMask::count() const { return values_.cast<std::int64_t>().sum(); }

int PatchGrid::width() const {
  int w = 0;
  for (const auto& o : origins) w = std::max(w, o.x + patch_size);
  return w;
}

int PatchGrid::height() const {
  int h = 0;
  for (const auto& o : origins) h = std::max(h, o.y + patch_size);
  return h;
}

PatchGrid split_into_patches(int width, int height, int patch_size) {
  if (patch_size <= 0) throw std::invalid_argument("split_into_patches: patch_size must be positive");
  if (width < patch_size) {
    throw std::invalid_argument("split_into_patches: width " + std::to_string(width) +
                                " smaller than patch size " + std::to_string(patch_size));
  }
  if (height < patch_size) {
    throw std::invalid_argument("split_into_patches: height " + std::to_string(height) +
                                " smaller than patch size " + std::to_string(patch_size));
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.cols = (width + patch_size - 1) / patch_size;
  grid.rows = (height + patch_size - 1) / patch_size;
  grid.origins.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
  for (int r = 0; r < grid.rows; ++r) {
    const int y = std::min(r * patch_size, height - patch_size);
    for (int c = 0; c < grid.cols; ++c) {
      const int x = std::min(c * patch_size, width - patch_size);
      grid.origins.push_back({x, y});
    }
  }
  return grid;
}

std::string grid_to_json(const PatchGrid& grid) {
  nlohmann::json origins = nlohmann::json::array();
  for (const auto& o : grid.origins) origins.push_back({o.x, o.y});
  return nlohmann::json{{"patch_size", grid.patch_size}, {"cols", grid.cols}, {"rows", grid.rows}, {"origins", origins}}
      .dump();
}

RasterImage extract_patch(const RasterImage& image, PixelPos origin, int patch_size) {
  check_rect(image.width(), image.height(), origin, patch_size);
  std::vector<Plane> planes;
  for (const auto& p : image.planes()) {
    planes.emplace_back(p.block(origin.y, origin.x, patch_size, patch_size));
  }
  return RasterImage(std::move(planes));
}

BinaryMask extract_patch(const BinaryMask& mask, PixelPos origin, int patch_size) {
  check_rect(mask.width(), mask.height(), origin, patch_size);
  return BinaryMask(MaskPlane(mask.values().block(origin.y, origin.x, patch_size, patch_size)));
}

ProbabilityMap extract_patch(const ProbabilityMap& map, PixelPos origin, int patch_size) {
  check_rect(map.width(), map.height(), origin, patch_size);
  return ProbabilityMap(Plane(map.values().block(origin.y, origin.x, patch_size, patch_size)));
}

void insert_patch(RasterImage& image, const RasterImage& patch, PixelPos origin) {
  if (patch.width() != patch.height()) throw ShapeError("insert_patch: patch must be square");
  if (patch.channels() != image.channels()) throw ShapeError("insert_patch: channel count differs");
  check_rect(image.width(), image.height(), origin, patch.width());
  for (int c = 0; c < image.channels(); ++c) {
    image.channel(c).block(origin.y, origin.x, patch.height(), patch.width()) = patch.channel(c);
  }
}

ProbabilityMap stitch_predictions(const PatchGrid& grid, const std::vector<ProbabilityMap>& patch_maps) {
  if (patch_maps.size() != grid.origins.size()) {
    throw ShapeError("stitch_predictions: " + std::to_string(patch_maps.size()) + " maps for " +
                     std::to_string(grid.origins.size()) + " grid cells");
  }
  Plane full = Plane::Zero(grid.height(), grid.width());
  for (std::size_t i = 0; i < patch_maps.size(); ++i) {
    const auto& m = patch_maps[i];
    if (m.width() != grid.patch_size || m.height() != grid.patch_size) {
      throw ShapeError("stitch_predictions: patch " + std::to_string(i) + " is " +
                       std::to_string(m.width()) + "x" + std::to_string(m.height()) + ", expected " +
                       std::to_string(grid.patch_size));
    }
    const auto o = grid.origins[i];
    full.block(o.y, o.x, grid.patch_size, grid.patch_size) = m.values();
  }
  return ProbabilityMap(std::move(full));
}

}  // namespace crackseg
