#include "crackseg/augment.hpp"

#include <algorithm>
#include <cmath>

#include "crackseg/patchset.hpp"
#include "crackseg/rng.hpp"

namespace crackseg {
namespace {

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi)) throw std::invalid_argument(std::string("augmentation range ") + name + " is inverted");
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("augmentation probability ") + name + " outside [0, 1]");
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

struct Sample {
  RasterImage image;
  MaskPlane mask;
};

void apply_planes(Sample& s, auto&& image_op, auto&& mask_op) {
  std::vector<Plane> planes;
  for (const auto& p : s.image.planes()) planes.push_back(image_op(p));
  s.image = RasterImage(std::move(planes));
  s.mask = mask_op(s.mask);
}

void crop(Sample& s, PixelPos o, int w, int h) {
  apply_planes(
      s, [&](const Plane& p) { return Plane(p.block(o.y, o.x, h, w)); },
      [&](const MaskPlane& m) { return MaskPlane(m.block(o.y, o.x, h, w)); });
}

void resize(Sample& s, int w, int h) {
  apply_planes(
      s, [&](const Plane& p) { return resize_bilinear(p, w, h); },
      [&](const MaskPlane& m) { return resize_nearest(m, w, h); });
}

Plane clamp01(const Plane& p) { return p.max(0.0).min(1.0); }

void clamp_image(Sample& s) {
  std::vector<Plane> planes;
  for (const auto& p : s.image.planes()) planes.push_back(clamp01(p));
  s.image = RasterImage(std::move(planes));
}

// Unclamped channel arithmetic before re-wrapping in RasterImage.
void map_channels(Sample& s, auto&& op) {
  std::vector<Plane> planes = s.image.planes();
  op(planes);
  for (auto& p : planes) p = clamp01(p);
  s.image = RasterImage(std::move(planes));
}

void rgb_to_hsv(double r, double g, double b, double& h, double& sat, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
  v = mx;
  sat = mx > 0 ? d / mx : 0.0;
  if (d <= 0) {
    h = 0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  h /= 6.0;
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double sat, double v, double& r, double& g, double& b) {
  const double hh = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - sat), q = v * (1 - sat * f), t = v * (1 - sat * (1 - f));
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

}  // namespace

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.flip_prob = 0.0;
  c.rotation_choices = {0};
  c.brightness = c.contrast = c.saturation = {1.0, 1.0};
  c.hue = {0.0, 0.0};
  c.noise_prob = 0.0;
  c.geometric_prob = 0.0;
  return c;
}

void AugmentationConfig::validate() const {
  check_prob(flip_prob, "flip");
  check_prob(noise_prob, "noise");
  check_prob(geometric_prob, "geometric");
  check_range(brightness, "brightness");
  check_range(contrast, "contrast");
  check_range(saturation, "saturation");
  check_range(hue, "hue");
  check_range(noise_factor, "noise");
  check_range(reduce_scale, "reduce");
  check_range(zoom_scale, "zoom");
  if (rotation_choices.empty()) throw std::invalid_argument("augmentation: no rotation choices");
  for (int r : rotation_choices) {
    if (r % 90 != 0) throw std::invalid_argument("augmentation: rotations must be multiples of 90 degrees");
  }
  if (!(reduce_scale.lo > 0) || !(zoom_scale.lo > 0) || zoom_scale.hi > 1.0) {
    throw std::invalid_argument("augmentation: scale ranges must be positive, zoom at most 1");
  }
  if (random_crop_size && *random_crop_size <= 0) throw std::invalid_argument("augmentation: crop size must be positive");
}

template <typename Scalar>
PlaneT<Scalar> rotate90(const PlaneT<Scalar>& p, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return p;
  if (k == 2) return p.reverse();
  const auto h = p.rows(), w = p.cols();
  PlaneT<Scalar> out(w, h);
  // One quarter turn counter-clockwise as displayed (y axis pointing down).
  for (Eigen::Index y = 0; y < w; ++y) {
    for (Eigen::Index x = 0; x < h; ++x) {
      out(y, x) = k == 1 ? p(x, w - 1 - y) : p(h - 1 - x, y);
    }
  }
  return out;
}

template Plane rotate90<double>(const Plane&, int);
template MaskPlane rotate90<std::uint8_t>(const MaskPlane&, int);

Plane resize_bilinear(const Plane& p, int width, int height) {
  const int sw = static_cast<int>(p.cols()), sh = static_cast<int>(p.rows());
  Plane out(height, width);
  const double rx = double(sw) / width, ry = double(sh) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * ry - 0.5, 0.0, double(sh - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * rx - 0.5, 0.0, double(sw - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double tx = fx - x0;
      out(y, x) = (1 - ty) * ((1 - tx) * p(y0, x0) + tx * p(y0, x1)) + ty * ((1 - tx) * p(y1, x0) + tx * p(y1, x1));
    }
  }
  return out;
}

MaskPlane resize_nearest(const MaskPlane& p, int width, int height) {
  const int sw = static_cast<int>(p.cols()), sh = static_cast<int>(p.rows());
  MaskPlane out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(sh - 1, static_cast<int>(std::floor((y + 0.5) * sh / height)));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(sw - 1, static_cast<int>(std::floor((x + 0.5) * sw / width)));
      out(y, x) = p(sy, sx);
    }
  }
  return out;
}

template <typename Scalar>
PlaneT<Scalar> mirror_pad_to(const PlaneT<Scalar>& p, int width, int height) {
  const int sw = static_cast<int>(p.cols()), sh = static_cast<int>(p.rows());
  const int left = (width - sw) / 2, top = (height - sh) / 2;
  PlaneT<Scalar> out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = reflect(y - top, sh);
    for (int x = 0; x < width; ++x) out(y, x) = p(sy, reflect(x - left, sw));
  }
  return out;
}

template Plane mirror_pad_to<double>(const Plane&, int, int);
template MaskPlane mirror_pad_to<std::uint8_t>(const MaskPlane&, int, int);

RasterImage shift_hue(const RasterImage& image, double turns) {
  if (image.channels() != 3 || turns == 0.0) return image;
  std::vector<Plane> planes = image.planes();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double h, s, v, r, g, b;
      rgb_to_hsv(planes[0](y, x), planes[1](y, x), planes[2](y, x), h, s, v);
      hsv_to_rgb(h + turns, s, v, r, g, b);
      planes[0](y, x) = r;
      planes[1](y, x) = g;
      planes[2](y, x) = b;
    }
  }
  return RasterImage(std::move(planes));
}

std::pair<RasterImage, BinaryMask> augment(const RasterImage& patch, const BinaryMask& mask,
                                           const AugmentationConfig& cfg, std::uint64_t seed) {
  if (patch.width() != mask.width() || patch.height() != mask.height()) {
    throw ShapeError("augment: patch and mask differ in shape");
  }
  cfg.validate();
  Rng rng(seed);
  Sample s{patch, mask.values()};

  if (bernoulli(rng, cfg.flip_prob)) {
    apply_planes(
        s, [](const Plane& p) { return Plane(p.rowwise().reverse()); },
        [](const MaskPlane& m) { return MaskPlane(m.rowwise().reverse()); });
  }
  if (bernoulli(rng, cfg.flip_prob)) {
    apply_planes(
        s, [](const Plane& p) { return Plane(p.colwise().reverse()); },
        [](const MaskPlane& m) { return MaskPlane(m.colwise().reverse()); });
  }
  const int degrees = cfg.rotation_choices[uniform_below(rng, cfg.rotation_choices.size())];
  if (degrees % 360 != 0) {
    apply_planes(
        s, [&](const Plane& p) { return rotate90(p, degrees / 90); },
        [&](const MaskPlane& m) { return rotate90(m, degrees / 90); });
  }
  if (cfg.random_crop_size) {
    const int c = *cfg.random_crop_size;
    crop(s, choose_crop_offset(s.mask, c, c, rng, false), c, c);
  }

  const double brightness = uniform_real(rng, cfg.brightness.lo, cfg.brightness.hi);
  const double contrast = uniform_real(rng, cfg.contrast.lo, cfg.contrast.hi);
  const double saturation = uniform_real(rng, cfg.saturation.lo, cfg.saturation.hi);
  const double hue = uniform_real(rng, cfg.hue.lo, cfg.hue.hi);
  if (brightness != 1.0) {
    map_channels(s, [&](std::vector<Plane>& ps) {
      for (auto& p : ps) p *= brightness;
    });
  }
  if (contrast != 1.0) {
    const double mean = s.image.luma().mean();
    map_channels(s, [&](std::vector<Plane>& ps) {
      for (auto& p : ps) p = mean + (p - mean) * contrast;
    });
  }
  if (saturation != 1.0 && s.image.channels() == 3) {
    const Plane luma = s.image.luma();
    map_channels(s, [&](std::vector<Plane>& ps) {
      for (auto& p : ps) p = luma + (p - luma) * saturation;
    });
  }
  if (hue != 0.0) s.image = shift_hue(s.image, hue);

  if (bernoulli(rng, cfg.noise_prob)) {
    Plane factor(s.image.height(), s.image.width());
    for (Eigen::Index i = 0; i < factor.size(); ++i) {
      factor.data()[i] = uniform_real(rng, cfg.noise_factor.lo, cfg.noise_factor.hi);
    }
    map_channels(s, [&](std::vector<Plane>& ps) {
      for (auto& p : ps) p *= factor;
    });
  }

  if (bernoulli(rng, cfg.geometric_prob)) {
    const int w = s.image.width(), h = s.image.height();
    if (bernoulli(rng, 0.5)) {
      // Rescale, then mirror-pad back up or crop back down to w x h.
      const double scale = uniform_real(rng, cfg.reduce_scale.lo, cfg.reduce_scale.hi);
      const int nw = std::max(1, static_cast<int>(std::lround(scale * w)));
      const int nh = std::max(1, static_cast<int>(std::lround(scale * h)));
      resize(s, nw, nh);
      if (nw > w || nh > h) {
        const int cw = std::min(nw, w), ch = std::min(nh, h);
        crop(s, choose_crop_offset(s.mask, cw, ch, rng, true), cw, ch);
      }
      if (s.image.width() < w || s.image.height() < h) {
        apply_planes(
            s, [&](const Plane& p) { return mirror_pad_to(p, w, h); },
            [&](const MaskPlane& m) { return mirror_pad_to(m, w, h); });
      }
    } else {
      const double scale = uniform_real(rng, cfg.zoom_scale.lo, cfg.zoom_scale.hi);
      const int cw = std::clamp(static_cast<int>(std::lround(scale * w)), 1, w);
      const int ch = std::clamp(static_cast<int>(std::lround(scale * h)), 1, h);
      crop(s, choose_crop_offset(s.mask, cw, ch, rng, true), cw, ch);
      resize(s, w, h);
    }
  }
  clamp_image(s);
  return {std::move(s.image), BinaryMask(std::move(s.mask))};
}

}  // namespace crackseg
