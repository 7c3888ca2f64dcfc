#include "crackseg/orientation.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "crackseg/png_io.hpp"

namespace crackseg {
namespace {

constexpr double kPi = std::numbers::pi;

// Centred cardinal B-spline of order k (support [-(k+1)/2, (k+1)/2]).
double bspline(int k, double x) {
  if (k == 0) return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
  const double half = 0.5 * (k + 1);
  if (x <= -half || x >= half) return 0.0;
  return ((x + half) * bspline(k - 1, x + 0.5) + (half - x) * bspline(k - 1, x - 0.5)) / k;
}

// Smoothstep of order n on [0, 1]: 0 -> 0, 1 -> 1, n continuous derivatives.
double smoothstep(int n, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  double s = 0.0;
  for (int k = 0; k <= n; ++k) s += binom(n + k, k) * binom(2 * n + 1, n - k) * std::pow(-t, k);
  return std::pow(t, n + 1) * s;
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

double grid_frequency(int k, int n) { return 2.0 * kPi * (k < (n + 1) / 2 ? k : k - n) / n; }

struct PaddedSpectrum {
  int pad_x = 0, pad_y = 0;
  int width = 0, height = 0;  // original image size
  ComplexPlane spectrum;
};

PaddedSpectrum padded_spectrum(const Plane& image, int pad) {
  PaddedSpectrum s;
  s.width = static_cast<int>(image.cols());
  s.height = static_cast<int>(image.rows());
  s.pad_x = pad;
  s.pad_y = pad;
  const int pw = fft_friendly_size(s.width + 2 * pad);
  const int ph = fft_friendly_size(s.height + 2 * pad);
  s.spectrum.resize(ph, pw);
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect(y - pad, s.height);
    for (int x = 0; x < pw; ++x) s.spectrum(y, x) = image(sy, reflect(x - pad, s.width));
  }
  fft2(s.spectrum, false);
  return s;
}

}  // namespace

void CakeWaveletParams::validate() const {
  if (n_orientations < 4 || n_orientations % 2 != 0) {
    throw std::invalid_argument("CakeWaveletParams: n_orientations must be even and >= 4");
  }
  if (spatial_size < 3 || spatial_size % 2 == 0) throw std::invalid_argument("CakeWaveletParams: spatial_size must be odd and >= 3");
  if (angular_order < 1 || angular_order > 8) throw std::invalid_argument("CakeWaveletParams: angular_order must lie in 1..8");
  if ((angular_order + 1) > n_orientations) {
    throw std::invalid_argument("CakeWaveletParams: angular support wider than the circle");
  }
  if (!(dc_radius >= 0.0 && 2.0 * dc_radius < inflection && inflection <= 1.0)) {
    throw std::invalid_argument("CakeWaveletParams: need 0 <= 2 * dc_radius < inflection <= 1");
  }
  if (taper_order < 0 || taper_order > 6) throw std::invalid_argument("CakeWaveletParams: taper_order must lie in 0..6");
}

CakeWaveletStack::CakeWaveletStack(CakeWaveletParams params) : params_(params) {
  params_.validate();
  const int s = params_.spatial_size;
  const int c = s / 2;
  // The spectrum is sampled on a frequency grid four times finer than the
  // kernel, so the periodisation of the inverse transform sits far outside
  // the kernel window and the samples are those of the continuous wavelet.
  const int f = 4 * s + 1;
  const int fc = f / 2;
  std::vector<double> w(static_cast<std::size_t>(f));
  for (int k = 0; k < f; ++k) w[static_cast<std::size_t>(k)] = 2.0 * kPi * (k - fc) / f;
  Eigen::MatrixXcd phase(f, s);  // phase(k, u) = exp(i w_k (u - c))
  for (int k = 0; k < f; ++k)
    for (int u = 0; u < s; ++u) phase(k, u) = std::polar(1.0, w[static_cast<std::size_t>(k)] * (u - c));

  for (int j = 0; j < params_.n_orientations; ++j) {
    Eigen::MatrixXcd spec(f, f);  // spec(ky, kx)
    for (int ky = 0; ky < f; ++ky) {
      for (int kx = 0; kx < f; ++kx) {
        const double v = frequency_response(j, w[static_cast<std::size_t>(kx)], w[static_cast<std::size_t>(ky)]);
        spec(ky, kx) = v;
        if (j == 0 && v != 0.0) base_samples_.push_back({w[static_cast<std::size_t>(kx)], w[static_cast<std::size_t>(ky)], v});
      }
    }
    // kernel(uy, ux) = 1/f^2 sum_ky sum_kx spec(ky,kx) e^{i wy uy} e^{i wx ux}
    const Eigen::MatrixXcd k = phase.transpose() * spec * phase / double(f) / double(f);
    kernels_.emplace_back(k.array());
  }
  base_norm_ = 1.0 / (double(f) * f);
}

double CakeWaveletStack::orientation(int j) const { return 2.0 * kPi * j / params_.n_orientations; }
double CakeWaveletStack::orientation_step() const { return 2.0 * kPi / params_.n_orientations; }

double CakeWaveletStack::radial_envelope(double radius) const {
  const double r = radius / kPi;
  if (r >= 1.0) return 0.0;
  const double dc = params_.dc_radius;
  double low = 1.0;
  if (dc > 0.0) {
    if (r < dc) return 0.0;
    low = smoothstep(params_.taper_order, (r - dc) / dc);
  }
  double high = 1.0;
  if (r > params_.inflection) {
    const double t = std::log(r / params_.inflection) / std::log(1.0 / params_.inflection);
    high = 1.0 - smoothstep(params_.taper_order, t);
  }
  return low * high;
}

double CakeWaveletStack::low_pass_response(double radius) const {
  const double r = radius / kPi;
  const double dc = params_.dc_radius;
  if (dc <= 0.0) return radius == 0.0 ? 1.0 : 0.0;
  if (r < dc) return 1.0;
  return 1.0 - smoothstep(params_.taper_order, (r - dc) / dc);
}

double CakeWaveletStack::angular_weight(int j, double phi) const {
  // Lines along n(th_j) put their energy on the frequency direction th_j + pi/2.
  const double centre = orientation(j) + 0.5 * kPi;
  return bspline(params_.angular_order, wrap_angle(phi - centre) / orientation_step());
}

double CakeWaveletStack::frequency_response(int j, double wx, double wy) const {
  const double radius = std::hypot(wx, wy);
  if (radius == 0.0) return 0.0;
  const double m = radial_envelope(radius);
  if (m == 0.0) return 0.0;
  return m * angular_weight(j, std::atan2(wy, wx));
}

Complex CakeWaveletStack::base_kernel_at(double dx, double dy) const {
  Complex acc = 0.0;
  for (const auto& b : base_samples_) acc += b[2] * std::polar(1.0, b[0] * dx + b[1] * dy);
  return acc * base_norm_;
}

OrientationScore::OrientationScore(int width, int height, int n_orientations)
    : slabs_(static_cast<std::size_t>(n_orientations), ComplexPlane::Zero(height, width)) {}

OrientationScore::OrientationScore(std::vector<ComplexPlane> slabs, Plane low_pass)
    : slabs_(std::move(slabs)), low_pass_(std::move(low_pass)) {
  for (const auto& s : slabs_) {
    if (s.rows() != slabs_[0].rows() || s.cols() != slabs_[0].cols()) {
      throw ShapeError("OrientationScore: slabs differ in shape");
    }
  }
  if (low_pass_.size() != 0 && (low_pass_.rows() != height() || low_pass_.cols() != width())) {
    throw ShapeError("OrientationScore: low-pass plane differs in shape from the slabs");
  }
}

double OrientationScore::orientation_step() const { return 2.0 * std::numbers::pi / n_orientations(); }

std::size_t OrientationScore::bytes() const {
  return slabs_.size() * static_cast<std::size_t>(width()) * height() * sizeof(Complex) +
         static_cast<std::size_t>(low_pass_.size()) * sizeof(double);
}

OrientationScore lift(const RasterImage& image, const CakeWaveletStack& stack) {
  if (image.channels() != 1) {
    throw std::invalid_argument("lift: expected a single-channel image, got " + std::to_string(image.channels()) +
                                " channels (convert with luma() first)");
  }
  return lift(image.channel(0), stack);
}

OrientationScore lift(const Plane& image, const CakeWaveletStack& stack) {
  const PaddedSpectrum ps = padded_spectrum(image, stack.params().spatial_size);
  const int ph = static_cast<int>(ps.spectrum.rows()), pw = static_cast<int>(ps.spectrum.cols());
  const int n = stack.n_orientations();

  // Per-frequency radius envelope and angle, shared by all orientations.
  Plane envelope(ph, pw), angle(ph, pw);
  ComplexPlane work(ph, pw);
  for (int y = 0; y < ph; ++y) {
    const double wy = grid_frequency(y, ph);
    for (int x = 0; x < pw; ++x) {
      const double wx = grid_frequency(x, pw);
      const double radius = std::hypot(wx, wy);
      envelope(y, x) = stack.radial_envelope(radius);
      angle(y, x) = std::atan2(wy, wx);
      work(y, x) = ps.spectrum(y, x) * stack.low_pass_response(radius);
    }
  }
  fft2(work, true);
  Plane low = work.block(ps.pad_y, ps.pad_x, ps.height, ps.width).real();

  std::vector<ComplexPlane> slabs;
  slabs.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        const double e = envelope(y, x);
        work(y, x) = e == 0.0 ? Complex(0.0) : ps.spectrum(y, x) * (e * stack.angular_weight(j, angle(y, x)));
      }
    }
    fft2(work, true);
    slabs.emplace_back(work.block(ps.pad_y, ps.pad_x, ps.height, ps.width));
  }
  return OrientationScore(std::move(slabs), std::move(low));
}

Plane reconstruct(const OrientationScore& score) {
  Plane sum = Plane::Zero(score.height(), score.width());
  for (int j = 0; j < score.n_orientations(); ++j) sum += score.slab(j).real();
  return sum;
}

RasterImage project(const OrientationScore& score) {
  Plane sum = reconstruct(score);
  if (score.low_pass().size() != 0) sum += score.low_pass();
  if (sum.size() == 0) return RasterImage(std::move(sum));
  const double lo = sum.minCoeff(), hi = sum.maxCoeff();
  if (!(hi > lo)) return RasterImage(Plane(Plane::Zero(sum.rows(), sum.cols())));
  return RasterImage(Plane(((sum - lo) / (hi - lo)).max(0.0).min(1.0)));
}

Plane bandpass(const Plane& image, const CakeWaveletStack& stack) {
  PaddedSpectrum ps = padded_spectrum(image, stack.params().spatial_size);
  const int ph = static_cast<int>(ps.spectrum.rows()), pw = static_cast<int>(ps.spectrum.cols());
  for (int y = 0; y < ph; ++y) {
    const double wy = grid_frequency(y, ph);
    for (int x = 0; x < pw; ++x) ps.spectrum(y, x) *= stack.radial_envelope(std::hypot(grid_frequency(x, pw), wy));
  }
  fft2(ps.spectrum, true);
  return ps.spectrum.block(ps.pad_y, ps.pad_x, ps.height, ps.width).real();
}

void fft2(ComplexPlane& data, bool inverse) {
  Eigen::FFT<double> fft;
  const auto h = data.rows(), w = data.cols();
  std::vector<Complex> in(static_cast<std::size_t>(std::max(h, w))), out;
  in.resize(static_cast<std::size_t>(w));
  for (Eigen::Index y = 0; y < h; ++y) {
    std::memcpy(in.data(), &data(y, 0), sizeof(Complex) * static_cast<std::size_t>(w));
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::memcpy(&data(y, 0), out.data(), sizeof(Complex) * static_cast<std::size_t>(w));
  }
  in.resize(static_cast<std::size_t>(h));
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) in[static_cast<std::size_t>(y)] = data(y, x);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index y = 0; y < h; ++y) data(y, x) = out[static_cast<std::size_t>(y)];
  }
}

int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

void save_score(const OrientationScore& score, const std::filesystem::path& path) {
  Bytes out(8);
  std::memcpy(out.data(), "CKSCORE1", 8);
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put32(static_cast<std::uint32_t>(score.width()));
  put32(static_cast<std::uint32_t>(score.height()));
  put32(static_cast<std::uint32_t>(score.n_orientations()));
  put32(1);
  put32(score.low_pass().size() != 0 ? 1u : 0u);
  const std::size_t slab_bytes = static_cast<std::size_t>(score.width()) * score.height() * sizeof(Complex);
  const std::size_t header = out.size();
  out.resize(header + slab_bytes * static_cast<std::size_t>(score.n_orientations()));
  for (int j = 0; j < score.n_orientations(); ++j) {
    std::memcpy(out.data() + header + slab_bytes * static_cast<std::size_t>(j), score.slab(j).data(), slab_bytes);
  }
  if (score.low_pass().size() != 0) {
    const std::size_t off = out.size();
    const std::size_t low_bytes = static_cast<std::size_t>(score.low_pass().size()) * sizeof(double);
    out.resize(off + low_bytes);
    std::memcpy(out.data() + off, score.low_pass().data(), low_bytes);
  }
  write_file_atomic(path, out);
}

OrientationScore load_score(const std::filesystem::path& path) {
  const Bytes in = read_file(path);
  constexpr std::size_t kHeader = 28;
  if (in.size() < kHeader || std::memcmp(in.data(), "CKSCORE1", 8) != 0) {
    throw IoError("score cache: bad header in " + path.string());
  }
  auto get32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in[off + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  };
  const int w = static_cast<int>(get32(8)), h = static_cast<int>(get32(12)), n = static_cast<int>(get32(16));
  if (get32(20) != 1) throw IoError("score cache: unsupported dtype");
  const bool has_low = get32(24) != 0;
  const std::size_t slab_bytes = static_cast<std::size_t>(w) * h * sizeof(Complex);
  const std::size_t low_bytes = has_low ? static_cast<std::size_t>(w) * h * sizeof(double) : 0;
  if (in.size() != kHeader + slab_bytes * static_cast<std::size_t>(n) + low_bytes) {
    throw IoError("score cache: truncated " + path.string());
  }
  std::vector<ComplexPlane> slabs;
  for (int j = 0; j < n; ++j) {
    ComplexPlane s(h, w);
    std::memcpy(s.data(), in.data() + kHeader + slab_bytes * static_cast<std::size_t>(j), slab_bytes);
    slabs.push_back(std::move(s));
  }
  Plane low;
  if (has_low) {
    low.resize(h, w);
    std::memcpy(low.data(), in.data() + kHeader + slab_bytes * static_cast<std::size_t>(n), low_bytes);
  }
  return OrientationScore(std::move(slabs), std::move(low));
}

}  // namespace crackseg
