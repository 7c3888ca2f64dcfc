#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "crackseg/raster.hpp"

namespace crackseg {

using Complex = std::complex<double>;
using ComplexPlane = PlaneT<Complex>;

/// Frequency-domain shape of the cake wavelets. Radii are fractions of the
/// Nyquist frequency.
struct CakeWaveletParams {
  int n_orientations = 16;
  int spatial_size = 65;     // odd; side of the materialised spatial kernels
  int angular_order = 3;     // B-spline order of the angular profile
  double dc_radius = 0.025;  // envelope is 0 below, rises to 1 at 2 * dc_radius
  double inflection = 0.8;   // envelope starts tapering here ...
  int taper_order = 2;       // ... with a smoothstep of this order, reaching 0 at Nyquist

  void validate() const;
};

/// A set of rotated copies of one complex wavelet. Orientation j is the line
/// direction n = (cos th_j, sin th_j) with th_j = 2 pi j / n, measured from
/// +x towards +y in pixel coordinates. The real part of a kernel responds
/// to lines along n, the imaginary part to edges along n.
class CakeWaveletStack {
 public:
  explicit CakeWaveletStack(CakeWaveletParams params = {});

  const CakeWaveletParams& params() const { return params_; }
  int n_orientations() const { return params_.n_orientations; }
  double orientation(int j) const;
  double orientation_step() const;

  /// Fourier transform of kernel j at angular frequency (wx, wy) in
  /// radians per pixel. Real and non-negative.
  double frequency_response(int j, double wx, double wy) const;
  /// Radial envelope at |w| = radius (radians per pixel).
  double radial_envelope(double radius) const;
  /// Complement of the envelope's low-frequency ramp: 1 at DC, 0 from
  /// 2 * dc_radius on. Describes what lift() stores as the residual.
  double low_pass_response(double radius) const;
  /// Angular weight of orientation j for frequency direction `phi`.
  double angular_weight(int j, double phi) const;

  /// Spatial kernels (spatial_size^2, centred), complex.
  const std::vector<ComplexPlane>& kernels() const { return kernels_; }

  /// Base kernel (j = 0) at a real-valued offset, evaluated by the inverse
  /// transform of the same frequency samples as kernels().
  Complex base_kernel_at(double dx, double dy) const;

 private:
  CakeWaveletParams params_;
  std::vector<ComplexPlane> kernels_;
  std::vector<std::array<double, 3>> base_samples_;  // (wx, wy, response), non-zero only
  double base_norm_ = 1.0;
};

/// Complex volume U(x, y, th_j), one plane per orientation, plus the
/// low-frequency part of the image that the wavelets leave out.
class OrientationScore {
 public:
  OrientationScore() = default;
  OrientationScore(int width, int height, int n_orientations);
  explicit OrientationScore(std::vector<ComplexPlane> slabs, Plane low_pass = {});

  int width() const { return slabs_.empty() ? 0 : static_cast<int>(slabs_[0].cols()); }
  int height() const { return slabs_.empty() ? 0 : static_cast<int>(slabs_[0].rows()); }
  int n_orientations() const { return static_cast<int>(slabs_.size()); }
  double orientation_step() const;

  const ComplexPlane& slab(int j) const { return slabs_.at(static_cast<std::size_t>(j)); }
  ComplexPlane& slab(int j) { return slabs_.at(static_cast<std::size_t>(j)); }
  Complex operator()(int x, int y, int j) const { return slabs_[static_cast<std::size_t>(j)](y, x); }

  /// Empty, or the image content below the wavelets' DC radius.
  const Plane& low_pass() const { return low_pass_; }

  std::size_t bytes() const;

 private:
  std::vector<ComplexPlane> slabs_;
  Plane low_pass_;
};

/// Orientation score of a single-channel image: per orientation, the
/// correlation of the mirror-padded image with the conjugated rotated
/// wavelet, computed as a product in the Fourier domain.
OrientationScore lift(const RasterImage& image, const CakeWaveletStack& stack);
OrientationScore lift(const Plane& image, const CakeWaveletStack& stack);

/// Sum over orientations of the real part, unscaled. Equals the input
/// filtered by the radial envelope when the stack tiles the spectrum.
Plane reconstruct(const OrientationScore& score);

/// reconstruct() plus the low-pass residual, min-max rescaled to [0, 1]; a
/// constant result maps to zeros.
RasterImage project(const OrientationScore& score);

/// Input filtered by the stack's radial envelope with the same padding as
/// lift(); the reference for reconstruction checks.
Plane bandpass(const Plane& image, const CakeWaveletStack& stack);

// Binary cache: "CKSCORE1", uint32 width, height, n, dtype (1 = complex128),
// uint32 has_low_pass, then n slabs of row-major little-endian complex values
// and, if flagged, the low-pass plane as doubles.
void save_score(const OrientationScore& score, const std::filesystem::path& path);
OrientationScore load_score(const std::filesystem::path& path);

// 2-D FFT helpers on complex planes (inverse includes the 1/N scaling).
void fft2(ComplexPlane& data, bool inverse);
/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
int fft_friendly_size(int n);

}  // namespace crackseg
