#pragma once

// Fourier-domain primitives shared by every other module.
//
// Conventions used throughout the library:
//   * dft2 is unnormalized, idft2 carries the 1/(H*W) factor.
//   * Frequencies are addressed with centered signed indices
//     k in {-floor(K/2), ..., ceil(K/2)-1}; storage is in FFT order.
//   * Circular correlation conjugates the filter spectrum:
//       S[p] = sum_n w[n] x[n + p]   <=>   S^ = conj(w^) * x^.

#include <complex>
#include <span>
#include <vector>

namespace csot {

using Complex = std::complex<double>;

struct GridSize {
  int height = 0;
  int width = 0;

  int area() const noexcept { return height * width; }
  friend bool operator==(const GridSize&, const GridSize&) = default;
};

/// Multi-channel real grid, channel-plane row-major.
class SpatialMap {
 public:
  SpatialMap() = default;
  SpatialMap(int height, int width, int channels);
  SpatialMap(int height, int width, int channels, std::vector<double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  GridSize grid() const noexcept { return {height_, width_}; }
  bool empty() const noexcept { return values_.empty(); }

  double& at(int c, int y, int x) { return values_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return values_[index(c, y, x)]; }

  std::span<double> channel(int c);
  std::span<const double> channel(int c) const;
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Throws DomainError if any value is NaN or infinite.
  void require_finite(const char* context) const;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> values_;
};

/// Complex Fourier coefficients of a periodic multi-channel signal.
class SpectralMap {
 public:
  SpectralMap() = default;
  SpectralMap(int height, int width, int channels, bool real_origin = true);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  GridSize grid() const noexcept { return {height_, width_}; }
  bool empty() const noexcept { return values_.empty(); }

  /// True when the coefficients describe a real-valued signal (Hermitian symmetry).
  bool real_origin() const noexcept { return real_origin_; }
  void set_real_origin(bool flag) noexcept { real_origin_ = flag; }

  /// Signed (centered) frequency access; ky, kx are wrapped into range.
  Complex& at(int c, int ky, int kx) { return values_[index(c, wrap(ky, height_), wrap(kx, width_))]; }
  Complex at(int c, int ky, int kx) const {
    return values_[index(c, wrap(ky, height_), wrap(kx, width_))];
  }

  /// Raw FFT-order plane of one channel.
  std::span<Complex> channel(int c);
  std::span<const Complex> channel(int c) const;
  std::span<Complex> values() noexcept { return values_; }
  std::span<const Complex> values() const noexcept { return values_; }

  /// max |X[-k] - conj(X[k])| over all coefficients and channels.
  double hermitian_defect() const;
  double max_abs() const;
  void require_finite(const char* context) const;

  static int wrap(int k, int n) noexcept {
    const int r = k % n;
    return r < 0 ? r + n : r;
  }
  static int min_frequency(int n) noexcept { return -(n / 2); }
  static int max_frequency(int n) noexcept { return (n - 1) / 2; }

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  bool real_origin_ = true;
  std::vector<Complex> values_;
};

/// Fourier coefficients of a T-periodic interpolation function sampled on N points.
/// Coefficients are kept for the symmetric band |k| <= floor(N/2).
struct InterpolationKernel {
  int samples = 0;
  double period = 1.0;
  std::vector<Complex> coefficients;  // index k + floor(N/2)

  int band() const noexcept { return samples / 2; }
  Complex at(int k) const { return coefficients.at(static_cast<std::size_t>(k + band())); }
};

SpectralMap dft2(const SpatialMap& map);
SpatialMap idft2(const SpectralMap& spec);
/// Inverse transform without the real-signal projection (one complex plane per channel).
std::vector<std::vector<Complex>> idft2_complex(const SpectralMap& spec);

/// Fourier transform of the centered cubic B-spline, B^(f) = sinc(f)^4.
double cubic_bspline_fourier(double f);

/// b^[k] = (1/N) exp(-i pi k / N) B^(k/N); the phase centers each sample in its cell.
InterpolationKernel spline_kernel(int samples, double period = 1.0);
/// b^[k] = 1/N: band-limited interpolation that reproduces the samples exactly.
InterpolationKernel identity_kernel(int samples, double period = 1.0);

/// Fourier coefficients of the interpolated feature map on an output grid.
///
/// The result is expressed in the dft2 convention for the output grid, so idft2
/// evaluates the continuous function at the output sample points. For even N the
/// Nyquist row/column contributes half its weight at +N/2 and at -N/2.
SpectralMap interpolate(const SpatialMap& map, const InterpolationKernel& kernel_y,
                        const InterpolationKernel& kernel_x, GridSize output);
SpectralMap interpolate(const SpatialMap& map, const InterpolationKernel& kernel, GridSize output);

/// Centered zero-padding in frequency. For real-origin input with an even size the
/// Nyquist line is split evenly between +K/2 and -K/2 so the signal stays real.
SpectralMap pad_spectrum(const SpectralMap& spec, GridSize target);

/// Nearest conjugate-symmetric spectrum, (X[k] + conj(X[-k])) / 2; flags the result real-origin.
SpectralMap hermitian_part(const SpectralMap& spec);

/// Channel-summed correlation: sum_d conj(filter_d) * feat_d.
SpectralMap circular_correlate(const SpectralMap& filter, const SpectralMap& feat);

}  // namespace csot
