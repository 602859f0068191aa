#include "csot/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "csot/error.hpp"

namespace csot {

namespace {

// FFTW plans are cached per (height, width, direction). Planning is not
// thread-safe; execution through fftw_execute_dft is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int height, int width, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(height, width, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> in(static_cast<std::size_t>(height) * width);
    std::vector<Complex> out(in.size());
    fftw_plan plan = fftw_plan_dft_2d(height, width, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void transform(std::span<const Complex> in, std::span<Complex> out, int height, int width, int sign) {
  fftw_plan plan = plan_cache().get(height, width, sign);
  // FFTW does not modify the input of an out-of-place complex transform.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void require_grid(int height, int width, int channels, const char* what) {
  if (height < 1 || width < 1 || channels < 1) {
    throw DomainError(std::string(what) + ": grid dimensions must be positive");
  }
}

// One output coefficient fed by one native coefficient, per axis.
struct AxisTap {
  int out;
  int native;
  Complex weight;
};

std::vector<AxisTap> axis_taps(const InterpolationKernel& kernel, int output) {
  const int n = kernel.samples;
  const int half = n / 2;
  std::vector<AxisTap> taps;
  for (int k = -half; k <= half; ++k) {
    double share = 1.0;
    if (n % 2 == 0 && (k == half || k == -half)) share = 0.5;
    taps.push_back({SpectralMap::wrap(k, output), SpectralMap::wrap(k, n),
                    static_cast<double>(output) * share * kernel.at(k)});
  }
  return taps;
}

// Destination slots of one source index along an axis when padding.
struct PadSlot {
  int dest;
  double weight;
};

std::vector<std::vector<PadSlot>> pad_slots(int source, int target, bool split_nyquist) {
  std::vector<std::vector<PadSlot>> slots(static_cast<std::size_t>(source));
  for (int i = 0; i < source; ++i) {
    const int k = i <= SpectralMap::max_frequency(source) ? i : i - source;
    if (split_nyquist && target > source && source % 2 == 0 && k == -(source / 2)) {
      slots[i] = {{SpectralMap::wrap(k, target), 0.5}, {SpectralMap::wrap(-k, target), 0.5}};
    } else {
      slots[i] = {{SpectralMap::wrap(k, target), 1.0}};
    }
  }
  return slots;
}

}  // namespace

// ---------------------------------------------------------------------------
// SpatialMap

SpatialMap::SpatialMap(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  require_grid(height, width, channels, "SpatialMap");
  values_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
}

SpatialMap::SpatialMap(int height, int width, int channels, std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  require_grid(height, width, channels, "SpatialMap");
  if (values_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("SpatialMap: value count does not match height*width*channels");
  }
}

std::span<double> SpatialMap::channel(int c) {
  const std::size_t plane = static_cast<std::size_t>(height_) * width_;
  return std::span<double>(values_).subspan(plane * c, plane);
}

std::span<const double> SpatialMap::channel(int c) const {
  const std::size_t plane = static_cast<std::size_t>(height_) * width_;
  return std::span<const double>(values_).subspan(plane * c, plane);
}

void SpatialMap::require_finite(const char* context) const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError(std::string(context) + ": non-finite value");
  }
}

// ---------------------------------------------------------------------------
// SpectralMap

SpectralMap::SpectralMap(int height, int width, int channels, bool real_origin)
    : height_(height), width_(width), channels_(channels), real_origin_(real_origin) {
  require_grid(height, width, channels, "SpectralMap");
  values_.assign(static_cast<std::size_t>(height) * width * channels, Complex{});
}

std::span<Complex> SpectralMap::channel(int c) {
  const std::size_t plane = static_cast<std::size_t>(height_) * width_;
  return std::span<Complex>(values_).subspan(plane * c, plane);
}

std::span<const Complex> SpectralMap::channel(int c) const {
  const std::size_t plane = static_cast<std::size_t>(height_) * width_;
  return std::span<const Complex>(values_).subspan(plane * c, plane);
}

double SpectralMap::hermitian_defect() const {
  double defect = 0.0;
  for (int c = 0; c < channels_; ++c) {
    for (int y = 0; y < height_; ++y) {
      const int my = wrap(-y, height_);
      for (int x = 0; x < width_; ++x) {
        const int mx = wrap(-x, width_);
        defect = std::max(defect, std::abs(values_[index(c, my, mx)] - std::conj(values_[index(c, y, x)])));
      }
    }
  }
  return defect;
}

double SpectralMap::max_abs() const {
  double m = 0.0;
  for (const Complex& v : values_) m = std::max(m, std::abs(v));
  return m;
}

void SpectralMap::require_finite(const char* context) const {
  for (const Complex& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw DomainError(std::string(context) + ": non-finite coefficient");
    }
  }
}

// ---------------------------------------------------------------------------
// Transforms

SpectralMap dft2(const SpatialMap& map) {
  map.require_finite("dft2");
  SpectralMap out(map.height(), map.width(), map.channels(), true);
  std::vector<Complex> buffer(static_cast<std::size_t>(map.height()) * map.width());
  for (int c = 0; c < map.channels(); ++c) {
    const auto plane = map.channel(c);
    std::transform(plane.begin(), plane.end(), buffer.begin(), [](double v) { return Complex(v, 0.0); });
    transform(buffer, out.channel(c), map.height(), map.width(), FFTW_FORWARD);
  }
  return out;
}

std::vector<std::vector<Complex>> idft2_complex(const SpectralMap& spec) {
  spec.require_finite("idft2");
  const double scale = 1.0 / spec.grid().area();
  std::vector<std::vector<Complex>> planes;
  for (int c = 0; c < spec.channels(); ++c) {
    std::vector<Complex> out(static_cast<std::size_t>(spec.grid().area()));
    transform(spec.channel(c), out, spec.height(), spec.width(), FFTW_BACKWARD);
    for (Complex& v : out) v *= scale;
    planes.push_back(std::move(out));
  }
  return planes;
}

SpatialMap idft2(const SpectralMap& spec) {
  const double magnitude = spec.max_abs();
  if (spec.real_origin() && spec.hermitian_defect() > 1e-10 * magnitude) {
    throw DomainError("idft2: spectrum flagged real-origin is not conjugate-symmetric");
  }
  const auto planes = idft2_complex(spec);
  SpatialMap out(spec.height(), spec.width(), spec.channels());
  double residue = 0.0;
  double peak = 0.0;
  for (int c = 0; c < spec.channels(); ++c) {
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = planes[c][i].real();
      residue = std::max(residue, std::abs(planes[c][i].imag()));
      peak = std::max(peak, std::abs(planes[c][i]));
    }
  }
  if (!spec.real_origin() && residue > 1e-9 * std::max(peak, 1e-300)) {
    throw DomainError("idft2: spectrum does not describe a real signal; use idft2_complex");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation

double cubic_bspline_fourier(double f) {
  if (f == 0.0) return 1.0;
  const double x = std::numbers::pi * f;
  const double s = std::sin(x) / x;
  return s * s * s * s;
}

InterpolationKernel spline_kernel(int samples, double period) {
  if (samples < 2) throw DomainError("spline_kernel: need at least two samples");
  if (!(period > 0.0)) throw DomainError("spline_kernel: period must be positive");
  InterpolationKernel kernel{samples, period, {}};
  const int half = samples / 2;
  for (int k = -half; k <= half; ++k) {
    const double phase = -std::numbers::pi * k / samples;
    kernel.coefficients.push_back(std::polar(cubic_bspline_fourier(static_cast<double>(k) / samples) / samples, phase));
  }
  return kernel;
}

InterpolationKernel identity_kernel(int samples, double period) {
  if (samples < 1) throw DomainError("identity_kernel: need at least one sample");
  InterpolationKernel kernel{samples, period, {}};
  kernel.coefficients.assign(static_cast<std::size_t>(2 * (samples / 2) + 1), Complex(1.0 / samples, 0.0));
  return kernel;
}

SpectralMap interpolate(const SpatialMap& map, const InterpolationKernel& kernel_y,
                        const InterpolationKernel& kernel_x, GridSize output) {
  if (kernel_y.samples != map.height() || kernel_x.samples != map.width()) {
    throw ShapeError("interpolate: kernel built for a different native resolution");
  }
  if (output.height < map.height() || output.width < map.width()) {
    throw ShapeError("interpolate: output grid smaller than the native resolution");
  }
  const SpectralMap native = dft2(map);
  const auto taps_y = axis_taps(kernel_y, output.height);
  const auto taps_x = axis_taps(kernel_x, output.width);
  SpectralMap out(output.height, output.width, map.channels(), true);
  for (int c = 0; c < map.channels(); ++c) {
    const auto src = native.channel(c);
    auto dst = out.channel(c);
    for (const AxisTap& ty : taps_y) {
      for (const AxisTap& tx : taps_x) {
        dst[static_cast<std::size_t>(ty.out) * output.width + tx.out] +=
            ty.weight * tx.weight * src[static_cast<std::size_t>(ty.native) * map.width() + tx.native];
      }
    }
  }
  return out;
}

SpectralMap interpolate(const SpatialMap& map, const InterpolationKernel& kernel, GridSize output) {
  return interpolate(map, kernel, kernel, output);
}

// ---------------------------------------------------------------------------
// Padding and correlation

SpectralMap pad_spectrum(const SpectralMap& spec, GridSize target) {
  if (target.height < spec.height() || target.width < spec.width()) {
    throw ShapeError("pad_spectrum: target grid smaller than the input spectrum");
  }
  if (target == spec.grid()) return spec;
  const bool split = spec.real_origin();
  const auto rows = pad_slots(spec.height(), target.height, split);
  const auto cols = pad_slots(spec.width(), target.width, split);
  SpectralMap out(target.height, target.width, spec.channels(), spec.real_origin());
  for (int c = 0; c < spec.channels(); ++c) {
    const auto src = spec.channel(c);
    auto dst = out.channel(c);
    for (int y = 0; y < spec.height(); ++y) {
      for (int x = 0; x < spec.width(); ++x) {
        const Complex v = src[static_cast<std::size_t>(y) * spec.width() + x];
        for (const PadSlot& sy : rows[y]) {
          for (const PadSlot& sx : cols[x]) {
            dst[static_cast<std::size_t>(sy.dest) * target.width + sx.dest] += sy.weight * sx.weight * v;
          }
        }
      }
    }
  }
  return out;
}

SpectralMap hermitian_part(const SpectralMap& spec) {
  SpectralMap out(spec.height(), spec.width(), spec.channels(), true);
  for (int c = 0; c < spec.channels(); ++c) {
    for (int y = 0; y < spec.height(); ++y) {
      for (int x = 0; x < spec.width(); ++x) {
        out.at(c, y, x) = 0.5 * (spec.at(c, y, x) + std::conj(spec.at(c, -y, -x)));
      }
    }
  }
  return out;
}

SpectralMap circular_correlate(const SpectralMap& filter, const SpectralMap& feat) {
  if (filter.grid() != feat.grid() || filter.channels() != feat.channels()) {
    throw ShapeError("circular_correlate: filter and feature shapes differ");
  }
  SpectralMap out(feat.height(), feat.width(), 1, filter.real_origin() && feat.real_origin());
  auto dst = out.channel(0);
  for (int c = 0; c < feat.channels(); ++c) {
    const auto f = filter.channel(c);
    const auto x = feat.channel(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += std::conj(f[i]) * x[i];
  }
  return out;
}

}  // namespace csot
