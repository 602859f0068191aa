#include "csot/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "csot/error.hpp"
#include "csot/optimizer.hpp"

namespace csot {

namespace {

constexpr double kPi = std::numbers::pi;

// Cosine-series fit of x^2 on [-1/2, 1/2): exact at 0 and +-1/2, same curvature at 0.
constexpr double kProfileC1 = -0.125;
const double kProfileC2 = (kPi * kPi / 2.0 - 2.0) / (16.0 * kPi * kPi);
const double kProfileC0 = 0.125 - kProfileC2;

}  // namespace

// ---------------------------------------------------------------------------
// Labels

Complex gaussian_label_coefficient(double sigma, double center, int k) {
  if (!(sigma > 0.0)) throw DomainError("label: sigma must be positive");
  const double magnitude = std::sqrt(2.0 * kPi) * sigma * std::exp(-2.0 * kPi * kPi * sigma * sigma * k * k);
  return std::polar(magnitude, -2.0 * kPi * k * center);
}

SpectralMap gaussian_label_spectrum(const LabelSpec& spec, GridSize grid) {
  if (!(spec.sigma > 0.0)) throw DomainError("label: sigma must be positive");
  if (spec.center_x < 0.0 || spec.center_x >= 1.0 || spec.center_y < 0.0 || spec.center_y >= 1.0) {
    throw DomainError("label: center must lie in [0, 1)");
  }
  // For an even grid the Nyquist bin stands for +K/2 and -K/2 at once; averaging
  // the two keeps the spectrum Hermitian for off-center labels.
  auto axis = [&](int n, double center) {
    std::vector<Complex> coeff(static_cast<std::size_t>(n));
    for (int k = SpectralMap::min_frequency(n); k <= SpectralMap::max_frequency(n); ++k) {
      Complex v = gaussian_label_coefficient(spec.sigma, center, k);
      if (n % 2 == 0 && k == -(n / 2)) v = 0.5 * (v + gaussian_label_coefficient(spec.sigma, center, -k));
      coeff[SpectralMap::wrap(k, n)] = v;
    }
    return coeff;
  };
  const auto my = axis(grid.height, spec.center_y);
  const auto mx = axis(grid.width, spec.center_x);
  SpectralMap out(grid.height, grid.width, 1, true);
  auto dst = out.channel(0);
  const double area = grid.area();
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) dst[static_cast<std::size_t>(y) * grid.width + x] = area * my[y] * mx[x];
  }
  return out;
}

SpatialMap label_map(const LabelSpec& spec, GridSize grid) {
  SpatialMap m = idft2(gaussian_label_spectrum(spec, grid));
  for (double& v : m.values()) v = std::clamp(v, 0.0, 1.0);
  return m;
}

SpatialMap cost_map(const LabelSpec& spec, GridSize grid) {
  SpatialMap j = label_map(spec, grid);
  for (double& v : j.values()) v = 1.0 - v;
  return j;
}

// ---------------------------------------------------------------------------
// Regularizer

double regularizer_profile(double x) {
  return kProfileC0 + kProfileC1 * std::cos(2.0 * kPi * x) + kProfileC2 * std::cos(4.0 * kPi * x);
}

Regularizer::Regularizer(SpatialMap weights, double truncation) : weights_(std::move(weights)) {
  if (weights_.channels() != 1) throw ShapeError("regularizer: weights must have one channel");
  weights_.require_finite("regularizer");
  const SpectralMap spectrum = dft2(weights_);
  const double area = weights_.grid().area();
  const double cutoff = truncation * spectrum.max_abs();
  const int h = weights_.height();
  const int w = weights_.width();
  for (int ky = SpectralMap::min_frequency(h); ky <= SpectralMap::max_frequency(h); ++ky) {
    for (int kx = SpectralMap::min_frequency(w); kx <= SpectralMap::max_frequency(w); ++kx) {
      const Complex v = spectrum.at(0, ky, kx);
      if (std::abs(v) > cutoff) taps_.push_back({ky, kx, v / area});
    }
  }
}

SpectralMap Regularizer::apply(const SpectralMap& coefficients) const {
  if (coefficients.grid() != grid()) throw ShapeError("regularizer: grid mismatch");
  const int h = coefficients.height();
  const int w = coefficients.width();
  SpectralMap out(h, w, coefficients.channels(), coefficients.real_origin());
  for (int c = 0; c < coefficients.channels(); ++c) {
    const auto src = coefficients.channel(c);
    auto dst = out.channel(c);
    for (const Tap& tap : taps_) {
      const int sy = SpectralMap::wrap(tap.ky, h);
      const int sx = SpectralMap::wrap(tap.kx, w);
      for (int y = 0; y < h; ++y) {
        const int yy = y + sy < h ? y + sy : y + sy - h;
        const Complex* row = &src[static_cast<std::size_t>(y) * w];
        Complex* drow = &dst[static_cast<std::size_t>(yy) * w];
        for (int x = 0; x < w - sx; ++x) drow[x + sx] += tap.value * row[x];
        for (int x = w - sx; x < w; ++x) drow[x + sx - w] += tap.value * row[x];
      }
    }
  }
  return out;
}

double Regularizer::gram_diagonal() const noexcept {
  double sum = 0.0;
  for (const Tap& tap : taps_) sum += std::norm(tap.value);
  return sum;
}

Regularizer build_regularizer(GridSize grid, double min_weight, double slope) {
  return build_regularizer(grid, grid.height, grid.width, min_weight, slope);
}

Regularizer build_regularizer(GridSize grid, double rows, double cols, double min_weight, double slope) {
  if (grid.height < 1 || grid.width < 1) throw DomainError("regularizer: empty grid");
  if (!(rows > 0.0) || !(cols > 0.0)) throw DomainError("regularizer: extent must be positive");
  const double sy = (grid.height / rows) * (grid.height / rows);
  const double sx = (grid.width / cols) * (grid.width / cols);
  SpatialMap weights(grid.height, grid.width, 1);
  for (int m = 0; m < grid.height; ++m) {
    const double fy = sy * regularizer_profile((m - grid.height / 2) / static_cast<double>(grid.height));
    for (int n = 0; n < grid.width; ++n) {
      const double fx = sx * regularizer_profile((n - grid.width / 2) / static_cast<double>(grid.width));
      weights.at(0, m, n) = min_weight + slope * (fy + fx);
    }
  }
  return Regularizer(std::move(weights), 1e-8);
}

Regularizer constant_regularizer(GridSize grid, double value) {
  SpatialMap weights(grid.height, grid.width, 1);
  std::fill(weights.values().begin(), weights.values().end(), value);
  return Regularizer(std::move(weights), 1e-8);
}

// ---------------------------------------------------------------------------
// Confidence maps

Point2 ConfidenceMap::shift() const {
  auto wrap = [](double v, int n) {
    double r = std::fmod(v, static_cast<double>(n));
    if (r < 0) r += n;
    return r >= n / 2.0 ? r - n : r;
  };
  return {wrap(peak.x, grid.width()), wrap(peak.y, grid.height())};
}

ConfidenceMap make_confidence(SpatialMap grid) {
  if (grid.channels() != 1) throw ShapeError("confidence map must have one channel");
  grid.require_finite("confidence map");
  ConfidenceMap map;
  const int h = grid.height();
  const int w = grid.width();
  const auto values = grid.channel(0);
  const auto best = std::max_element(values.begin(), values.end());
  const int idx = static_cast<int>(best - values.begin());
  map.peak_row = idx / w;
  map.peak_col = idx % w;
  map.peak_value = *best;

  double b = 0.0, c = 0.0, d = 0.0, e = 0.0, g = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const double f = grid.at(0, SpectralMap::wrap(map.peak_row + dy, h), SpectralMap::wrap(map.peak_col + dx, w));
      b += dx * f;
      c += dy * f;
      d += (dx * dx - 2.0 / 3.0) * f;
      g += (dy * dy - 2.0 / 3.0) * f;
      e += dx * dy * f;
    }
  }
  b /= 6.0;
  c /= 6.0;
  d /= 2.0;
  g /= 2.0;
  e /= 4.0;
  // Stationary point of b x + c y + d x^2 + e x y + g y^2.
  double ox = 0.0;
  double oy = 0.0;
  const double det = 4.0 * d * g - e * e;
  if (w >= 3 && h >= 3 && d < 0.0 && det > 0.0) {
    ox = std::clamp((-2.0 * g * b + e * c) / det, -1.0, 1.0);
    oy = std::clamp((-2.0 * d * c + e * b) / det, -1.0, 1.0);
  }
  map.peak = {map.peak_col + ox, map.peak_row + oy};
  map.grid = std::move(grid);
  return map;
}

// ---------------------------------------------------------------------------
// Filters and scoring

StructuralFilter StructuralFilter::zeros(const std::vector<SpectralMap>& like) {
  StructuralFilter f;
  for (const SpectralMap& m : like) f.layers.emplace_back(m.height(), m.width(), m.channels(), true);
  return f;
}

SpatialMap score_layer(const SpectralMap& filter, const SpectralMap& feat) {
  return idft2(circular_correlate(filter, feat));
}

std::vector<ConfidenceMap> score(const StructuralFilter& filters, const std::vector<SpectralMap>& feats) {
  if (filters.layers.size() != feats.size()) throw ShapeError("score: layer count mismatch");
  std::vector<ConfidenceMap> maps;
  maps.reserve(feats.size());
  for (std::size_t l = 0; l < feats.size(); ++l) {
    if (filters.mode == StructuralFilter::Mode::Primal) {
      maps.push_back(make_confidence(score_layer(filters.layers[l], feats[l])));
    } else {
      const SpectralMap cross = kernel_correlation(filters.training.at(l), feats[l], filters.kernel);
      maps.push_back(score_dual(cross, filters.layers[l]));
    }
  }
  return maps;
}

}  // namespace csot
