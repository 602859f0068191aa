#pragma once

// Ingredients of the structural operator: Gaussian labels, cost, the spatial
// regularizer, confidence maps and the filter container.
//
// Normalization conventions:
//   * Interpolated features and label spectra use the dft2 convention on the
//     common T x T grid (idft2 gives values at the grid points).
//   * Filter coefficients w^ are Fourier-series coefficients (dft2 / area), so
//     idft2(circular_correlate(w^, x^)) is the mean correlation
//     S[p] = (1/area) sum_n w[n] x[n + p].

#include <vector>

#include "csot/features.hpp"
#include "csot/spectral.hpp"

namespace csot {

/// Gaussian label: bandwidth and center, both in units of the normalized period.
struct LabelSpec {
  double sigma = 0.1;
  double center_x = 0.0;
  double center_y = 0.0;
};

/// Fourier-series coefficient of the 1-periodic unit-peak Gaussian.
Complex gaussian_label_coefficient(double sigma, double center, int k);
/// Label spectrum on the grid in the dft2 convention.
SpectralMap gaussian_label_spectrum(const LabelSpec& spec, GridSize grid);
/// Unit-peak label sampled on the grid, clamped to [0, 1].
SpatialMap label_map(const LabelSpec& spec, GridSize grid);
/// J = 1 - label.
SpatialMap cost_map(const LabelSpec& spec, GridSize grid);

/// Spatial weights gamma(m, n) and their sparse Fourier-series coefficients.
class Regularizer {
 public:
  struct Tap {
    int ky;
    int kx;
    Complex value;
  };

  Regularizer() = default;
  Regularizer(SpatialMap weights, double truncation);

  const SpatialMap& weights() const noexcept { return weights_; }
  const std::vector<Tap>& taps() const noexcept { return taps_; }
  GridSize grid() const noexcept { return weights_.grid(); }

  /// (gamma w)^ = gamma^ (*) w^, channel by channel (circular convolution).
  SpectralMap apply(const SpectralMap& coefficients) const;
  /// Diagonal of the Gram operator, sum_j |gamma^[j]|^2.
  double gram_diagonal() const noexcept;

 private:
  SpatialMap weights_;
  std::vector<Tap> taps_;
};

/// Quadratic-profile weights min_weight + slope * ((m/M)^2 + (n/N)^2) with (m, n)
/// measured from the grid center, realized as a two-harmonic cosine series per axis.
Regularizer build_regularizer(GridSize grid, double min_weight, double slope);
/// Same profile with (m, n) measured in units of a target extent of rows x cols cells,
/// so the weight at distance r from the center is about min_weight + slope * (r / extent)^2.
Regularizer build_regularizer(GridSize grid, double rows, double cols, double min_weight, double slope);
/// gamma = value everywhere.
Regularizer constant_regularizer(GridSize grid, double value = 1.0);

/// Quadratic profile fitted with f(x) = c0 + c1 cos(2 pi x) + c2 cos(4 pi x) on x in [-1/2, 1/2).
double regularizer_profile(double x);

/// A real score grid with its refined maximum.
struct ConfidenceMap {
  SpatialMap grid;          // single channel
  Point2 peak;              // cell coordinates, x = column
  double peak_value = 0.0;  // grid maximum before refinement
  int peak_row = 0;
  int peak_col = 0;

  /// Peak as a signed circular shift in cells, each component in [-T/2, T/2).
  Point2 shift() const;
};

/// Finds the argmax and refines it with a least-squares quadratic over the 3x3
/// (circular) neighborhood. Falls back to the cell itself when the fit is not a maximum.
ConfidenceMap make_confidence(SpatialMap grid);

struct KernelSpec {
  enum class Kind { Linear, Gaussian };
  Kind kind = Kind::Gaussian;
  double bandwidth = 0.2;
};

/// Per-layer filters. In dual mode the layers hold alpha^ and the training features.
struct StructuralFilter {
  enum class Mode { Primal, Dual };
  Mode mode = Mode::Primal;
  std::vector<SpectralMap> layers;
  std::vector<SpectralMap> training;  // dual only
  KernelSpec kernel;                  // dual only

  static StructuralFilter zeros(const std::vector<SpectralMap>& like);
};

/// Per-layer primal confidence maps (fusion happens in the ensemble module).
std::vector<ConfidenceMap> score(const StructuralFilter& filters, const std::vector<SpectralMap>& feats);
/// Score map of one layer, S = idft2(conj(w^) x^).
SpatialMap score_layer(const SpectralMap& filter, const SpectralMap& feat);

}  // namespace csot
