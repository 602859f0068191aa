#pragma once

// The online tracker: initialization on the first frame, scale-pyramid
// detection, and warm-started model updates.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csot/ensemble.hpp"
#include "csot/features.hpp"
#include "csot/geometry.hpp"
#include "csot/optimizer.hpp"

namespace csot {

struct TrackerConfig {
  std::vector<FeatureLayerSpec> layers = {gray_layer(2), hog_layer(4), colornames_layer(4)};
  SolverConfig solver;
  LabelSpec label;
  int scale_layers = 10;
  double scale_step = 1.03;
  bool symmetric_scales = false;  // tau in {-(D-1)/2 .. (D-1)/2} rounded outward instead of the floor set
  SampleConfig sample;
  std::optional<KernelSpec> kernel;  // dual path when set
  bool regularize = true;
  double reg_min_weight = 0.1;
  double reg_slope = 3.0;
  Normalization normalization = Normalization::Channel;
  bool window = true;  // Hann taper on every layer before interpolation
  MapNormalization fusion = MapNormalization::MinShift;
  /// Blend of the newest training features into the model; 1 uses the current frame only.
  double learning_rate = 1.0;
  std::string colornames_table;  // empty: built-in prototype table
  std::string external_root;     // prefix for relative external tensor paths
};

/// hc: gray + HOG + ColorNames, primal; khc: the same with a Gaussian kernel;
/// external: two file-ingested layers (paths must be configured).
TrackerConfig preset_config(const std::string& name);

/// a^tau for the configured index set, ascending.
std::vector<double> scale_factors(int layers, double step, bool symmetric = false);

/// Shared, immutable per-run data fixed at initialization.
struct TrackerSetup {
  TrackerConfig config;
  int sample_side = 0;  // resampled crop side, px
  GridSize grid;        // common T x T grid
  std::vector<InterpolationKernel> kernels;  // per layer
  std::vector<double> scales;
  int unit_scale_index = 0;
  std::shared_ptr<const ColorNamesTable> colornames;
  Regularizer regularizer;
  SpatialMap cost;
};

struct TrackerState {
  Point2 position;
  Size2 size;
  StructuralFilter filters;
  std::vector<SpectralMap> model;  // training features (blended when learning_rate < 1)
  std::shared_ptr<const TrackerSetup> setup;
  int frame_index = 0;
  ConfidenceMap last_optimal;
  OptimizeReport last_report;
};

struct Detection {
  Point2 position;
  int scale_index = 0;
  double scale_factor = 1.0;
  ConfidenceMap optimal;
  std::vector<double> scale_peaks;  // fused peak value per scale
};

/// Crops, extracts and interpolates the feature stack for one sample.
std::vector<SpectralMap> sample_features(const TrackerSetup& setup, const Image& frame, Point2 center,
                                         double region, int frame_number, int scale_index, const char* role);

TrackerState init(const Image& frame, const Box& bbox, const TrackerConfig& config);
Detection detect(const TrackerState& state, const Image& frame);
TrackerState update(const TrackerState& state, const Image& frame, Point2 position, int scale_index);

struct TrackResult {
  std::vector<Box> boxes;
  std::vector<double> frame_seconds;
};

/// Frame provider; called with 0-based indices in order.
using FrameSource = std::function<Image(int)>;

TrackResult track_sequence(int frame_count, const FrameSource& frames, const Box& init_box,
                           const TrackerConfig& config);
TrackResult track_sequence(const std::vector<Image>& frames, const Box& init_box, const TrackerConfig& config);

}  // namespace csot
