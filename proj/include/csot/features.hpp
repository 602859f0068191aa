#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "csot/geometry.hpp"
#include "csot/image.hpp"
#include "csot/spectral.hpp"

namespace csot {

/// Search/training sample geometry.
struct SampleConfig {
  double search_area_factor = 5.0;  // linear; the crop covers factor^2 times the target area
  int min_side = 200;
  int max_side = 300;
  int quantum = 4;  // output side is rounded to a multiple of this
};

/// A square crop resampled from a frame.
struct Patch {
  Image pixels;
  Point2 source_center;       // frame pixels
  double source_scale = 1.0;  // frame pixels per patch pixel
};

enum class LayerKind { Gray, Hog, ColorNames, External };

struct FeatureLayerSpec {
  LayerKind kind = LayerKind::Gray;
  int cell_size = 1;
  int channel_count = 1;  // external layers take theirs from the file header
  std::string external_path_template;  // {frame}, {frame:N}, {scale}, {role}
};

FeatureLayerSpec gray_layer(int cell_size);
FeatureLayerSpec hog_layer(int cell_size);
FeatureLayerSpec colornames_layer(int cell_size);
FeatureLayerSpec external_layer(std::string path_template, int cell_size);

enum class Normalization { Channel, Layer, None };

/// 32x32x32 RGB bins to 10 color-attribute probabilities. Immutable after construction.
class ColorNamesTable {
 public:
  static constexpr int kBins = 32;
  static constexpr int kRows = kBins * kBins * kBins;
  static constexpr int kNames = 10;

  /// Layout: kRows rows of kNames little-endian float32, bin index (r*32 + g)*32 + b.
  static ColorNamesTable load(const std::filesystem::path& path);
  /// Soft assignment to ten prototype colors; used when no learned table is supplied.
  static ColorNamesTable prototype();
  explicit ColorNamesTable(std::vector<float> rows);

  void save(const std::filesystem::path& path) const;
  std::span<const float> row(int bin) const {
    return std::span<const float>(rows_).subspan(static_cast<std::size_t>(bin) * kNames, kNames);
  }
  static int bin_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return ((r >> 3) * kBins + (g >> 3)) * kBins + (b >> 3);
  }

 private:
  std::vector<float> rows_;
};

struct FeatureStack {
  std::vector<SpatialMap> layers;
};

/// Where external tensors for the current crop live.
struct ExternalContext {
  int frame = 1;
  int scale = 0;
  std::string role = "search";
};

struct ExtractionContext {
  std::shared_ptr<const ColorNamesTable> colornames;
  Normalization normalization = Normalization::Channel;
  ExternalContext external;
};

/// Linear side of the crop region in frame pixels.
double region_side(Size2 target, double scale, const SampleConfig& config);
/// Side of the resampled patch after clamping into [min_side, max_side].
int sample_side(Size2 target, double scale, const SampleConfig& config);

Patch crop_sample(const Image& frame, Point2 center, Size2 target, double scale, const SampleConfig& config);
/// Resamples a square of `region` frame pixels centered at `center` to `output_side` pixels.
/// Pixels outside the frame replicate the nearest edge pixel.
Patch crop_region(const Image& frame, Point2 center, double region, int output_side);

SpatialMap extract_gray(const Patch& patch, int cell);
SpatialMap extract_hog(const Patch& patch, int cell);
SpatialMap extract_colornames(const Patch& patch, int cell, const ColorNamesTable& table);

SpatialMap load_external(const std::filesystem::path& path);
void store_external(const SpatialMap& map, const std::filesystem::path& path);
std::string expand_external_path(const std::string& path_template, const ExternalContext& context);

void normalize_energy(SpatialMap& map, Normalization mode);
/// Multiplies every channel by a separable Hann taper sampled at cell centers.
void apply_hann_window(SpatialMap& map);

FeatureStack extract_stack(const Patch& patch, std::span<const FeatureLayerSpec> specs,
                           const ExtractionContext& context);

}  // namespace csot
