#include "csot/features.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "csot/error.hpp"

namespace csot {

namespace {

constexpr std::array<char, 4> kExternalMagic = {'C', 'S', 'O', 'T'};
constexpr std::uint16_t kExternalVersion = 1;
constexpr std::uint64_t kMaxExternalValues = std::uint64_t{1} << 30;

void require_cell(const Patch& patch, int cell, int min_cells, const char* what) {
  if (cell < 1) throw DomainError(std::string(what) + ": cell size must be >= 1");
  if (patch.pixels.width < min_cells * cell || patch.pixels.height < min_cells * cell) {
    throw DomainError(std::string(what) + ": patch too small for the cell size");
  }
}

double luminance(const std::uint8_t* p) { return (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0; }

// Little-endian helpers; the external format is LE regardless of host order.
template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

}  // namespace

FeatureLayerSpec gray_layer(int cell_size) { return {LayerKind::Gray, cell_size, 1, {}}; }
FeatureLayerSpec hog_layer(int cell_size) { return {LayerKind::Hog, cell_size, 31, {}}; }
FeatureLayerSpec colornames_layer(int cell_size) {
  return {LayerKind::ColorNames, cell_size, ColorNamesTable::kNames, {}};
}
FeatureLayerSpec external_layer(std::string path_template, int cell_size) {
  return {LayerKind::External, cell_size, 0, std::move(path_template)};
}

// ---------------------------------------------------------------------------
// Sampling

double region_side(Size2 target, double scale, const SampleConfig& config) {
  return config.search_area_factor * std::sqrt(target.width * target.height) * scale;
}

int sample_side(Size2 target, double scale, const SampleConfig& config) {
  const double region = region_side(target, scale, config);
  const double clamped = std::clamp(region, static_cast<double>(config.min_side), static_cast<double>(config.max_side));
  const int quantum = std::max(config.quantum, 1);
  return std::max(quantum, static_cast<int>(std::lround(clamped / quantum)) * quantum);
}

Patch crop_region(const Image& frame, Point2 center, double region, int output_side) {
  if (frame.empty()) throw DomainError("crop: empty frame");
  if (!(region > 0.0) || output_side < 1) throw DomainError("crop: degenerate region");
  const double step = region / output_side;
  // dst pixel u (center u + 0.5) maps to continuous frame coordinate
  // center.x + (u + 0.5 - side/2) * step, sampled at that coordinate - 0.5.
  cv::Matx23d inverse(step, 0.0, center.x - step * output_side / 2.0 + 0.5 * step - 0.5,
                      0.0, step, center.y - step * output_side / 2.0 + 0.5 * step - 0.5);
  cv::Mat src(frame.height, frame.width, CV_8UC3, const_cast<std::uint8_t*>(frame.rgb.data()));
  Patch patch;
  patch.pixels = Image(output_side, output_side);
  cv::Mat dst(output_side, output_side, CV_8UC3, patch.pixels.rgb.data());
  cv::warpAffine(src, dst, inverse, dst.size(), cv::INTER_LINEAR | cv::WARP_INVERSE_MAP, cv::BORDER_REPLICATE);
  patch.source_center = center;
  patch.source_scale = step;
  return patch;
}

Patch crop_sample(const Image& frame, Point2 center, Size2 target, double scale, const SampleConfig& config) {
  if (!(target.width > 0.0) || !(target.height > 0.0)) throw DomainError("crop_sample: degenerate target size");
  if (!(scale > 0.0)) throw DomainError("crop_sample: scale must be positive");
  return crop_region(frame, center, region_side(target, scale, config), sample_side(target, scale, config));
}

// ---------------------------------------------------------------------------
// Grayscale

SpatialMap extract_gray(const Patch& patch, int cell) {
  require_cell(patch, cell, 1, "extract_gray");
  const int rows = patch.pixels.height / cell;
  const int cols = patch.pixels.width / cell;
  const int oy = (patch.pixels.height - rows * cell) / 2;
  const int ox = (patch.pixels.width - cols * cell) / 2;
  SpatialMap out(rows, cols, 1);
  double mean = 0.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (int y = 0; y < cell; ++y) {
        for (int x = 0; x < cell; ++x) sum += luminance(patch.pixels.pixel(ox + c * cell + x, oy + r * cell + y));
      }
      out.at(0, r, c) = sum / (cell * cell);
      mean += out.at(0, r, c);
    }
  }
  mean /= rows * cols;
  for (double& v : out.values()) v -= mean;
  return out;
}

// ---------------------------------------------------------------------------
// HOG: Felzenszwalb's 31-channel variant (18 signed + 9 unsigned orientations,
// 4 texture energies), with bilinear spatial voting and 0.2 truncation.

SpatialMap extract_hog(const Patch& patch, int cell) {
  require_cell(patch, cell, 3, "extract_hog");
  constexpr int kSigned = 18;
  constexpr int kUnsigned = 9;
  const Image& img = patch.pixels;
  const int rows = img.height / cell;
  const int cols = img.width / cell;
  const int oy = (img.height - rows * cell) / 2;
  const int ox = (img.width - cols * cell) / 2;

  std::array<double, kUnsigned> uu{};
  std::array<double, kUnsigned> vv{};
  for (int o = 0; o < kUnsigned; ++o) {
    uu[o] = std::cos(o * std::numbers::pi / kUnsigned);
    vv[o] = std::sin(o * std::numbers::pi / kUnsigned);
  }

  std::vector<double> hist(static_cast<std::size_t>(rows) * cols * kSigned, 0.0);
  auto bin = [&](int r, int c, int o) -> double& {
    return hist[(static_cast<std::size_t>(r) * cols + c) * kSigned + o];
  };
  auto px = [&](int x, int y) {
    return img.pixel(std::clamp(x, 0, img.width - 1), std::clamp(y, 0, img.height - 1));
  };

  for (int y = 0; y < rows * cell; ++y) {
    for (int x = 0; x < cols * cell; ++x) {
      const int ix = ox + x;
      const int iy = oy + y;
      double best_dx = 0.0;
      double best_dy = 0.0;
      double best_v = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double dx = (static_cast<double>(px(ix + 1, iy)[ch]) - px(ix - 1, iy)[ch]) / 255.0;
        const double dy = (static_cast<double>(px(ix, iy + 1)[ch]) - px(ix, iy - 1)[ch]) / 255.0;
        const double v = dx * dx + dy * dy;
        if (v > best_v) {
          best_v = v;
          best_dx = dx;
          best_dy = dy;
        }
      }
      if (best_v <= 0.0) continue;

      double best_dot = 0.0;
      int best_o = 0;
      for (int o = 0; o < kUnsigned; ++o) {
        const double dot = uu[o] * best_dx + vv[o] * best_dy;
        if (dot > best_dot) {
          best_dot = dot;
          best_o = o;
        } else if (-dot > best_dot) {
          best_dot = -dot;
          best_o = o + kUnsigned;
        }
      }

      const double magnitude = std::sqrt(best_v);
      const double xp = (x + 0.5) / cell - 0.5;
      const double yp = (y + 0.5) / cell - 0.5;
      const int ixp = static_cast<int>(std::floor(xp));
      const int iyp = static_cast<int>(std::floor(yp));
      const double vx0 = xp - ixp;
      const double vy0 = yp - iyp;
      const double vx1 = 1.0 - vx0;
      const double vy1 = 1.0 - vy0;
      if (ixp >= 0 && iyp >= 0) bin(iyp, ixp, best_o) += vx1 * vy1 * magnitude;
      if (ixp + 1 < cols && iyp >= 0) bin(iyp, ixp + 1, best_o) += vx0 * vy1 * magnitude;
      if (ixp >= 0 && iyp + 1 < rows) bin(iyp + 1, ixp, best_o) += vx1 * vy0 * magnitude;
      if (ixp + 1 < cols && iyp + 1 < rows) bin(iyp + 1, ixp + 1, best_o) += vx0 * vy0 * magnitude;
    }
  }

  std::vector<double> energy(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double e = 0.0;
      for (int o = 0; o < kUnsigned; ++o) {
        const double s = bin(r, c, o) + bin(r, c, o + kUnsigned);
        e += s * s;
      }
      energy[static_cast<std::size_t>(r) * cols + c] = e;
    }
  }
  auto block = [&](int r, int c) {
    // 2x2 block of cell energies with top-left (r, c); borders replicate.
    double sum = 0.0;
    for (int dr = 0; dr < 2; ++dr) {
      for (int dc = 0; dc < 2; ++dc) {
        const int rr = std::clamp(r + dr, 0, rows - 1);
        const int cc = std::clamp(c + dc, 0, cols - 1);
        sum += energy[static_cast<std::size_t>(rr) * cols + cc];
      }
    }
    return sum;
  };

  constexpr double kEps = 1e-8;
  constexpr double kClip = 0.2;
  constexpr double kTexture = 0.2357;
  SpatialMap out(rows, cols, 31);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::array<double, 4> norms = {
          1.0 / std::sqrt(block(r, c) + kEps), 1.0 / std::sqrt(block(r, c - 1) + kEps),
          1.0 / std::sqrt(block(r - 1, c) + kEps), 1.0 / std::sqrt(block(r - 1, c - 1) + kEps)};
      std::array<double, 4> texture{};
      for (int o = 0; o < kSigned; ++o) {
        double sum = 0.0;
        for (int n = 0; n < 4; ++n) {
          const double h = std::min(bin(r, c, o) * norms[n], kClip);
          sum += h;
          texture[n] += h;
        }
        out.at(o, r, c) = 0.5 * sum;
      }
      for (int o = 0; o < kUnsigned; ++o) {
        const double s = bin(r, c, o) + bin(r, c, o + kUnsigned);
        double sum = 0.0;
        for (int n = 0; n < 4; ++n) sum += std::min(s * norms[n], kClip);
        out.at(kSigned + o, r, c) = 0.5 * sum;
      }
      for (int n = 0; n < 4; ++n) out.at(kSigned + kUnsigned + n, r, c) = kTexture * texture[n];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ColorNames

ColorNamesTable::ColorNamesTable(std::vector<float> rows) : rows_(std::move(rows)) {
  if (rows_.size() != static_cast<std::size_t>(kRows) * kNames) {
    throw FormatError(FormatError::Kind::Truncated, "ColorNames table must hold 32768 x 10 values");
  }
  for (float v : rows_) {
    if (!std::isfinite(v) || v < 0.0f) throw FormatError(FormatError::Kind::Parse, "ColorNames table: invalid probability");
  }
}

ColorNamesTable ColorNamesTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open ColorNames table " + path.string());
  std::vector<float> rows(static_cast<std::size_t>(kRows) * kNames);
  for (float& v : rows) {
    if (!get_le(in, v)) throw FormatError(FormatError::Kind::Truncated, "ColorNames table truncated: " + path.string());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(FormatError::Kind::Parse, "ColorNames table has trailing bytes: " + path.string());
  }
  return ColorNamesTable(std::move(rows));
}

ColorNamesTable ColorNamesTable::prototype() {
  // black, blue, brown, grey, green, orange, purple, red, white, yellow
  static constexpr std::array<std::array<double, 3>, kNames> kPrototypes = {{
      {0, 0, 0}, {40, 60, 200}, {130, 80, 40}, {128, 128, 128}, {40, 160, 40},
      {250, 140, 10}, {130, 40, 160}, {210, 30, 30}, {255, 255, 255}, {240, 230, 40},
  }};
  constexpr double kSpread = 2.0 * 60.0 * 60.0;
  std::vector<float> rows(static_cast<std::size_t>(kRows) * kNames);
  for (int r = 0; r < kBins; ++r) {
    for (int g = 0; g < kBins; ++g) {
      for (int b = 0; b < kBins; ++b) {
        const std::array<double, 3> rgb = {r * 8 + 3.5, g * 8 + 3.5, b * 8 + 3.5};
        std::array<double, kNames> p{};
        double total = 0.0;
        for (int n = 0; n < kNames; ++n) {
          double d2 = 0.0;
          for (int k = 0; k < 3; ++k) d2 += (rgb[k] - kPrototypes[n][k]) * (rgb[k] - kPrototypes[n][k]);
          p[n] = std::exp(-d2 / kSpread);
          total += p[n];
        }
        const std::size_t row = static_cast<std::size_t>((r * kBins + g) * kBins + b);
        for (int n = 0; n < kNames; ++n) rows[row * kNames + n] = static_cast<float>(p[n] / total);
      }
    }
  }
  return ColorNamesTable(std::move(rows));
}

void ColorNamesTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write ColorNames table " + path.string());
  for (float v : rows_) put_le(out, v);
}

SpatialMap extract_colornames(const Patch& patch, int cell, const ColorNamesTable& table) {
  require_cell(patch, cell, 1, "extract_colornames");
  const int rows = patch.pixels.height / cell;
  const int cols = patch.pixels.width / cell;
  const int oy = (patch.pixels.height - rows * cell) / 2;
  const int ox = (patch.pixels.width - cols * cell) / 2;
  SpatialMap out(rows, cols, ColorNamesTable::kNames);
  const double inv = 1.0 / (cell * cell);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::array<double, ColorNamesTable::kNames> acc{};
      for (int y = 0; y < cell; ++y) {
        for (int x = 0; x < cell; ++x) {
          const std::uint8_t* p = patch.pixels.pixel(ox + c * cell + x, oy + r * cell + y);
          const auto probs = table.row(ColorNamesTable::bin_of(p[0], p[1], p[2]));
          for (int n = 0; n < ColorNamesTable::kNames; ++n) acc[n] += probs[n];
        }
      }
      for (int n = 0; n < ColorNamesTable::kNames; ++n) out.at(n, r, c) = acc[n] * inv;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// External tensors

void store_external(const SpatialMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out.write(kExternalMagic.data(), kExternalMagic.size());
  put_le(out, kExternalVersion);
  put_le(out, static_cast<std::uint32_t>(map.height()));
  put_le(out, static_cast<std::uint32_t>(map.width()));
  put_le(out, static_cast<std::uint32_t>(map.channels()));
  for (double v : map.values()) put_le(out, static_cast<float>(v));
  if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

SpatialMap load_external(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) throw FormatError(FormatError::Kind::Truncated, "truncated header: " + path.string());
  if (magic != kExternalMagic) throw FormatError(FormatError::Kind::BadMagic, "bad magic: " + path.string());
  std::uint16_t version = 0;
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::uint32_t d = 0;
  if (!get_le(in, version)) throw FormatError(FormatError::Kind::Truncated, "truncated header: " + path.string());
  if (version != kExternalVersion) {
    throw FormatError(FormatError::Kind::UnsupportedVersion, "unsupported version " + std::to_string(version));
  }
  if (!get_le(in, h) || !get_le(in, w) || !get_le(in, d)) {
    throw FormatError(FormatError::Kind::Truncated, "truncated header: " + path.string());
  }
  const std::uint64_t count = std::uint64_t{h} * w * d;
  if (h == 0 || w == 0 || d == 0 || count > kMaxExternalValues ||
      h > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      w > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      d > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw FormatError(FormatError::Kind::DimensionOverflow, "invalid tensor dimensions in " + path.string());
  }
  std::vector<double> values(static_cast<std::size_t>(count));
  for (double& v : values) {
    float f = 0.0f;
    if (!get_le(in, f)) throw FormatError(FormatError::Kind::Truncated, "truncated payload: " + path.string());
    v = f;
  }
  SpatialMap map(static_cast<int>(h), static_cast<int>(w), static_cast<int>(d), std::move(values));
  map.require_finite("load_external");
  return map;
}

std::string expand_external_path(const std::string& path_template, const ExternalContext& context) {
  std::string out;
  for (std::size_t i = 0; i < path_template.size();) {
    if (path_template[i] != '{') {
      out += path_template[i++];
      continue;
    }
    const std::size_t close = path_template.find('}', i);
    if (close == std::string::npos) throw DomainError("unterminated placeholder in " + path_template);
    const std::string field = path_template.substr(i + 1, close - i - 1);
    const std::size_t colon = field.find(':');
    const std::string name = field.substr(0, colon);
    const int width = colon == std::string::npos ? 0 : std::stoi(field.substr(colon + 1));
    std::string value;
    if (name == "frame") {
      value = std::to_string(context.frame);
    } else if (name == "scale") {
      value = std::to_string(context.scale);
    } else if (name == "role") {
      value = context.role;
    } else {
      throw DomainError("unknown placeholder {" + name + "} in " + path_template);
    }
    if (static_cast<int>(value.size()) < width) value.insert(0, static_cast<std::size_t>(width) - value.size(), '0');
    out += value;
    i = close + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stack

void normalize_energy(SpatialMap& map, Normalization mode) {
  constexpr double kFloor = 1e-20;
  if (mode == Normalization::None) return;
  if (mode == Normalization::Layer) {
    double ms = 0.0;
    for (double v : map.values()) ms += v * v;
    ms /= static_cast<double>(map.values().size());
    if (ms > kFloor) {
      const double s = 1.0 / std::sqrt(ms);
      for (double& v : map.values()) v *= s;
    }
    return;
  }
  for (int c = 0; c < map.channels(); ++c) {
    auto plane = map.channel(c);
    double ms = 0.0;
    for (double v : plane) ms += v * v;
    ms /= static_cast<double>(plane.size());
    if (ms > kFloor) {
      const double s = 1.0 / std::sqrt(ms);
      for (double& v : plane) v *= s;
    }
  }
}

void apply_hann_window(SpatialMap& map) {
  auto taper = [](int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
    return w;
  };
  const auto wy = taper(map.height());
  const auto wx = taper(map.width());
  for (int c = 0; c < map.channels(); ++c) {
    for (int y = 0; y < map.height(); ++y) {
      for (int x = 0; x < map.width(); ++x) map.at(c, y, x) *= wy[y] * wx[x];
    }
  }
}

FeatureStack extract_stack(const Patch& patch, std::span<const FeatureLayerSpec> specs,
                           const ExtractionContext& context) {
  if (specs.size() < 2) throw DomainError("extract_stack: at least two feature layers are required");
  FeatureStack stack;
  for (const FeatureLayerSpec& spec : specs) {
    SpatialMap layer;
    switch (spec.kind) {
      case LayerKind::Gray:
        layer = extract_gray(patch, spec.cell_size);
        break;
      case LayerKind::Hog:
        layer = extract_hog(patch, spec.cell_size);
        break;
      case LayerKind::ColorNames:
        if (!context.colornames) throw DomainError("extract_stack: ColorNames layer without a table");
        layer = extract_colornames(patch, spec.cell_size, *context.colornames);
        break;
      case LayerKind::External: {
        layer = load_external(expand_external_path(spec.external_path_template, context.external));
        const int rows = patch.pixels.height / spec.cell_size;
        const int cols = patch.pixels.width / spec.cell_size;
        if (layer.height() != rows || layer.width() != cols) {
          throw ShapeError("extract_stack: external tensor is " + std::to_string(layer.height()) + "x" +
                           std::to_string(layer.width()) + ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols));
        }
        break;
      }
    }
    normalize_energy(layer, context.normalization);
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

}  // namespace csot
