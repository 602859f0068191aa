#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "csot/error.hpp"
#include "csot/features.hpp"
#include "helpers.hpp"

using namespace csot;
namespace fs = std::filesystem;

namespace {

Patch solid_patch(int side, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Patch p;
  p.pixels = Image(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) p.pixels.set(x, y, r, g, b);
  }
  return p;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "csot_feature_tests";
  fs::create_directories(dir);
  return dir / name;
}

int argmax_orientation(const SpatialMap& hog) {
  // Unsigned orientation bins are channels 18..26; sum over all cells.
  int best = 0;
  double best_value = -1.0;
  for (int c = 18; c < 27; ++c) {
    double s = 0.0;
    for (double v : hog.channel(c)) s += v;
    if (s > best_value) {
      best_value = s;
      best = c - 18;
    }
  }
  return best;
}

}  // namespace

TEST(CropSample, SizesFollowClampRule) {
  const Image frame(640, 480);
  const SampleConfig cfg;
  const Patch a = crop_sample(frame, {320, 240}, {40, 40}, 1.0, cfg);
  EXPECT_EQ(a.pixels.width, 200);
  EXPECT_NEAR(a.source_scale, 1.0, 1e-12);
  const Patch b = crop_sample(frame, {320, 240}, {100, 100}, 1.0, cfg);
  EXPECT_EQ(b.pixels.width, 300);
  EXPECT_NEAR(b.source_scale, 500.0 / 300.0, 1e-12);
  EXPECT_THROW(crop_sample(frame, {320, 240}, {0, 40}, 1.0, cfg), DomainError);
}

TEST(CropSample, CornerReplicatesBorder) {
  Image frame(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) frame.set(x, y, 200, 10, 10);
  }
  const Patch p = crop_sample(frame, {0, 0}, {20, 20}, 1.0, SampleConfig{});
  EXPECT_EQ(p.pixels.width, 200);
  EXPECT_EQ(p.pixels.pixel(0, 0)[0], 200);
  EXPECT_EQ(p.pixels.pixel(5, 5)[1], 10);
}

TEST(CropSample, Deterministic) {
  Image frame(100, 80);
  for (std::size_t i = 0; i < frame.rgb.size(); ++i) frame.rgb[i] = static_cast<std::uint8_t>(i * 37 % 251);
  const Patch a = crop_sample(frame, {40, 30}, {17, 23}, 1.07, SampleConfig{});
  const Patch b = crop_sample(frame, {40, 30}, {17, 23}, 1.07, SampleConfig{});
  EXPECT_EQ(a.pixels, b.pixels);
}

TEST(Gray, UniformIsZero) {
  const SpatialMap m = extract_gray(solid_patch(16, 90, 90, 90), 2);
  EXPECT_EQ(m.height(), 8);
  for (double v : m.values()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Gray, CheckerboardIsPlusMinusHalf) {
  Patch p = solid_patch(8, 0, 0, 0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (((x / 2) + (y / 2)) % 2 == 0) p.pixels.set(x, y, 255, 255, 255);
    }
  }
  const SpatialMap m = extract_gray(p, 2);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(m.at(0, r, c), (r + c) % 2 == 0 ? 0.5 : -0.5, 1e-12);
  }
}

TEST(Gray, CellOneIsLuminanceMinusMean) {
  Patch p = solid_patch(8, 0, 0, 0);
  p.pixels.set(3, 3, 255, 255, 255);
  const SpatialMap m = extract_gray(p, 1);
  EXPECT_NEAR(m.at(0, 3, 3), 1.0 - 1.0 / 64, 1e-12);
  EXPECT_NEAR(m.at(0, 0, 0), -1.0 / 64, 1e-12);
}

TEST(Hog, UniformHasNoGradientEnergy) {
  const SpatialMap h = extract_hog(solid_patch(32, 120, 50, 200), 4);
  EXPECT_EQ(h.channels(), 31);
  EXPECT_EQ(h.height(), 8);
  for (int c = 0; c < 27; ++c) {
    for (double v : h.channel(c)) EXPECT_LE(std::abs(v), 1e-6);
  }
}

TEST(Hog, VerticalEdgeAndRotation) {
  Patch p = solid_patch(32, 0, 0, 0);
  for (int y = 0; y < 32; ++y) {
    for (int x = 16; x < 32; ++x) p.pixels.set(x, y, 255, 255, 255);
  }
  const SpatialMap h = extract_hog(p, 4);
  // Horizontal gradient: orientation 0 (mod 180).
  EXPECT_EQ(argmax_orientation(h), 0);
  Patch rotated;
  rotated.pixels = rotate90(p.pixels);
  const SpatialMap hr = extract_hog(rotated, 4);
  // 90 degrees is 4.5 bins of 20 degrees; the winner lands on one of the two bins around it.
  const int bin = argmax_orientation(hr);
  EXPECT_TRUE(bin == 4 || bin == 5) << bin;
  for (double v : h.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(ColorNames, RowsSumToOne) {
  const ColorNamesTable t = ColorNamesTable::prototype();
  for (int bin : {0, 1234, 32767, 20000}) {
    double s = 0.0;
    for (float v : t.row(bin)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(ColorNames, BlackPatchReplicatesRow) {
  const ColorNamesTable t = ColorNamesTable::prototype();
  const SpatialMap m = extract_colornames(solid_patch(8, 0, 0, 0), 4, t);
  EXPECT_EQ(m.channels(), 10);
  for (int c = 0; c < 10; ++c) {
    for (double v : m.channel(c)) EXPECT_NEAR(v, t.row(0)[c], 1e-7);
  }
}

TEST(ColorNames, HalfRedHalfBlueAverages) {
  const ColorNamesTable t = ColorNamesTable::prototype();
  Patch p = solid_patch(8, 255, 0, 0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 4; x < 8; ++x) p.pixels.set(x, y, 0, 0, 255);
  }
  const SpatialMap m = extract_colornames(p, 8, t);
  const int red = ColorNamesTable::bin_of(255, 0, 0);
  const int blue = ColorNamesTable::bin_of(0, 0, 255);
  for (int c = 0; c < 10; ++c) EXPECT_NEAR(m.at(c, 0, 0), 0.5 * (t.row(red)[c] + t.row(blue)[c]), 1e-7);
}

TEST(ColorNames, TableFileRoundTripAndErrors) {
  const ColorNamesTable t = ColorNamesTable::prototype();
  const fs::path path = temp_path("cn.bin");
  t.save(path);
  EXPECT_EQ(fs::file_size(path), 32768u * 10u * 4u);
  const ColorNamesTable back = ColorNamesTable::load(path);
  for (int bin : {0, 777, 32767}) {
    for (int c = 0; c < 10; ++c) EXPECT_EQ(back.row(bin)[c], t.row(bin)[c]);
  }
  fs::resize_file(path, 1000);
  EXPECT_THROW(ColorNamesTable::load(path), FormatError);
  EXPECT_THROW(ColorNamesTable::load(temp_path("missing.bin")), FormatError);
}

TEST(External, HandBuiltFile) {
  const fs::path path = temp_path("hand.csot");
  {
    std::ofstream out(path, std::ios::binary);
    out.write("CSOT", 4);
    const unsigned char header[] = {1, 0, 4, 0, 0, 0, 4, 0, 0, 0, 2, 0, 0, 0};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    for (int i = 0; i < 32; ++i) {
      const float f = static_cast<float>(i) * 0.5f;
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  const SpatialMap m = load_external(path);
  ASSERT_EQ(m.height(), 4);
  ASSERT_EQ(m.width(), 4);
  ASSERT_EQ(m.channels(), 2);
  EXPECT_EQ(m.at(1, 0, 0), 8.0);
  EXPECT_EQ(m.at(1, 3, 3), 15.5);
}

TEST(External, RoundTripIsBitExact) {
  std::mt19937_64 rng(2);
  SpatialMap m = csot::test::random_map(rng, 5, 7, 3);
  for (double& v : m.values()) v = static_cast<float>(v);
  const fs::path path = temp_path("round.csot");
  store_external(m, path);
  const SpatialMap back = load_external(path);
  EXPECT_EQ(back.grid(), m.grid());
  for (std::size_t i = 0; i < m.values().size(); ++i) EXPECT_EQ(back.values()[i], m.values()[i]);
}

TEST(External, ErrorKinds) {
  std::mt19937_64 rng(3);
  const fs::path path = temp_path("err.csot");
  store_external(csot::test::random_map(rng, 4, 4, 2), path);
  auto kind_of = [&](const fs::path& p) {
    try {
      load_external(p);
    } catch (const FormatError& e) {
      return e.kind();
    }
    return FormatError::Kind::Io;
  };
  fs::resize_file(path, fs::file_size(path) - 3);
  EXPECT_EQ(kind_of(path), FormatError::Kind::Truncated);

  const fs::path bad = temp_path("bad.csot");
  std::ofstream(bad, std::ios::binary) << "NOPE0000000000000000";
  EXPECT_EQ(kind_of(bad), FormatError::Kind::BadMagic);

  const fs::path huge = temp_path("huge.csot");
  {
    std::ofstream out(huge, std::ios::binary);
    out.write("CSOT", 4);
    const unsigned char header[] = {1, 0, 0xff, 0xff, 0xff, 0x7f, 0xff, 0xff, 0xff, 0x7f, 0xff, 0xff, 0, 0};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
  }
  EXPECT_EQ(kind_of(huge), FormatError::Kind::DimensionOverflow);
}

TEST(External, PathTemplate) {
  EXPECT_EQ(expand_external_path("f/{role}_{frame:4}_s{scale}.csot", {12, 3, "search"}), "f/search_0012_s3.csot");
  EXPECT_EQ(expand_external_path("{frame}", {7, 0, "train"}), "7");
  EXPECT_THROW(expand_external_path("{bogus}", {}), DomainError);
}

TEST(Stack, ResolutionsAndOrder) {
  const Patch p = solid_patch(8, 10, 20, 30);
  const std::vector<FeatureLayerSpec> specs{gray_layer(1), gray_layer(2)};
  const FeatureStack s = extract_stack(p, specs, {});
  ASSERT_EQ(s.layers.size(), 2u);
  EXPECT_EQ(s.layers[0].height(), 8);
  EXPECT_EQ(s.layers[1].height(), 4);
  EXPECT_THROW(extract_stack(p, std::vector<FeatureLayerSpec>{gray_layer(1)}, {}), DomainError);
}

TEST(Stack, ChannelNormalization) {
  Patch p;
  p.pixels = Image(64, 64);
  std::mt19937_64 rng(4);
  for (auto& v : p.pixels.rgb) v = static_cast<std::uint8_t>(rng() % 256);
  ExtractionContext ctx;
  ctx.colornames = std::make_shared<const ColorNamesTable>(ColorNamesTable::prototype());
  const std::vector<FeatureLayerSpec> specs{gray_layer(2), hog_layer(4), colornames_layer(4)};
  const FeatureStack s = extract_stack(p, specs, ctx);
  for (const SpatialMap& layer : s.layers) {
    for (int c = 0; c < layer.channels(); ++c) {
      double ms = 0.0;
      for (double v : layer.channel(c)) ms += v * v;
      ms /= layer.channel(c).size();
      if (ms > 0.0) EXPECT_NEAR(ms, 1.0, 1e-6);
    }
  }
}

TEST(Stack, ExternalLayerPassesThrough) {
  std::mt19937_64 rng(5);
  SpatialMap m = csot::test::random_map(rng, 4, 4, 3);
  for (double& v : m.values()) v = static_cast<float>(v);
  store_external(m, temp_path("layer_0001.csot"));
  const Patch p = solid_patch(16, 1, 2, 3);
  const std::vector<FeatureLayerSpec> specs{gray_layer(2), external_layer(temp_path("layer_{frame:4}.csot").string(), 4)};
  ExtractionContext ctx;
  ctx.normalization = Normalization::None;
  const FeatureStack s = extract_stack(p, specs, ctx);
  EXPECT_EQ(csot::test::max_abs_diff(s.layers[1], m), 0.0);

  const std::vector<FeatureLayerSpec> wrong{gray_layer(2), external_layer(temp_path("layer_{frame:4}.csot").string(), 2)};
  EXPECT_THROW(extract_stack(p, wrong, ctx), ShapeError);
}

TEST(HannWindow, TapersEdges) {
  SpatialMap m(10, 10, 1);
  for (double& v : m.values()) v = 1.0;
  apply_hann_window(m);
  EXPECT_LT(m.at(0, 0, 0), 0.01);
  EXPECT_GT(m.at(0, 5, 5), 0.9);
}
