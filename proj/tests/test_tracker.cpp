#include <gtest/gtest.h>

#include <cmath>

#include "csot/bench.hpp"
#include "csot/error.hpp"
#include "csot/tracker.hpp"

using namespace csot;

namespace {

// Small grid and few scales keep each frame well under a second.
TrackerConfig fast_config() {
  TrackerConfig cfg;
  cfg.layers = {gray_layer(4), hog_layer(4)};
  cfg.sample.min_side = 100;
  cfg.sample.max_side = 120;
  cfg.scale_layers = 5;
  cfg.solver.init_outer_iterations = 10;
  return cfg;
}

SynthSequence two_frames(Point2 velocity, double scale_rate = 1.0) {
  SynthSpec spec = static_synth_spec();
  spec.frames = 2;
  spec.width = 240;
  spec.height = 200;
  spec.initial = {100.0, 80.0, 32.0, 32.0};
  spec.velocity = velocity;
  spec.scale_rate = scale_rate;
  return synth_sequence(spec, 5);
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST(Scales, FactorSets) {
  const auto one = scale_factors(1, 1.03);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0], 1.0);
  const auto ten = scale_factors(10, 1.03);
  ASSERT_EQ(ten.size(), 10u);
  EXPECT_NEAR(ten.front(), std::pow(1.03, -5), 1e-15);
  EXPECT_NEAR(ten.back(), std::pow(1.03, 4), 1e-15);
  for (std::size_t i = 1; i < ten.size(); ++i) EXPECT_GT(ten[i], ten[i - 1]);
  const auto sym = scale_factors(4, 1.1, true);
  ASSERT_EQ(sym.size(), 5u);
  EXPECT_NEAR(sym.front() * sym.back(), 1.0, 1e-15);
  EXPECT_THROW(scale_factors(0, 1.03), DomainError);
  EXPECT_THROW(scale_factors(3, 1.0), DomainError);
}

TEST(Tracker, StaticTargetStaysPut) {
  const SynthSequence seq = two_frames({0.0, 0.0});
  const TrackerState state = init(seq.frames[0], seq.truth[0], fast_config());
  const Detection d = detect(state, seq.frames[1]);
  EXPECT_LE(distance(d.position, seq.truth[1].center()), 1.0);
  EXPECT_EQ(d.scale_index, state.setup->unit_scale_index);
  EXPECT_DOUBLE_EQ(d.scale_factor, 1.0);
  EXPECT_EQ(d.scale_peaks.size(), 5u);
}

TEST(Tracker, FollowsTranslation) {
  const SynthSequence seq = two_frames({3.0, -2.0});
  // Default grid: the reduced one has cells wider than the 1 px tolerance.
  const TrackerState state = init(seq.frames[0], seq.truth[0], TrackerConfig{});
  const Detection d = detect(state, seq.frames[1]);
  EXPECT_LE(distance(d.position, seq.truth[1].center()), 1.0)
      << "detected " << d.position.x << "," << d.position.y;
}

TEST(Tracker, FollowsScaleChange) {
  TrackerConfig cfg = fast_config();
  cfg.scale_step = 1.05;
  const SynthSequence seq = two_frames({0.0, 0.0}, 1.05 * 1.05);
  const TrackerState state = init(seq.frames[0], seq.truth[0], cfg);
  const Detection d = detect(state, seq.frames[1]);
  const int expected = state.setup->unit_scale_index + 2;
  EXPECT_LE(std::abs(d.scale_index - expected), 1) << "scale index " << d.scale_index;
}

TEST(Tracker, UpdateKeepsPreviousState) {
  const SynthSequence seq = two_frames({3.0, -2.0});
  const TrackerState state = init(seq.frames[0], seq.truth[0], fast_config());
  const SpectralMap before = state.filters.layers[0];
  const Detection d = detect(state, seq.frames[1]);
  const TrackerState next = update(state, seq.frames[1], d.position, state.setup->unit_scale_index);
  EXPECT_DOUBLE_EQ(next.size.width, state.size.width);
  EXPECT_DOUBLE_EQ(next.size.height, state.size.height);
  EXPECT_EQ(next.frame_index, state.frame_index + 1);
  const auto a = before.values();
  const auto b = state.filters.layers[0].values();
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
  EXPECT_THROW(update(state, seq.frames[1], d.position, 99), DomainError);
}

TEST(Tracker, InitIsDeterministic) {
  const SynthSequence seq = two_frames({0.0, 0.0});
  const TrackerState a = init(seq.frames[0], seq.truth[0], fast_config());
  const TrackerState b = init(seq.frames[0], seq.truth[0], fast_config());
  ASSERT_EQ(a.filters.layers.size(), b.filters.layers.size());
  for (std::size_t l = 0; l < a.filters.layers.size(); ++l) {
    const auto x = a.filters.layers[l].values();
    const auto y = b.filters.layers[l].values();
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(x[i], y[i]);
  }
  const Detection self = detect(a, seq.frames[0]);
  EXPECT_LE(distance(self.position, seq.truth[0].center()), 1.0);
}

TEST(Tracker, SingleFrameSequence) {
  const SynthSequence seq = two_frames({0.0, 0.0});
  const TrackResult r = track_sequence({seq.frames[0]}, seq.truth[0], fast_config());
  ASSERT_EQ(r.boxes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.boxes[0].x, seq.truth[0].x);
  EXPECT_EQ(r.frame_seconds.size(), 1u);
}

TEST(Tracker, TargetAtFrameEdge) {
  SynthSpec spec = static_synth_spec();
  spec.frames = 2;
  spec.width = 200;
  spec.height = 160;
  spec.initial = {0.0, 0.0, 30.0, 30.0};
  const SynthSequence seq = synth_sequence(spec, 2);
  const TrackResult r = track_sequence(seq.frames, seq.truth[0], fast_config());
  ASSERT_EQ(r.boxes.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.boxes[1].x));
  EXPECT_GT(iou(r.boxes[1], seq.truth[1]), 0.5);
}

TEST(Tracker, RejectsBadInput) {
  const SynthSequence seq = two_frames({0.0, 0.0});
  EXPECT_THROW(init(seq.frames[0], {10, 10, 0, 5}, fast_config()), DomainError);
  EXPECT_THROW(init(seq.frames[0], {1000, 10, 5, 5}, fast_config()), DomainError);
  TrackerConfig one = fast_config();
  one.layers.resize(1);
  EXPECT_THROW(init(seq.frames[0], seq.truth[0], one), ConfigError);
}

TEST(Tracker, FrameErrorsCarryTheIndex) {
  const SynthSequence seq = two_frames({0.0, 0.0});
  const FrameSource source = [&](int i) {
    if (i == 1) throw FormatError(FormatError::Kind::Io, "unreadable");
    return seq.frames[static_cast<std::size_t>(i)];
  };
  try {
    track_sequence(2, source, seq.truth[0], fast_config());
    FAIL();
  } catch (const TrackingError& e) {
    // Frame numbers are 1-based.
    EXPECT_EQ(e.frame(), 2);
  }
}

TEST(Presets, Known) {
  EXPECT_EQ(preset_config("hc").layers.size(), 3u);
  EXPECT_TRUE(preset_config("khc").kernel.has_value());
  EXPECT_THROW(preset_config("nope"), ConfigError);
}
