#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "csot/bench.hpp"
#include "csot/error.hpp"

using namespace csot;

TEST(Iou, HandCases) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {20, 20, 10, 10}), 0.0);
  // Touching edges share no area.
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
  // Half-shifted: 50 / 150.
  EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(iou({0, 0, 10, 10}, {2, 2, 5, 5}), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(iou({0, 0, 0, 0}, {0, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(iou({1, 2, 3, 4}, {5, 1, 2, 8}), iou({5, 1, 2, 8}, {1, 2, 3, 4}));
}

TEST(Metrics, DistancePrecisionIsStrict) {
  const Trajectory gt(3, Box{0, 0, 10, 10});
  const Trajectory traj{{5, 0, 10, 10}, {25, 0, 10, 10}, {10, 0, 10, 10}};
  EXPECT_NEAR(distance_precision(traj, gt), 2.0 / 3.0, 1e-15);
  const Trajectory at_twenty{{20, 0, 10, 10}, {0, 0, 10, 10}, {0, 0, 10, 10}};
  EXPECT_NEAR(distance_precision(at_twenty, gt), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(distance_precision(traj, Trajectory(2)), ShapeError);
  EXPECT_THROW(distance_precision({}, {}), ShapeError);
}

TEST(Metrics, OverlapPrecisionIsStrict) {
  // Overlaps 0.6, 0.4, 0.5 by choosing the horizontal shift s: iou = (10 - s) / (10 + s).
  auto shifted = [](double o) { return Box{10.0 * (1.0 - o) / (1.0 + o), 0, 10, 10}; };
  const Trajectory gt(3, Box{0, 0, 10, 10});
  const Trajectory traj{shifted(0.6), shifted(0.4), shifted(0.5)};
  EXPECT_NEAR(iou(traj[2], gt[2]), 0.5, 1e-12);
  EXPECT_NEAR(overlap_precision(traj, gt), 1.0 / 3.0, 1e-15);
}

TEST(Metrics, AucCases) {
  const Trajectory gt(4, Box{0, 0, 10, 10});
  EXPECT_NEAR(success_auc(gt, gt).auc, 100.0 / 101.0, 1e-15);
  const Trajectory far(4, Box{100, 100, 10, 10});
  EXPECT_DOUBLE_EQ(success_auc(far, gt).auc, 0.0);
  const SuccessCurve sc = success_auc(gt, gt);
  ASSERT_EQ(sc.curve.size(), 101u);
  EXPECT_DOUBLE_EQ(sc.curve.front().value, 1.0);
  EXPECT_DOUBLE_EQ(sc.curve.back().value, 0.0);
  for (std::size_t i = 1; i < sc.curve.size(); ++i) EXPECT_LE(sc.curve[i].value, sc.curve[i - 1].value);
}

TEST(Metrics, AucTracksMeanOverlap) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  Trajectory gt, traj;
  for (int i = 0; i < 200; ++i) {
    gt.push_back({50, 50, 30, 20});
    traj.push_back({50 + u(rng), 50 + u(rng), 30 + u(rng), 20 + u(rng) / 2});
  }
  const MetricsReport r = evaluate(traj, gt, 12.5);
  EXPECT_NEAR(r.auc, r.mean_iou, 0.01);
  EXPECT_DOUBLE_EQ(r.mean_fps, 12.5);
  EXPECT_EQ(r.precision.size(), 51u);
  EXPECT_DOUBLE_EQ(r.dp20, r.precision[20].value);
}

TEST(Boxes, ParseFormatsAndOrigin) {
  const Trajectory t = parse_boxes("1,1,10,20\n\n5.5\t6 7 8\r\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t[0].x, 0.0);
  EXPECT_DOUBLE_EQ(t[0].h, 20.0);
  EXPECT_DOUBLE_EQ(t[1].x, 4.5);
  EXPECT_DOUBLE_EQ(t[1].w, 7.0);
  const Trajectory back = parse_boxes(format_boxes(t));
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(back[i].x, t[i].x, 5e-4);
    EXPECT_NEAR(back[i].y, t[i].y, 5e-4);
    EXPECT_NEAR(back[i].w, t[i].w, 5e-4);
    EXPECT_NEAR(back[i].h, t[i].h, 5e-4);
  }
}

TEST(Boxes, ParseErrors) {
  EXPECT_THROW(parse_boxes("1,2,3\n"), FormatError);
  EXPECT_THROW(parse_boxes("1,2,3,4,5\n"), FormatError);
  EXPECT_THROW(parse_boxes("1,2,-3,4\n"), FormatError);
  EXPECT_THROW(parse_boxes("1,2,nan,4\n"), FormatError);
  try {
    parse_boxes("1,2,3,4\nx,1,1,1\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(read_boxes("/nonexistent/boxes.txt"), FormatError);
}

TEST(Report, WritesThreeFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "csot_test_report";
  std::filesystem::create_directories(dir);
  const Trajectory gt(5, Box{0, 0, 10, 10});
  write_report(evaluate(gt, gt), dir);
  std::ifstream report(dir / "report.txt");
  std::string first;
  std::getline(report, first);
  EXPECT_EQ(first, "dp20=1");
  EXPECT_TRUE(std::filesystem::exists(dir / "success.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "precision.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Synth, DeterministicPerSeed) {
  SynthSpec spec;
  spec.frames = 3;
  const SynthSequence a = synth_sequence(spec, 9);
  const SynthSequence b = synth_sequence(spec, 9);
  const SynthSequence c = synth_sequence(spec, 10);
  ASSERT_EQ(a.frames.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(a.frames[i] == b.frames[i]);
  EXPECT_FALSE(a.frames[0] == c.frames[0]);
  // The trajectory depends on the SynthSpec, not the seed.
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(a.truth[i].x, c.truth[i].x);
}

TEST(Synth, ZeroMotionIsStatic) {
  SynthSpec spec = static_synth_spec();
  spec.frames = 4;
  const SynthSequence s = synth_sequence(spec, 1);
  for (const Box& b : s.truth) {
    EXPECT_DOUBLE_EQ(b.x, spec.initial.x);
    EXPECT_DOUBLE_EQ(b.y, spec.initial.y);
    EXPECT_DOUBLE_EQ(b.w, spec.initial.w);
  }
}

TEST(Synth, LinearMotionIsArithmetic) {
  SynthSpec spec = static_synth_spec();
  spec.frames = 6;
  spec.velocity = {2.0, -1.0};
  const SynthSequence s = synth_sequence(spec, 1);
  for (std::size_t i = 1; i < s.truth.size(); ++i) {
    EXPECT_NEAR(s.truth[i].x - s.truth[i - 1].x, 2.0, 1e-12);
    EXPECT_NEAR(s.truth[i].y - s.truth[i - 1].y, -1.0, 1e-12);
  }
  spec.scale_rate = 1.05;
  const SynthSequence g = synth_sequence(spec, 1);
  EXPECT_NEAR(g.truth[5].w, spec.initial.w * std::pow(1.05, 5), 1e-9);
}

TEST(Synth, RejectsBadSpecs) {
  SynthSpec spec;
  spec.frames = 0;
  EXPECT_THROW(synth_sequence(spec, 1), DomainError);
  spec = SynthSpec{};
  spec.width = 8;
  EXPECT_THROW(synth_sequence(spec, 1), DomainError);
  spec = SynthSpec{};
  spec.initial.w = 0.0;
  EXPECT_THROW(synth_sequence(spec, 1), DomainError);
}
