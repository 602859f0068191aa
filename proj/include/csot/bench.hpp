#pragma once

// OTB-style evaluation: overlap and center-distance metrics, ground-truth files,
// report emission, and seeded synthetic sequences.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csot/geometry.hpp"
#include "csot/image.hpp"

namespace csot {

using Trajectory = std::vector<Box>;

double iou(const Box& a, const Box& b);
double center_error(const Box& a, const Box& b);

/// Fraction of frames with center distance < threshold (strict).
double distance_precision(const Trajectory& traj, const Trajectory& gt, double threshold = 20.0);
/// Fraction of frames with IoU > threshold (strict).
double overlap_precision(const Trajectory& traj, const Trajectory& gt, double threshold = 0.5);

struct CurvePoint {
  double threshold;
  double value;
};

/// Success curve at thresholds 0.00, 0.01, ..., 1.00 and its mean (the AUC).
struct SuccessCurve {
  double auc = 0.0;
  std::vector<CurvePoint> curve;
};
SuccessCurve success_auc(const Trajectory& traj, const Trajectory& gt);

/// Distance precision at integer thresholds 0..max_threshold px.
std::vector<CurvePoint> precision_curve(const Trajectory& traj, const Trajectory& gt, int max_threshold = 50);

struct MetricsReport {
  double dp20 = 0.0;
  double op50 = 0.0;
  double auc = 0.0;
  double mean_center_error = 0.0;
  double mean_iou = 0.0;
  double mean_fps = 0.0;  // 0 when unknown
  std::vector<CurvePoint> success;
  std::vector<CurvePoint> precision;
};

MetricsReport evaluate(const Trajectory& traj, const Trajectory& gt, double mean_fps = 0.0);
/// Writes report.txt (key=value), success.csv and precision.csv into `dir`.
void write_report(const MetricsReport& report, const std::filesystem::path& dir);

/// One box per line, "x,y,w,h" (comma, tab or space separated), 1-based origin.
Trajectory parse_boxes(const std::string& text);
Trajectory read_boxes(const std::filesystem::path& path);
std::string format_boxes(const Trajectory& traj);

struct SynthSpec {
  int width = 480;
  int height = 360;
  int frames = 100;
  Box initial{140.0, 140.0, 40.0, 40.0};
  Point2 velocity{1.5, 0.4};    // px per frame
  Point2 amplitude{20.0, 25.0}; // sinusoidal excursion, px
  Point2 period{50.0, 60.0};    // frames
  double scale_rate = 1.01;     // per frame
  int texture_cells = 10;       // lattice resolution of the target texture
};

struct SynthSequence {
  std::vector<Image> frames;
  Trajectory truth;
};

/// Zero-motion spec: no velocity, amplitude or scaling.
SynthSpec static_synth_spec();
SynthSequence synth_sequence(const SynthSpec& spec, std::uint64_t seed);

}  // namespace csot
