#include "csot/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "csot/error.hpp"

namespace csot {

namespace {

void require_lengths(const Trajectory& traj, const Trajectory& gt) {
  if (traj.size() != gt.size()) {
    throw ShapeError("trajectory has " + std::to_string(traj.size()) + " boxes, ground truth " +
                     std::to_string(gt.size()));
  }
  if (traj.empty()) throw ShapeError("empty trajectory");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (const CurvePoint& p : curve) out << p.threshold << ',' << p.value << '\n';
  return out.str();
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double center_error(const Box& a, const Box& b) {
  const Point2 ca = a.center();
  const Point2 cb = b.center();
  return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

double distance_precision(const Trajectory& traj, const Trajectory& gt, double threshold) {
  require_lengths(traj, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) hits += center_error(traj[i], gt[i]) < threshold;
  return static_cast<double>(hits) / traj.size();
}

double overlap_precision(const Trajectory& traj, const Trajectory& gt, double threshold) {
  require_lengths(traj, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) hits += iou(traj[i], gt[i]) > threshold;
  return static_cast<double>(hits) / traj.size();
}

SuccessCurve success_auc(const Trajectory& traj, const Trajectory& gt) {
  require_lengths(traj, gt);
  std::vector<double> overlaps;
  for (std::size_t i = 0; i < traj.size(); ++i) overlaps.push_back(iou(traj[i], gt[i]));
  SuccessCurve out;
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    const auto hits = std::count_if(overlaps.begin(), overlaps.end(), [t](double o) { return o > t; });
    out.curve.push_back({t, static_cast<double>(hits) / overlaps.size()});
    out.auc += out.curve.back().value;
  }
  out.auc /= out.curve.size();
  return out;
}

std::vector<CurvePoint> precision_curve(const Trajectory& traj, const Trajectory& gt, int max_threshold) {
  require_lengths(traj, gt);
  std::vector<CurvePoint> curve;
  for (int t = 0; t <= max_threshold; ++t) curve.push_back({static_cast<double>(t), distance_precision(traj, gt, t)});
  return curve;
}

MetricsReport evaluate(const Trajectory& traj, const Trajectory& gt, double mean_fps) {
  require_lengths(traj, gt);
  MetricsReport r;
  r.dp20 = distance_precision(traj, gt, 20.0);
  r.op50 = overlap_precision(traj, gt, 0.5);
  const SuccessCurve sc = success_auc(traj, gt);
  r.auc = sc.auc;
  r.success = sc.curve;
  r.precision = precision_curve(traj, gt);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    r.mean_center_error += center_error(traj[i], gt[i]);
    r.mean_iou += iou(traj[i], gt[i]);
  }
  r.mean_center_error /= traj.size();
  r.mean_iou /= traj.size();
  r.mean_fps = mean_fps;
  return r;
}

void write_report(const MetricsReport& report, const std::filesystem::path& dir) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "dp20=" << report.dp20 << '\n'
      << "op50=" << report.op50 << '\n'
      << "auc=" << report.auc << '\n'
      << "mean_center_error=" << report.mean_center_error << '\n'
      << "mean_iou=" << report.mean_iou << '\n'
      << "mean_fps=" << report.mean_fps << '\n';
  write_text(dir / "report.txt", out.str());
  write_text(dir / "success.csv", curve_csv(report.success));
  write_text(dir / "precision.csv", curve_csv(report.precision));
}

Trajectory parse_boxes(const std::string& text) {
  Trajectory boxes;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == '\t' || c == '\r'; }, ' ');
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream fields(line);
    double v[4];
    for (double& x : v) {
      if (!(fields >> x) || !std::isfinite(x)) {
        throw FormatError(FormatError::Kind::Parse, "line " + std::to_string(number) + ": expected x,y,w,h");
      }
    }
    std::string extra;
    if (fields >> extra) throw FormatError(FormatError::Kind::Parse, "line " + std::to_string(number) + ": trailing data");
    if (v[2] < 0.0 || v[3] < 0.0) throw FormatError(FormatError::Kind::Parse, "line " + std::to_string(number) + ": negative size");
    boxes.push_back({v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
  }
  return boxes;
}

Trajectory read_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_boxes(text.str());
}

std::string format_boxes(const Trajectory& traj) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  for (const Box& b : traj) out << b.x + 1.0 << ',' << b.y + 1.0 << ',' << b.w << ',' << b.h << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Synthetic sequences

SynthSpec static_synth_spec() {
  SynthSpec spec;
  spec.velocity = {0.0, 0.0};
  spec.amplitude = {0.0, 0.0};
  spec.scale_rate = 1.0;
  return spec;
}

namespace {

// Bilinear lookup in a periodic-free lattice of RGB values, u, v in [0, 1].
struct Lattice {
  int n = 0;
  std::vector<double> rgb;

  std::array<double, 3> sample(double u, double v) const {
    const double fx = std::clamp(u, 0.0, 1.0) * (n - 1);
    const double fy = std::clamp(v, 0.0, 1.0) * (n - 1);
    const int x0 = std::min(static_cast<int>(fx), n - 2);
    const int y0 = std::min(static_cast<int>(fy), n - 2);
    const double ax = fx - x0;
    const double ay = fy - y0;
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
      auto at = [&](int x, int y) { return rgb[(static_cast<std::size_t>(y) * n + x) * 3 + c]; };
      out[c] = (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) + ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
    }
    return out;
  }
};

Lattice random_lattice(int n, std::mt19937_64& rng, double low, double high) {
  std::uniform_real_distribution<double> dist(low, high);
  Lattice l{n, std::vector<double>(static_cast<std::size_t>(n) * n * 3)};
  for (double& v : l.rgb) v = dist(rng);
  return l;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

SynthSequence synth_sequence(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.frames < 1) throw DomainError("synth: frame count must be positive");
  if (spec.width < 16 || spec.height < 16) throw DomainError("synth: frame too small");
  if (!(spec.initial.w > 0.0) || !(spec.initial.h > 0.0)) throw DomainError("synth: degenerate initial box");
  if (!(spec.scale_rate > 0.0)) throw DomainError("synth: scale rate must be positive");
  std::mt19937_64 rng(seed);
  const Lattice texture = random_lattice(std::max(spec.texture_cells, 2), rng, 90.0, 255.0);
  const Lattice background = random_lattice(24, rng, 10.0, 80.0);

  SynthSequence seq;
  const Point2 c0 = spec.initial.center();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int t = 0; t < spec.frames; ++t) {
    const double s = std::pow(spec.scale_rate, t);
    Point2 c{c0.x + spec.velocity.x * t, c0.y + spec.velocity.y * t};
    if (spec.period.x > 0.0) c.x += spec.amplitude.x * std::sin(kTwoPi * t / spec.period.x);
    if (spec.period.y > 0.0) c.y += spec.amplitude.y * std::sin(kTwoPi * t / spec.period.y);
    const Box box = Box::around(c, {spec.initial.w * s, spec.initial.h * s});
    seq.truth.push_back(box);

    Image frame(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double px = x + 0.5;
        const double py = y + 0.5;
        std::array<double, 3> rgb;
        if (px >= box.x && px < box.x + box.w && py >= box.y && py < box.y + box.h) {
          rgb = texture.sample((px - box.x) / box.w, (py - box.y) / box.h);
        } else {
          rgb = background.sample(px / spec.width, py / spec.height);
        }
        frame.set(x, y, to_byte(rgb[0]), to_byte(rgb[1]), to_byte(rgb[2]));
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace csot
