#include "csot/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "csot/bench.hpp"
#include "csot/config.hpp"
#include "csot/error.hpp"
#include "csot/tracker.hpp"
#include "selftest.hpp"

namespace csot::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void unwritable(const fs::path& path, const std::string& what) {
  throw fs::filesystem_error(what, path, std::make_error_code(std::errc::io_error));
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw fs::filesystem_error("cannot create output directory", dir, ec ? ec : std::make_error_code(std::errc::not_a_directory));
  }
}

RunConfig read_config(const std::string& path, const std::string& preset) {
  if (path.empty()) return make_run_config({}, preset);
  return load_run_config(path, preset);
}

std::optional<fs::path> find_ground_truth(const TrackOptions& opt) {
  if (!opt.gt.empty()) return opt.gt;
  for (const char* name : {"groundtruth.txt", "groundtruth_rect.txt"}) {
    if (fs::is_regular_file(opt.seq / name)) return opt.seq / name;
  }
  return std::nullopt;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) unwritable(tmp, "cannot open for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      unwritable(tmp, "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw fs::filesystem_error("cannot rename into place", tmp, path, ec);
  }
}

int run_track(const TrackOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::vector<fs::path> frames;
  Box init_box;
  std::optional<Trajectory> truth;
  try {
    cfg = read_config(opt.config, opt.preset);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.seq.empty()) throw ConfigError("seq", "--seq is required");
    frames = list_frames(opt.seq);
    if (frames.empty()) throw ConfigError("seq", "no image files in " + opt.seq.string());
    const auto gt_path = find_ground_truth(opt);
    if (gt_path) truth = read_boxes(*gt_path);
    if (cfg.init_bbox) {
      init_box = *cfg.init_bbox;
    } else if (truth && !truth->empty()) {
      init_box = truth->front();
    } else {
      throw ConfigError("track.init_bbox", "no initial box: set track.init_bbox or pass --gt");
    }
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    ensure_directory(opt.out);
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  }

  TrackResult result;
  try {
    const FrameSource source = [&](int i) { return load_image(frames[static_cast<std::size_t>(i)]); };
    result = track_sequence(static_cast<int>(frames.size()), source, init_box, cfg.tracker);
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kConfigError;
  } catch (const TrackingError& e) {
    err << "tracking failed at " << e.what() << '\n';
    return kTrackingError;
  } catch (const Error& e) {
    err << "tracking failed: " << e.what() << '\n';
    return kTrackingError;
  }

  const double total = std::accumulate(result.frame_seconds.begin(), result.frame_seconds.end(), 0.0);
  const double fps = total > 0.0 ? result.boxes.size() / total : 0.0;
  try {
    write_file_atomic(opt.out / "trajectory.txt", format_boxes(result.boxes));
    write_file_atomic(opt.out / "timing.txt", "frames=" + std::to_string(result.boxes.size()) + "\n" +
                                                  "total_seconds=" + fixed(total) + "\n" + "mean_fps=" + fixed(fps) +
                                                  "\n");
    out << "tracked " << result.boxes.size() << " frames in " << fixed(total, 2) << " s (" << fixed(fps, 2)
        << " fps)\n";
    if (truth) {
      if (truth->size() == result.boxes.size()) {
        const MetricsReport report = evaluate(result.boxes, *truth, fps);
        write_report(report, opt.out);
        out << "dp20=" << fixed(report.dp20, 4) << " op50=" << fixed(report.op50, 4)
            << " auc=" << fixed(report.auc, 4) << '\n';
      } else {
        err << "ground truth has " << truth->size() << " boxes for " << result.boxes.size()
            << " frames; skipping evaluation\n";
      }
    }
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  } catch (const FormatError& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  }
  return kOk;
}

int run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  Trajectory traj, gt;
  try {
    traj = read_boxes(opt.trajectory);
    gt = read_boxes(opt.gt);
  } catch (const Error& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  }
  if (traj.size() != gt.size()) {
    err << "length mismatch: " << traj.size() << " boxes in " << opt.trajectory.string() << ", " << gt.size()
        << " in " << opt.gt.string() << '\n';
    return kLengthMismatch;
  }
  const MetricsReport report = evaluate(traj, gt);
  try {
    ensure_directory(opt.out);
    write_report(report, opt.out);
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  } catch (const FormatError& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  }
  out << "frames=" << traj.size() << " dp20=" << fixed(report.dp20, 4) << " op50=" << fixed(report.op50, 4)
      << " auc=" << fixed(report.auc, 4) << " mean_center_error=" << fixed(report.mean_center_error, 3) << '\n';
  return kOk;
}

int run_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = read_config(opt.config, "");
    if (opt.seed) cfg.seed = *opt.seed;
    if (cfg.synth.frames < 1) throw ConfigError("synth.frames", "synth.frames must be >= 1");
    if (opt.out.empty()) throw ConfigError("out", "--out is required");
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kConfigError;
  }
  SynthSequence seq;
  try {
    seq = synth_sequence(cfg.synth, cfg.seed);
  } catch (const Error& e) {
    err << "config error [synth]: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    ensure_directory(opt.out);
    const int digits = std::max(4, static_cast<int>(std::to_string(seq.frames.size()).size()));
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      std::ostringstream name;
      name << std::setw(digits) << std::setfill('0') << i + 1 << ".png";
      save_image(seq.frames[i], opt.out / name.str());
    }
    write_file_atomic(opt.out / "groundtruth.txt", format_boxes(seq.truth));
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  } catch (const FormatError& e) {
    err << "output error: " << e.what() << '\n';
    return kUnwritable;
  }
  out << "wrote " << seq.frames.size() << " frames to " << opt.out.string() << '\n';
  return kOk;
}

int run_selftest(std::ostream& out, std::ostream& err) {
  selftest::Options opt;
  if (const char* env = std::getenv("CSOT_SELFTEST_PERTURB"); env && *env) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    opt.perturb = (end != env && *end == '\0' && v != 0.0) ? v : 1e-3;
    err << "perturbation " << opt.perturb << " active\n";
  }
  bool all = true;
  for (const selftest::SuiteResult& r : selftest::run_all(opt)) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(24) << r.name << " error=" << r.error
        << " tol=" << r.tolerance << " (" << fixed(r.seconds, 2) << " s)";
    if (!r.detail.empty()) out << "  " << r.detail;
    out << '\n';
  }
  return all ? kOk : kFailure;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Correlation-filter tracker with structural output training"};
  app.require_subcommand(1);

  TrackOptions track;
  std::uint64_t track_seed = 0;
  auto* track_cmd = app.add_subcommand("track", "Track a target through a directory of frames");
  track_cmd->add_option("--config", track.config, "key=value configuration file");
  track_cmd->add_option("--preset", track.preset, "hc, khc or external");
  track_cmd->add_option("--seq", track.seq, "directory of numbered frames")->required();
  track_cmd->add_option("--gt", track.gt, "ground-truth boxes (x,y,w,h per line, 1-based)");
  track_cmd->add_option("--out", track.out, "output directory")->capture_default_str();
  auto* track_seed_opt = track_cmd->add_option("--seed", track_seed, "run seed");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a trajectory against ground truth");
  eval_cmd->add_option("--traj", eval.trajectory, "trajectory file")->required();
  eval_cmd->add_option("--gt", eval.gt, "ground-truth file")->required();
  eval_cmd->add_option("--out", eval.out, "report directory")->capture_default_str();

  SynthOptions synth;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Render a seeded synthetic sequence");
  synth_cmd->add_option("--config", synth.config, "key=value file with synth.* keys");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed, "texture and noise seed");

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the numerical oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*track_cmd) {
      if (*track_seed_opt) track.seed = track_seed;
      return run_track(track, std::cout, std::cerr);
    }
    if (*eval_cmd) return run_eval(eval, std::cout, std::cerr);
    if (*synth_cmd) {
      if (*synth_seed_opt) synth.seed = synth_seed;
      return run_synth(synth, std::cout, std::cerr);
    }
    if (*selftest_cmd) return run_selftest(std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace csot::cli
