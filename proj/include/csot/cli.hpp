#pragma once

// Command-line entry points. Each run_* function returns the process exit code
// and reports through the given streams.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace csot::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,        // selftest failure or unexpected error
  kConfigError = 2,    // bad config, flags or input files
  kTrackingError = 3,  // per-frame failure, frame index in the message
  kLengthMismatch = 4,
  kUnwritable = 5,
};

struct TrackOptions {
  std::string config;  // optional key=value file
  std::string preset;  // overrides preset= in the file
  std::filesystem::path seq;
  std::filesystem::path gt;  // optional; first box used when track.init_bbox is absent
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
};

struct EvalOptions {
  std::filesystem::path trajectory;
  std::filesystem::path gt;
  std::filesystem::path out = ".";
};

struct SynthOptions {
  std::string config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

int run_track(const TrackOptions& opt, std::ostream& out, std::ostream& err);
int run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
int run_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err);
/// Runs the oracle suites. CSOT_SELFTEST_PERTURB in the environment perturbs a
/// library-side constant so the suites are expected to fail.
int run_selftest(std::ostream& out, std::ostream& err);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

int run_cli(int argc, char** argv);

}  // namespace csot::cli
