#pragma once

// Flat key=value run configuration with section prefixes (solver.C=20000).
// Blank lines and lines starting with '#' are ignored. An empty file yields
// the hc preset with default sequence synthesis parameters.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csot/bench.hpp"
#include "csot/tracker.hpp"

namespace csot {

struct RunConfig {
  std::string preset = "hc";
  TrackerConfig tracker;
  std::optional<Box> init_bbox;  // 0-based; written 1-based in files like ground truth
  SynthSpec synth;
  std::uint64_t seed = 1;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Splits the text into (key, value) pairs in file order. Throws ConfigError on a
/// line without '=' (key "line N") or an empty key.
KeyValues parse_key_values(const std::string& text);

/// Resolves the preset (`preset_override` wins over a `preset=` line), then applies
/// every other key on top. Unknown keys and unparsable values throw ConfigError
/// naming the key.
RunConfig make_run_config(const KeyValues& entries, const std::string& preset_override = "");
RunConfig load_run_config(const std::string& path, const std::string& preset_override = "");

/// "gray:2,hog:4,cn:4" or "external:4:path/{frame:4}.csot,...".
std::vector<FeatureLayerSpec> parse_layers(const std::string& text);

/// Every key make_run_config understands, sorted.
std::vector<std::string> config_keys();

}  // namespace csot
