#include "csot/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "csot/error.hpp"

namespace csot {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key, key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key, key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long n = to_integer(key, v);
  if (n < -1'000'000'000LL || n > 1'000'000'000LL) throw ConfigError(key, key + ": value out of range");
  return static_cast<int>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(key, key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v, std::size_t count) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.size() != count) {
    throw ConfigError(key, key + ": expected " + std::to_string(count) + " comma-separated numbers");
  }
  return out;
}

Box to_box(const std::string& key, const std::string& v) {
  const auto b = to_list(key, v, 4);
  if (!(b[2] > 0.0) || !(b[3] > 0.0)) throw ConfigError(key, key + ": width and height must be positive");
  return {b[0] - 1.0, b[1] - 1.0, b[2], b[3]};
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"solver.C", [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.C = to_double(k, v); }},
      {"solver.outer_iterations",
       [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.outer_iterations = to_int(k, v); }},
      {"solver.init_outer_iterations",
       [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.init_outer_iterations = to_int(k, v); }},
      {"solver.cg_iterations", [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.cg_iterations = to_int(k, v); }},
      {"solver.tolerance", [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.tolerance = to_double(k, v); }},
      {"solver.preconditioner",
       [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.preconditioner = to_bool(k, v); }},
      {"solver.anchored", [](RunConfig& c, auto& k, auto& v) { c.tracker.solver.anchored = to_bool(k, v); }},
      {"label.sigma", [](RunConfig& c, auto& k, auto& v) { c.tracker.label.sigma = to_double(k, v); }},
      {"scale.layers", [](RunConfig& c, auto& k, auto& v) { c.tracker.scale_layers = to_int(k, v); }},
      {"scale.step", [](RunConfig& c, auto& k, auto& v) { c.tracker.scale_step = to_double(k, v); }},
      {"scale.symmetric", [](RunConfig& c, auto& k, auto& v) { c.tracker.symmetric_scales = to_bool(k, v); }},
      {"sample.search_area_factor",
       [](RunConfig& c, auto& k, auto& v) { c.tracker.sample.search_area_factor = to_double(k, v); }},
      {"sample.min_side", [](RunConfig& c, auto& k, auto& v) { c.tracker.sample.min_side = to_int(k, v); }},
      {"sample.max_side", [](RunConfig& c, auto& k, auto& v) { c.tracker.sample.max_side = to_int(k, v); }},
      {"sample.quantum", [](RunConfig& c, auto& k, auto& v) { c.tracker.sample.quantum = to_int(k, v); }},
      {"kernel.type",
       [](RunConfig& c, auto& k, auto& v) {
         const std::string s = lower(v);
         if (s == "none") {
           c.tracker.kernel.reset();
         } else if (s == "linear" || s == "gaussian") {
           KernelSpec spec = c.tracker.kernel.value_or(KernelSpec{});
           spec.kind = s == "linear" ? KernelSpec::Kind::Linear : KernelSpec::Kind::Gaussian;
           c.tracker.kernel = spec;
         } else {
           throw ConfigError(k, k + ": expected none, linear or gaussian");
         }
       }},
      {"kernel.bandwidth",
       [](RunConfig& c, auto& k, auto& v) {
         KernelSpec spec = c.tracker.kernel.value_or(KernelSpec{});
         spec.bandwidth = to_double(k, v);
         if (!(spec.bandwidth > 0.0)) throw ConfigError(k, k + ": bandwidth must be positive");
         if (c.tracker.kernel) c.tracker.kernel = spec;
       }},
      {"regularizer.enabled", [](RunConfig& c, auto& k, auto& v) { c.tracker.regularize = to_bool(k, v); }},
      {"regularizer.min_weight", [](RunConfig& c, auto& k, auto& v) { c.tracker.reg_min_weight = to_double(k, v); }},
      {"regularizer.slope", [](RunConfig& c, auto& k, auto& v) { c.tracker.reg_slope = to_double(k, v); }},
      {"features.layers",
       [](RunConfig& c, auto& k, auto& v) {
         try {
           c.tracker.layers = parse_layers(v);
         } catch (const ConfigError& e) {
           throw ConfigError(k, e.what());
         }
       }},
      {"features.normalization",
       [](RunConfig& c, auto& k, auto& v) {
         const std::string s = lower(v);
         if (s == "channel") c.tracker.normalization = Normalization::Channel;
         else if (s == "layer") c.tracker.normalization = Normalization::Layer;
         else if (s == "none") c.tracker.normalization = Normalization::None;
         else throw ConfigError(k, k + ": expected channel, layer or none");
       }},
      {"features.window", [](RunConfig& c, auto& k, auto& v) { c.tracker.window = to_bool(k, v); }},
      {"fusion.normalization",
       [](RunConfig& c, auto& k, auto& v) {
         const std::string s = lower(v);
         if (s == "minshift") c.tracker.fusion = MapNormalization::MinShift;
         else if (s == "softmax") c.tracker.fusion = MapNormalization::Softmax;
         else throw ConfigError(k, k + ": expected minshift or softmax");
       }},
      {"model.learning_rate", [](RunConfig& c, auto& k, auto& v) { c.tracker.learning_rate = to_double(k, v); }},
      {"colornames.table", [](RunConfig& c, auto&, auto& v) { c.tracker.colornames_table = v; }},
      {"external.root", [](RunConfig& c, auto&, auto& v) { c.tracker.external_root = v; }},
      {"track.init_bbox", [](RunConfig& c, auto& k, auto& v) { c.init_bbox = to_box(k, v); }},
      {"seed",
       [](RunConfig& c, auto& k, auto& v) {
         const long long n = to_integer(k, v);
         if (n < 0) throw ConfigError(k, k + ": seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(n);
       }},
      {"synth.frames", [](RunConfig& c, auto& k, auto& v) { c.synth.frames = to_int(k, v); }},
      {"synth.width", [](RunConfig& c, auto& k, auto& v) { c.synth.width = to_int(k, v); }},
      {"synth.height", [](RunConfig& c, auto& k, auto& v) { c.synth.height = to_int(k, v); }},
      {"synth.init_bbox", [](RunConfig& c, auto& k, auto& v) { c.synth.initial = to_box(k, v); }},
      {"synth.velocity",
       [](RunConfig& c, auto& k, auto& v) {
         const auto p = to_list(k, v, 2);
         c.synth.velocity = {p[0], p[1]};
       }},
      {"synth.amplitude",
       [](RunConfig& c, auto& k, auto& v) {
         const auto p = to_list(k, v, 2);
         c.synth.amplitude = {p[0], p[1]};
       }},
      {"synth.period",
       [](RunConfig& c, auto& k, auto& v) {
         const auto p = to_list(k, v, 2);
         c.synth.period = {p[0], p[1]};
       }},
      {"synth.scale_rate", [](RunConfig& c, auto& k, auto& v) { c.synth.scale_rate = to_double(k, v); }},
      {"synth.texture_cells", [](RunConfig& c, auto& k, auto& v) { c.synth.texture_cells = to_int(k, v); }},
  };
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number), "line " + std::to_string(number) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(number), "line " + std::to_string(number) + ": empty key");
    }
    out.emplace_back(std::move(key), trim(t.substr(eq + 1)));
  }
  return out;
}

std::vector<FeatureLayerSpec> parse_layers(const std::string& text) {
  std::vector<FeatureLayerSpec> layers;
  std::string item;
  std::istringstream in(text);
  const std::string key = "features.layers";
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(key, key + ": layer '" + item + "' needs kind:cell");
    const std::string kind = lower(item.substr(0, colon));
    std::string rest = item.substr(colon + 1);
    std::string path;
    if (kind == "external") {
      const auto second = rest.find(':');
      if (second == std::string::npos) throw ConfigError(key, key + ": external layers need external:cell:path");
      path = rest.substr(second + 1);
      rest = rest.substr(0, second);
    }
    const int cell = to_int(key, trim(rest));
    if (cell < 1) throw ConfigError(key, key + ": cell size must be >= 1");
    if (kind == "gray") layers.push_back(gray_layer(cell));
    else if (kind == "hog") layers.push_back(hog_layer(cell));
    else if (kind == "cn" || kind == "colornames") layers.push_back(colornames_layer(cell));
    else if (kind == "external") layers.push_back(external_layer(path, cell));
    else throw ConfigError(key, key + ": unknown layer kind '" + kind + "'");
  }
  if (layers.empty()) throw ConfigError(key, key + ": no layers given");
  return layers;
}

RunConfig make_run_config(const KeyValues& entries, const std::string& preset_override) {
  RunConfig cfg;
  for (const auto& [key, value] : entries) {
    if (key == "preset") cfg.preset = value;
  }
  if (!preset_override.empty()) cfg.preset = preset_override;
  cfg.tracker = preset_config(cfg.preset);
  const auto& table = setters();
  for (const auto& [key, value] : entries) {
    if (key == "preset") continue;
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path, const std::string& preset_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return make_run_config(parse_key_values(buffer.str()), preset_override);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys{"preset"};
  for (const auto& entry : setters()) keys.push_back(entry.first);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace csot
