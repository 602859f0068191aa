#include "csot/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "csot/error.hpp"

namespace csot {

TrackerConfig preset_config(const std::string& name) {
  TrackerConfig cfg;
  if (name == "hc") return cfg;
  if (name == "khc") {
    cfg.kernel = KernelSpec{KernelSpec::Kind::Gaussian, 0.2};
    return cfg;
  }
  if (name == "external") {
    cfg.layers = {external_layer("features/{role}_{frame:4}_s{scale}_l0.csot", 4),
                  external_layer("features/{role}_{frame:4}_s{scale}_l1.csot", 8)};
    return cfg;
  }
  throw ConfigError("preset", "unknown preset '" + name + "' (expected hc, khc or external)");
}

std::vector<double> scale_factors(int layers, double step, bool symmetric) {
  if (layers < 1) throw DomainError("scale_factors: need at least one scale layer");
  if (!(step > 1.0)) throw DomainError("scale_factors: scale step must exceed 1");
  int low = static_cast<int>(std::floor(-(layers - 1) / 2.0));
  int high = static_cast<int>(std::floor((layers - 1) / 2.0));
  if (symmetric) {
    high = layers / 2;
    low = -high;
  }
  std::vector<double> factors;
  for (int tau = low; tau <= high; ++tau) factors.push_back(std::pow(step, tau));
  return factors;
}

namespace {

void validate(const TrackerConfig& cfg) {
  if (cfg.layers.size() < 2) throw ConfigError("features.layers", "at least two feature layers are required");
  for (const FeatureLayerSpec& spec : cfg.layers) {
    if (spec.cell_size < 1) throw ConfigError("features.layers", "cell size must be >= 1");
  }
  if (!(cfg.solver.C > 0.0)) throw ConfigError("solver.C", "C must be positive");
  if (cfg.solver.outer_iterations < 1 || cfg.solver.cg_iterations < 1 || cfg.solver.init_outer_iterations < 1) {
    throw ConfigError("solver", "iteration counts must be >= 1");
  }
  if (!(cfg.label.sigma > 0.0)) throw ConfigError("label.sigma", "sigma must be positive");
  if (cfg.scale_layers < 1) throw ConfigError("scale.layers", "scale layers must be >= 1");
  if (!(cfg.scale_step > 1.0)) throw ConfigError("scale.step", "scale step must exceed 1");
  if (!(cfg.sample.search_area_factor > 1.0)) {
    throw ConfigError("sample.search_area_factor", "search area factor must exceed 1");
  }
  if (cfg.sample.min_side < 8 || cfg.sample.max_side < cfg.sample.min_side) {
    throw ConfigError("sample.min_side", "sample clamp must satisfy 8 <= min <= max");
  }
  if (!(cfg.learning_rate > 0.0) || cfg.learning_rate > 1.0) {
    throw ConfigError("model.learning_rate", "learning rate must lie in (0, 1]");
  }
}

std::string resolve_template(const std::string& root, const std::string& tmpl) {
  if (root.empty() || std::filesystem::path(tmpl).is_absolute()) return tmpl;
  return (std::filesystem::path(root) / tmpl).string();
}

Point2 clamp_to_frame(Point2 p, const Image& frame) {
  return {std::clamp(p.x, 0.0, frame.width - 1.0), std::clamp(p.y, 0.0, frame.height - 1.0)};
}

StructuralFilter train(const TrackerSetup& setup, const std::vector<SpectralMap>& feats, int outer,
                       const StructuralFilter& warm, OptimizeReport* report) {
  const TrainingSet set{feats, setup.cost, &setup.regularizer};
  if (setup.config.kernel) {
    const Regularizer* reg = setup.config.regularize ? &setup.regularizer : nullptr;
    const TrainingSet dual_set{feats, setup.cost, reg};
    return train_dual(dual_set, *setup.config.kernel, setup.config.solver, outer, warm, report);
  }
  return collaborative_optimize(set, setup.config.solver, outer, warm, report);
}

}  // namespace

std::vector<SpectralMap> sample_features(const TrackerSetup& setup, const Image& frame, Point2 center,
                                         double region, int frame_number, int scale_index, const char* role) {
  const Patch patch = crop_region(frame, center, region, setup.sample_side);
  ExtractionContext ctx;
  ctx.colornames = setup.colornames;
  ctx.normalization = setup.config.normalization;
  ctx.external = {frame_number, scale_index, role};
  const FeatureStack stack = extract_stack(patch, setup.config.layers, ctx);
  std::vector<SpectralMap> feats;
  feats.reserve(stack.layers.size());
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    SpatialMap layer = stack.layers[l];
    if (setup.config.window) apply_hann_window(layer);
    if (layer.height() != setup.kernels[l].samples || layer.width() != setup.kernels[l].samples) {
      throw ShapeError("layer " + std::to_string(l) + " resolution changed after initialization");
    }
    feats.push_back(interpolate(layer, setup.kernels[l], setup.grid));
  }
  return feats;
}

TrackerState init(const Image& frame, const Box& bbox, const TrackerConfig& config) {
  TrackerConfig cfg = config;
  validate(cfg);
  if (frame.width < 8 || frame.height < 8) throw DomainError("init: frame too small");
  if (!(bbox.w > 0.0) || !(bbox.h > 0.0) || !std::isfinite(bbox.x) || !std::isfinite(bbox.y)) {
    throw DomainError("init: degenerate bounding box");
  }
  const Point2 center = bbox.center();
  if (center.x < 0.0 || center.y < 0.0 || center.x > frame.width || center.y > frame.height) {
    throw DomainError("init: bounding box center lies outside the frame");
  }
  for (FeatureLayerSpec& spec : cfg.layers) {
    if (spec.kind == LayerKind::External) spec.external_path_template = resolve_template(cfg.external_root, spec.external_path_template);
  }

  auto setup = std::make_shared<TrackerSetup>();
  setup->config = cfg;
  const Size2 size{bbox.w, bbox.h};
  setup->sample_side = sample_side(size, 1.0, cfg.sample);
  setup->scales = scale_factors(cfg.scale_layers, cfg.scale_step, cfg.symmetric_scales);
  setup->unit_scale_index = static_cast<int>(
      std::min_element(setup->scales.begin(), setup->scales.end(),
                       [](double a, double b) { return std::abs(std::log(a)) < std::abs(std::log(b)); }) -
      setup->scales.begin());
  const bool needs_cn = std::any_of(cfg.layers.begin(), cfg.layers.end(),
                                    [](const FeatureLayerSpec& s) { return s.kind == LayerKind::ColorNames; });
  if (needs_cn) {
    setup->colornames = std::make_shared<const ColorNamesTable>(
        cfg.colornames_table.empty() ? ColorNamesTable::prototype() : ColorNamesTable::load(cfg.colornames_table));
  }

  // Native resolutions: from the extractors for built-in layers, from the file for external ones.
  std::vector<int> native;
  for (const FeatureLayerSpec& spec : cfg.layers) {
    if (spec.kind == LayerKind::External) {
      const SpatialMap probe = load_external(expand_external_path(spec.external_path_template, {1, setup->unit_scale_index, "train"}));
      if (probe.height() != probe.width()) throw ShapeError("external layers must be square");
      native.push_back(probe.height());
    } else {
      native.push_back(setup->sample_side / spec.cell_size);
    }
  }
  const int t = *std::max_element(native.begin(), native.end());
  setup->grid = {t, t};
  for (int n : native) {
    if (n < 2) throw ConfigError("features.layers", "cell size too large for the sample size");
    setup->kernels.push_back(spline_kernel(n));
  }
  // Target extent in grid cells; the region is search_area_factor * sqrt(w h) wide.
  const double cells_per_px = t / region_side(size, 1.0, cfg.sample);
  setup->regularizer = cfg.regularize ? build_regularizer(setup->grid, bbox.h * cells_per_px, bbox.w * cells_per_px,
                                                          cfg.reg_min_weight, cfg.reg_slope)
                                      : constant_regularizer(setup->grid, 1.0);
  setup->cost = cost_map(cfg.label, setup->grid);

  TrackerState state;
  state.position = center;
  state.size = size;
  state.setup = setup;
  state.model = sample_features(*setup, frame, center, region_side(size, 1.0, cfg.sample), 1,
                                setup->unit_scale_index, "train");
  StructuralFilter warm = StructuralFilter::zeros(state.model);
  state.filters = train(*setup, state.model, cfg.solver.init_outer_iterations, warm, &state.last_report);
  state.frame_index = 1;
  return state;
}

Detection detect(const TrackerState& state, const Image& frame) {
  if (!state.setup) throw DomainError("detect: tracker not initialized");
  if (frame.width < 8 || frame.height < 8) throw DomainError("detect: frame too small");
  const TrackerSetup& setup = *state.setup;
  Detection best;
  best.optimal.peak_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < setup.scales.size(); ++i) {
    const double region = region_side(state.size, setup.scales[i], setup.config.sample);
    const auto feats = sample_features(setup, frame, state.position, region, state.frame_index + 1,
                                       static_cast<int>(i), "search");
    ConfidenceMap fused = fuse_confidence(score(state.filters, feats), setup.config.fusion);
    best.scale_peaks.push_back(fused.peak_value);
    if (fused.peak_value > best.optimal.peak_value) {
      const Point2 shift = fused.shift();
      const double step = region / setup.grid.width;
      best.position = clamp_to_frame({state.position.x + shift.x * step, state.position.y + shift.y * step}, frame);
      best.scale_index = static_cast<int>(i);
      best.scale_factor = setup.scales[i];
      best.optimal = std::move(fused);
    }
  }
  return best;
}

TrackerState update(const TrackerState& state, const Image& frame, Point2 position, int scale_index) {
  if (!state.setup) throw DomainError("update: tracker not initialized");
  const TrackerSetup& setup = *state.setup;
  if (scale_index < 0 || scale_index >= static_cast<int>(setup.scales.size())) {
    throw DomainError("update: scale index out of range");
  }
  TrackerState next = state;
  const double factor = setup.scales[scale_index];
  next.size = {std::max(state.size.width * factor, 1.0), std::max(state.size.height * factor, 1.0)};
  next.position = clamp_to_frame(position, frame);
  next.frame_index = state.frame_index + 1;
  auto feats = sample_features(setup, frame, next.position, region_side(next.size, 1.0, setup.config.sample),
                               next.frame_index, setup.unit_scale_index, "train");
  const double eta = setup.config.learning_rate;
  if (eta < 1.0) {
    for (std::size_t l = 0; l < feats.size(); ++l) {
      auto m = next.model[l].values();
      const auto f = feats[l].values();
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = (1.0 - eta) * m[i] + eta * f[i];
    }
  } else {
    next.model = std::move(feats);
  }
  next.filters = train(setup, next.model, setup.config.solver.outer_iterations, state.filters, &next.last_report);
  return next;
}

TrackResult track_sequence(int frame_count, const FrameSource& frames, const Box& init_box,
                           const TrackerConfig& config) {
  if (frame_count < 1) throw DomainError("track_sequence: empty sequence");
  TrackResult result;
  using Clock = std::chrono::steady_clock;
  TrackerState state;
  for (int t = 0; t < frame_count; ++t) {
    const auto start = Clock::now();
    try {
      const Image frame = frames(t);
      if (t == 0) {
        state = init(frame, init_box, config);
        result.boxes.push_back(init_box);
      } else {
        const Detection det = detect(state, frame);
        state = update(state, frame, det.position, det.scale_index);
        result.boxes.push_back(Box::around(state.position, state.size));
      }
    } catch (const TrackingError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw TrackingError(t + 1, e.what());
    }
    result.frame_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
  }
  return result;
}

TrackResult track_sequence(const std::vector<Image>& frames, const Box& init_box, const TrackerConfig& config) {
  return track_sequence(static_cast<int>(frames.size()), [&](int i) { return frames[static_cast<std::size_t>(i)]; },
                        init_box, config);
}

}  // namespace csot
