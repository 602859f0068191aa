#include "csot/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csot/error.hpp"

namespace csot {

SpatialMap normalize_map(const SpatialMap& map, MapNormalization mode) {
  if (map.channels() != 1) throw ShapeError("normalize_map: expected one channel");
  map.require_finite("normalize_map");
  SpatialMap out = map;
  auto v = out.values();
  if (mode == MapNormalization::Softmax) {
    const double top = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) sum += (x = std::exp(x - top));
    for (double& x : v) x /= sum;
    return out;
  }
  const double low = *std::min_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) sum += (x -= low);
  if (!(sum > 0.0)) {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
    return out;
  }
  for (double& x : v) x /= sum;
  return out;
}

std::vector<SpatialMap> pairwise_filter(const std::vector<SpatialMap>& maps) {
  if (maps.size() < 2) throw DomainError("pairwise_filter: need at least two maps");
  for (const SpatialMap& m : maps) {
    if (m.grid() != maps.front().grid() || m.channels() != 1) throw ShapeError("pairwise_filter: grid mismatch");
  }
  std::vector<SpatialMap> products;
  for (std::size_t m = 0; m + 1 < maps.size(); ++m) {
    for (std::size_t n = m + 1; n < maps.size(); ++n) {
      SpatialMap p = maps[m];
      auto pv = p.values();
      const auto nv = maps[n].values();
      for (std::size_t i = 0; i < pv.size(); ++i) pv[i] *= nv[i];
      products.push_back(std::move(p));
    }
  }
  return products;
}

ConfidenceMap fuse(const std::vector<SpatialMap>& weighted, int layers) {
  if (layers < 2 || weighted.size() != static_cast<std::size_t>(layers) * (layers - 1) / 2) {
    throw ShapeError("fuse: expected L(L-1)/2 weighted maps");
  }
  SpatialMap sum(weighted.front().height(), weighted.front().width(), 1);
  auto sv = sum.values();
  for (const SpatialMap& m : weighted) {
    if (m.grid() != sum.grid()) throw ShapeError("fuse: grid mismatch");
    const auto mv = m.values();
    for (std::size_t i = 0; i < sv.size(); ++i) sv[i] += mv[i];
  }
  const double scale = 2.0 / (static_cast<double>(layers) * (layers - 1));
  for (double& v : sv) v *= scale;
  return make_confidence(std::move(sum));
}

double kl_objective(const std::vector<SpatialMap>& maps, const SpatialMap& candidate) {
  const auto r = candidate.values();
  double total = 0.0;
  for (const SpatialMap& m : maps) {
    if (m.grid() != candidate.grid()) throw ShapeError("kl_objective: grid mismatch");
    const auto s = m.values();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] <= 0.0) continue;
      if (r[i] <= 0.0) return std::numeric_limits<double>::infinity();
      total += s[i] * std::log(s[i] / r[i]);
    }
  }
  return total;
}

ConfidenceMap fuse_confidence(const std::vector<ConfidenceMap>& layers, MapNormalization mode) {
  std::vector<SpatialMap> normalized;
  normalized.reserve(layers.size());
  for (const ConfidenceMap& c : layers) normalized.push_back(normalize_map(c.grid, mode));
  return fuse(pairwise_filter(normalized), static_cast<int>(layers.size()));
}

}  // namespace csot
