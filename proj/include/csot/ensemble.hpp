#pragma once

// Fusion of per-layer confidence maps: normalization to distributions, pairwise
// products and their average, plus the relative-entropy objective it minimizes.

#include <vector>

#include "csot/operator.hpp"

namespace csot {

enum class MapNormalization { MinShift, Softmax };

/// Non-negative grid summing to one.
SpatialMap normalize_map(const SpatialMap& map, MapNormalization mode = MapNormalization::MinShift);

/// All products S_m * S_n with m < n, lexicographic pair order.
std::vector<SpatialMap> pairwise_filter(const std::vector<SpatialMap>& maps);

/// R = 2 / (L (L - 1)) * sum of the pairwise maps, with its refined peak.
ConfidenceMap fuse(const std::vector<SpatialMap>& weighted, int layers);

/// sum_l sum_p S_l(p) log(S_l(p) / R(p)); 0 log 0 = 0 and +inf where R = 0 < S_l.
double kl_objective(const std::vector<SpatialMap>& maps, const SpatialMap& candidate);

/// normalize -> pairwise_filter -> fuse.
ConfidenceMap fuse_confidence(const std::vector<ConfidenceMap>& layers,
                              MapNormalization mode = MapNormalization::MinShift);

}  // namespace csot
