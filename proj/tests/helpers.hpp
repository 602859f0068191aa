#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "csot/spectral.hpp"

namespace csot::test {

inline SpatialMap random_map(std::mt19937_64& rng, int h, int w, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  SpatialMap m(h, w, d);
  for (double& v : m.values()) v = n(rng);
  return m;
}

inline double max_abs_diff(const SpatialMap& a, const SpatialMap& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) e = std::max(e, std::abs(a.values()[i] - b.values()[i]));
  return e;
}

inline double max_abs_diff(const SpectralMap& a, const SpectralMap& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) e = std::max(e, std::abs(a.values()[i] - b.values()[i]));
  return e;
}

inline double max_abs(const SpatialMap& a) {
  double e = 0.0;
  for (double v : a.values()) e = std::max(e, std::abs(v));
  return e;
}

}  // namespace csot::test
