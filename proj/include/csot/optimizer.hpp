#pragma once

// Filter training: slack/label updates, the primal normal equations (CG and
// closed form), the alternating collaborative scheme, and the kernelized dual.
//
// With a = x^/area and r = rho^/area the primal normal equations read
//   (A + (1/C) G^H G) w^ = b,   (A w^)^d = a^d sum_e conj(a^e) w^e,   b^d = a^d conj(r),
// per frequency for A and with G = gamma^ (*) coupling frequencies.

#include <vector>

#include "csot/operator.hpp"

namespace csot {

struct SolverConfig {
  double C = 20000.0;
  int outer_iterations = 3;
  int cg_iterations = 2;
  int init_outer_iterations = 25;
  double tolerance = 1e-8;   // relative residual floor
  bool preconditioner = false;
  /// Tie the label offset S(y0) to the filter being solved for (fit S - S(y0) to
  /// rho - rho(y0)) instead of freezing it at the previous iterate.
  bool anchored = true;
};

/// eps(p) = max(0, S0 - S(p) - J(p)) with S0 read at `anchor`.
SpatialMap update_slack(const SpatialMap& score, const SpatialMap& cost, int anchor_row = 0, int anchor_col = 0);
/// rho = S0 - J - eps, returned as a spectrum (dft2 convention).
SpectralMap confidence_labels(const SpatialMap& score, const SpatialMap& cost, const SpatialMap& slack,
                              int anchor_row = 0, int anchor_col = 0);

/// Applies the normal-equation matrix of one layer.
SpectralMap apply_normal(const SpectralMap& feat, const Regularizer& reg, double C, const SpectralMap& w);
/// Right-hand side b of one layer.
SpectralMap normal_rhs(const SpectralMap& feat, const SpectralMap& labels);
/// ||b - M w|| / ||b|| (0 when b = 0 and w solves the system exactly).
double relative_residual(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg, double C,
                         const SpectralMap& w);
/// The quadratic 1/2 w^H M w - Re(b^H w) that CG decreases.
double normal_quadratic(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg, double C,
                        const SpectralMap& w);

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> quadratic;  // value before the first and after every iteration
};

/// Runs up to `iterations` CG steps from `warm`; never modifies `warm`.
SpectralMap solve_layer_cg(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg,
                           double C, const SpectralMap& warm, int iterations, double tolerance,
                           bool preconditioner, CgReport* report = nullptr);

/// Anchored variant: the data term only sees S - S(0), so constant offsets are free.
SpectralMap apply_normal_anchored(const SpectralMap& feat, const Regularizer& reg, double C, const SpectralMap& w);
SpectralMap normal_rhs_anchored(const SpectralMap& feat, const SpectralMap& labels);
SpectralMap solve_layer_cg_anchored(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg,
                                    double C, const SpectralMap& warm, int iterations, double tolerance,
                                    CgReport* report = nullptr);

StructuralFilter solve_filters_cg(const std::vector<SpectralMap>& feats, const std::vector<SpectralMap>& labels,
                                  const Regularizer& reg, const SolverConfig& cfg, const StructuralFilter& warm);

/// w^d = a^d conj(r) / (sum_e |a^e|^2 + 1/C), element-wise.
SpectralMap solve_layer_closed(const SpectralMap& feat, const SpectralMap& labels, double C);
StructuralFilter solve_filters_closed(const std::vector<SpectralMap>& feats, const std::vector<SpectralMap>& labels,
                                      double C);

/// Objective of the structural problem at w with the slack eliminated:
/// sum_d ||gamma w^d||^2 (mean over the grid) + C * mean(max(0, J - (S0 - S))^2).
double structural_objective(const SpectralMap& feat, const SpatialMap& cost, const Regularizer& reg, double C,
                            const SpectralMap& w);

struct TrainingSet {
  std::vector<SpectralMap> feats;  // one interpolated spectrum per layer
  SpatialMap cost;
  const Regularizer* reg = nullptr;
};

struct OptimizeReport {
  std::vector<std::vector<double>> objective;  // [layer][outer iteration]
  std::vector<double> residual;                // final relative residual per layer
};

/// Alternates score, slack, labels and warm-started CG for `outer` iterations.
StructuralFilter collaborative_optimize(const TrainingSet& set, const SolverConfig& cfg, int outer,
                                        const StructuralFilter& warm, OptimizeReport* report = nullptr);

// Kernelized dual path ------------------------------------------------------

/// Kernel map between two feature spectra, returned in the dft2 convention:
/// linear k(p) = c(p) / area, Gaussian k(p) = exp(-max(0, |x|^2 + |z|^2 - 2 c(p)) / (sigma^2 area D)),
/// where c(p) = sum_n x[n] z[n + p] over grid samples and channels.
SpectralMap kernel_correlation(const SpectralMap& x, const SpectralMap& z, const KernelSpec& spec);
SpectralMap kernel_autocorrelation(const SpectralMap& feat, const KernelSpec& spec);

/// Without regularizer: alpha^ = conj(rho^) / (k^ + area/C). With one: CG on
/// (k^ + (area/C) G^H G) alpha^ = conj(rho^).
SpectralMap solve_dual(const SpectralMap& kernel, const SpectralMap& labels, double C,
                       const Regularizer* reg = nullptr, int iterations = 200, double tolerance = 1e-12,
                       const SpectralMap* warm = nullptr);
/// S = idft2(conj(alpha^) k^_cross).
ConfidenceMap score_dual(const SpectralMap& cross_kernel, const SpectralMap& alpha);

/// Trains dual filters (one per layer) on the given set.
StructuralFilter train_dual(const TrainingSet& set, const KernelSpec& kernel, const SolverConfig& cfg, int outer,
                            const StructuralFilter& warm, OptimizeReport* report = nullptr);

}  // namespace csot
