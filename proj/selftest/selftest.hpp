#pragma once

// Reference oracles for the numerical core. Each suite builds its reference
// answer from first principles (direct sums, dense linear algebra, brute-force
// minimization) and compares it with the library result.

#include <cstdint>
#include <string>
#include <vector>

namespace csot::selftest {

struct Options {
  std::uint64_t seed = 20240601;
  /// Relative perturbation applied to a constant on the library side only.
  /// Any non-zero value is expected to make suites fail.
  double perturb = 0.0;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  double error = 0.0;      // worst observed discrepancy
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

/// dft2 against the direct O(n^2) transform, and idft2(circular_correlate) against
/// the spatial circular correlation, on random h x w x d instances.
SuiteResult correlation_suite(const Options& opt, int instances = 50, int size = 8, int channels = 3);
/// interpolate + idft2 against direct summation of the periodic spline series.
SuiteResult interpolation_suite(const Options& opt, int instances = 20, int samples = 6, int output = 24);
/// update_slack and confidence_labels against the per-element constrained minimizer.
SuiteResult slack_suite(const Options& opt, int instances = 100, int elements = 64);
/// solve_filters_cg against a dense spatial least-squares solve.
SuiteResult dense_solver_suite(const Options& opt, int instances = 10, int size = 8, int channels = 2);
/// solve_filters_cg with an identity regularizer against solve_filters_closed.
SuiteResult closed_form_suite(const Options& opt, int instances = 10, int size = 8, int channels = 2);
/// The renormalized fused map against random simplex perturbations and projected gradient.
SuiteResult fusion_suite(const Options& opt, int instances = 10, int layers = 3, int size = 12);
/// Linear-kernel dual scores against primal closed-form scores on a synthetic frame.
SuiteResult primal_dual_suite(const Options& opt);
/// Success AUC against the mean IoU on random trajectories.
SuiteResult metrics_suite(const Options& opt, int trajectories = 20, int length = 60);

std::vector<SuiteResult> run_all(const Options& opt);

}  // namespace csot::selftest
