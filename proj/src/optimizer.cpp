#include "csot/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "csot/error.hpp"

namespace csot {

namespace {

void require_same(const SpectralMap& a, const SpectralMap& b, const char* what) {
  if (a.grid() != b.grid() || a.channels() != b.channels()) throw ShapeError(std::string(what) + ": shape mismatch");
}

// Real part of the Hermitian inner product; CG runs on the realified system.
double dot(const SpectralMap& x, const SpectralMap& y) {
  const auto a = x.values();
  const auto b = y.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return sum;
}

void axpy(double alpha, const SpectralMap& x, SpectralMap& y) {
  const auto a = x.values();
  auto b = y.values();
  for (std::size_t i = 0; i < a.size(); ++i) b[i] += alpha * a[i];
}

bool finite(double v) { return std::isfinite(v); }

using LinearOp = std::function<SpectralMap(const SpectralMap&)>;

SpectralMap conjugate_gradient(const LinearOp& apply, const std::vector<double>* inverse_diagonal,
                               const SpectralMap& b, const SpectralMap& x0, int iterations, double tolerance,
                               CgReport* report) {
  SpectralMap x = x0;
  x.set_real_origin(b.real_origin());
  SpectralMap r = b;
  axpy(-1.0, apply(x), r);
  const double b_norm = std::sqrt(dot(b, b));
  auto precondition = [&](const SpectralMap& v) {
    SpectralMap z = v;
    if (inverse_diagonal) {
      auto zv = z.values();
      for (std::size_t i = 0; i < zv.size(); ++i) zv[i] *= (*inverse_diagonal)[i];
    }
    return z;
  };
  // 1/2 x^H M x - Re(b^H x) = -1/2 Re((b + r)^H x) with r = b - M x.
  auto quadratic = [&]() {
    double q = 0.0;
    const auto xv = x.values();
    const auto bv = b.values();
    const auto rv = r.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const Complex s = bv[i] + rv[i];
      q += s.real() * xv[i].real() + s.imag() * xv[i].imag();
    }
    return -0.5 * q;
  };

  CgReport local;
  local.quadratic.push_back(quadratic());
  double r_norm = std::sqrt(dot(r, r));
  SpectralMap z = precondition(r);
  SpectralMap p = z;
  double rz = dot(r, z);
  if (!finite(b_norm) || !finite(r_norm)) throw SolverDivergence(0, "conjugate gradient started from a non-finite residual");
  int done = 0;
  for (; done < iterations && r_norm > tolerance * b_norm; ++done) {
    const SpectralMap mp = apply(p);
    const double pmp = dot(p, mp);
    if (!finite(pmp) || !finite(rz)) throw SolverDivergence(done + 1, "conjugate gradient produced a non-finite value");
    if (pmp <= 0.0) break;
    const double alpha = rz / pmp;
    axpy(alpha, p, x);
    axpy(-alpha, mp, r);
    r_norm = std::sqrt(dot(r, r));
    if (!finite(alpha) || !finite(r_norm)) {
      throw SolverDivergence(done + 1, "conjugate gradient produced a non-finite value");
    }
    local.quadratic.push_back(quadratic());
    z = precondition(r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    auto pv = p.values();
    const auto zv = z.values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = zv[i] + beta * pv[i];
  }
  local.iterations = done;
  local.relative_residual = b_norm > 0.0 ? r_norm / b_norm : r_norm;
  if (report) *report = std::move(local);
  // Round-off slowly breaks the conjugate symmetry CG preserves in exact arithmetic.
  return b.real_origin() ? hermitian_part(x) : x;
}

// Per-frequency data energy sum_d |a^d|^2 of one layer.
std::vector<double> data_energy(const SpectralMap& feat) {
  const double inv = 1.0 / feat.grid().area();
  std::vector<double> energy(static_cast<std::size_t>(feat.grid().area()), 0.0);
  for (int d = 0; d < feat.channels(); ++d) {
    const auto x = feat.channel(d);
    for (std::size_t i = 0; i < energy.size(); ++i) energy[i] += std::norm(x[i] * inv);
  }
  return energy;
}

}  // namespace

// ---------------------------------------------------------------------------
// Slack and labels

SpatialMap update_slack(const SpatialMap& score, const SpatialMap& cost, int anchor_row, int anchor_col) {
  if (score.grid() != cost.grid() || score.channels() != 1 || cost.channels() != 1) {
    throw ShapeError("update_slack: score and cost grids differ");
  }
  const double s0 = score.at(0, anchor_row, anchor_col);
  SpatialMap slack(score.height(), score.width(), 1);
  const auto s = score.values();
  const auto j = cost.values();
  auto e = slack.values();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::max(0.0, s0 - s[i] - j[i]);
  return slack;
}

SpectralMap confidence_labels(const SpatialMap& score, const SpatialMap& cost, const SpatialMap& slack,
                              int anchor_row, int anchor_col) {
  if (score.grid() != cost.grid() || score.grid() != slack.grid()) {
    throw ShapeError("confidence_labels: grids differ");
  }
  const double s0 = score.at(0, anchor_row, anchor_col);
  SpatialMap rho(score.height(), score.width(), 1);
  const auto j = cost.values();
  const auto e = slack.values();
  auto r = rho.values();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s0 - j[i] - e[i];
  return dft2(rho);
}

// ---------------------------------------------------------------------------
// Primal normal equations

SpectralMap apply_normal(const SpectralMap& feat, const Regularizer& reg, double C, const SpectralMap& w) {
  require_same(feat, w, "apply_normal");
  const double inv = 1.0 / feat.grid().area();
  const std::size_t plane = static_cast<std::size_t>(feat.grid().area());
  std::vector<Complex> u(plane, Complex{});
  for (int d = 0; d < feat.channels(); ++d) {
    const auto a = feat.channel(d);
    const auto x = w.channel(d);
    for (std::size_t i = 0; i < plane; ++i) u[i] += std::conj(a[i] * inv) * x[i];
  }
  SpectralMap out = reg.apply(reg.apply(w));
  const double lambda = 1.0 / C;
  for (int d = 0; d < feat.channels(); ++d) {
    const auto a = feat.channel(d);
    auto o = out.channel(d);
    for (std::size_t i = 0; i < plane; ++i) o[i] = lambda * o[i] + a[i] * inv * u[i];
  }
  out.set_real_origin(w.real_origin());
  return out;
}

SpectralMap normal_rhs(const SpectralMap& feat, const SpectralMap& labels) {
  if (labels.grid() != feat.grid() || labels.channels() != 1) throw ShapeError("normal_rhs: label grid mismatch");
  const double inv = 1.0 / feat.grid().area();
  SpectralMap b(feat.height(), feat.width(), feat.channels(), feat.real_origin() && labels.real_origin());
  const auto r = labels.channel(0);
  for (int d = 0; d < feat.channels(); ++d) {
    const auto a = feat.channel(d);
    auto o = b.channel(d);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * inv * std::conj(r[i] * inv);
  }
  return b;
}

double relative_residual(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg, double C,
                         const SpectralMap& w) {
  const SpectralMap b = normal_rhs(feat, labels);
  SpectralMap r = b;
  axpy(-1.0, apply_normal(feat, reg, C, w), r);
  const double b_norm = std::sqrt(dot(b, b));
  const double r_norm = std::sqrt(dot(r, r));
  return b_norm > 0.0 ? r_norm / b_norm : r_norm;
}

double normal_quadratic(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg, double C,
                        const SpectralMap& w) {
  return 0.5 * dot(w, apply_normal(feat, reg, C, w)) - dot(normal_rhs(feat, labels), w);
}

SpectralMap solve_layer_cg(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg, double C,
                           const SpectralMap& warm, int iterations, double tolerance, bool preconditioner,
                           CgReport* report) {
  if (!(C > 0.0)) throw DomainError("solver: C must be positive");
  require_same(feat, warm, "solve_layer_cg");
  if (reg.grid() != feat.grid()) throw ShapeError("solve_layer_cg: regularizer grid mismatch");
  feat.require_finite("solve_layer_cg");
  labels.require_finite("solve_layer_cg");
  const SpectralMap b = normal_rhs(feat, labels);
  std::vector<double> inverse;
  if (preconditioner) {
    const double inv = 1.0 / feat.grid().area();
    const double lambda_g = reg.gram_diagonal() / C;
    inverse.resize(b.values().size());
    const std::size_t plane = static_cast<std::size_t>(feat.grid().area());
    for (int d = 0; d < feat.channels(); ++d) {
      const auto a = feat.channel(d);
      for (std::size_t i = 0; i < plane; ++i) {
        inverse[d * plane + i] = 1.0 / (std::norm(a[i] * inv) + lambda_g);
      }
    }
  }
  return conjugate_gradient([&](const SpectralMap& v) { return apply_normal(feat, reg, C, v); },
                            preconditioner ? &inverse : nullptr, b, warm, iterations, tolerance, report);
}

namespace {

// u = sum_d conj(a^d) w^d, then u - e0 * sum(u): coefficients of conj(S - S(0)).
std::vector<Complex> anchored_response(const SpectralMap& feat, const SpectralMap& w) {
  const double inv = 1.0 / feat.grid().area();
  const std::size_t plane = static_cast<std::size_t>(feat.grid().area());
  std::vector<Complex> u(plane, Complex{});
  for (int d = 0; d < feat.channels(); ++d) {
    const auto a = feat.channel(d);
    const auto x = w.channel(d);
    for (std::size_t i = 0; i < plane; ++i) u[i] += std::conj(a[i] * inv) * x[i];
  }
  Complex total{};
  for (const Complex& v : u) total += v;
  u[0] -= total;
  return u;
}

// a^d * (z - z[0]): the adjoint of the response map above.
void anchored_adjoint(const SpectralMap& feat, std::vector<Complex> z, SpectralMap& out, double weight) {
  const double inv = 1.0 / feat.grid().area();
  const Complex z0 = z[0];
  for (Complex& v : z) v -= z0;
  for (int d = 0; d < feat.channels(); ++d) {
    const auto a = feat.channel(d);
    auto o = out.channel(d);
    for (std::size_t i = 0; i < z.size(); ++i) o[i] = weight * o[i] + a[i] * inv * z[i];
  }
}

}  // namespace

SpectralMap apply_normal_anchored(const SpectralMap& feat, const Regularizer& reg, double C, const SpectralMap& w) {
  require_same(feat, w, "apply_normal_anchored");
  SpectralMap out = reg.apply(reg.apply(w));
  anchored_adjoint(feat, anchored_response(feat, w), out, 1.0 / C);
  out.set_real_origin(w.real_origin());
  return out;
}

SpectralMap normal_rhs_anchored(const SpectralMap& feat, const SpectralMap& labels) {
  if (labels.grid() != feat.grid() || labels.channels() != 1) throw ShapeError("normal_rhs: label grid mismatch");
  const double inv = 1.0 / feat.grid().area();
  const auto r = labels.channel(0);
  std::vector<Complex> z(r.size());
  Complex total{};
  for (std::size_t i = 0; i < z.size(); ++i) total += (z[i] = std::conj(r[i] * inv));
  z[0] -= total;
  SpectralMap b(feat.height(), feat.width(), feat.channels(), feat.real_origin() && labels.real_origin());
  anchored_adjoint(feat, std::move(z), b, 0.0);
  return b;
}

SpectralMap solve_layer_cg_anchored(const SpectralMap& feat, const SpectralMap& labels, const Regularizer& reg,
                                    double C, const SpectralMap& warm, int iterations, double tolerance,
                                    CgReport* report) {
  if (!(C > 0.0)) throw DomainError("solver: C must be positive");
  require_same(feat, warm, "solve_layer_cg_anchored");
  if (reg.grid() != feat.grid()) throw ShapeError("solve_layer_cg_anchored: regularizer grid mismatch");
  feat.require_finite("solve_layer_cg_anchored");
  labels.require_finite("solve_layer_cg_anchored");
  return conjugate_gradient([&](const SpectralMap& v) { return apply_normal_anchored(feat, reg, C, v); }, nullptr,
                            normal_rhs_anchored(feat, labels), warm, iterations, tolerance, report);
}

StructuralFilter solve_filters_cg(const std::vector<SpectralMap>& feats, const std::vector<SpectralMap>& labels,
                                  const Regularizer& reg, const SolverConfig& cfg, const StructuralFilter& warm) {
  if (feats.size() != labels.size() || feats.size() != warm.layers.size()) {
    throw ShapeError("solve_filters_cg: layer count mismatch");
  }
  StructuralFilter out;
  for (std::size_t l = 0; l < feats.size(); ++l) {
    out.layers.push_back(solve_layer_cg(feats[l], labels[l], reg, cfg.C, warm.layers[l], cfg.cg_iterations,
                                        cfg.tolerance, cfg.preconditioner));
  }
  return out;
}

SpectralMap solve_layer_closed(const SpectralMap& feat, const SpectralMap& labels, double C) {
  if (!(C > 0.0)) throw DomainError("solver: C must be positive");
  const SpectralMap b = normal_rhs(feat, labels);
  const std::vector<double> energy = data_energy(feat);
  SpectralMap w = b;
  const std::size_t plane = energy.size();
  for (int d = 0; d < w.channels(); ++d) {
    auto o = w.channel(d);
    for (std::size_t i = 0; i < plane; ++i) o[i] /= energy[i] + 1.0 / C;
  }
  return w;
}

StructuralFilter solve_filters_closed(const std::vector<SpectralMap>& feats, const std::vector<SpectralMap>& labels,
                                      double C) {
  if (feats.size() != labels.size()) throw ShapeError("solve_filters_closed: layer count mismatch");
  StructuralFilter out;
  for (std::size_t l = 0; l < feats.size(); ++l) out.layers.push_back(solve_layer_closed(feats[l], labels[l], C));
  return out;
}

double structural_objective(const SpectralMap& feat, const SpatialMap& cost, const Regularizer& reg, double C,
                            const SpectralMap& w) {
  const SpatialMap s = score_layer(w, feat);
  if (s.grid() != cost.grid()) throw ShapeError("structural_objective: cost grid mismatch");
  const double s0 = s.at(0, 0, 0);
  double hinge = 0.0;
  const auto sv = s.values();
  const auto jv = cost.values();
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double xi = std::max(0.0, jv[i] - (s0 - sv[i]));
    hinge += xi * xi;
  }
  const SpectralMap gw = reg.apply(w);
  return dot(gw, gw) + C * hinge / static_cast<double>(sv.size());
}

// ---------------------------------------------------------------------------
// Alternating scheme

StructuralFilter collaborative_optimize(const TrainingSet& set, const SolverConfig& cfg, int outer,
                                        const StructuralFilter& warm, OptimizeReport* report) {
  if (!set.reg) throw DomainError("collaborative_optimize: regularizer missing");
  if (warm.layers.size() != set.feats.size()) throw ShapeError("collaborative_optimize: layer count mismatch");
  StructuralFilter out = warm;
  out.mode = StructuralFilter::Mode::Primal;
  OptimizeReport local;
  local.objective.resize(set.feats.size());
  local.residual.assign(set.feats.size(), 0.0);
  for (std::size_t l = 0; l < set.feats.size(); ++l) {
    const SpectralMap& feat = set.feats[l];
    SpectralMap& w = out.layers[l];
    for (int it = 0; it < outer; ++it) {
      const SpatialMap s = score_layer(w, feat);
      const SpatialMap eps = update_slack(s, set.cost);
      const SpectralMap rho = confidence_labels(s, set.cost, eps);
      CgReport cg;
      w = cfg.anchored
              ? solve_layer_cg_anchored(feat, rho, *set.reg, cfg.C, w, cfg.cg_iterations, cfg.tolerance, &cg)
              : solve_layer_cg(feat, rho, *set.reg, cfg.C, w, cfg.cg_iterations, cfg.tolerance, cfg.preconditioner,
                               &cg);
      local.objective[l].push_back(structural_objective(feat, set.cost, *set.reg, cfg.C, w));
      local.residual[l] = cg.relative_residual;
    }
  }
  if (report) *report = std::move(local);
  return out;
}

// ---------------------------------------------------------------------------
// Dual path

SpectralMap kernel_correlation(const SpectralMap& x, const SpectralMap& z, const KernelSpec& spec) {
  require_same(x, z, "kernel_correlation");
  const double area = x.grid().area();
  SpectralMap cross = circular_correlate(x, z);
  if (spec.kind == KernelSpec::Kind::Linear) {
    for (Complex& v : cross.values()) v /= area;
    return cross;
  }
  if (!(spec.bandwidth > 0.0)) throw DomainError("kernel: bandwidth must be positive");
  double xx = 0.0;
  double zz = 0.0;
  for (const Complex& v : x.values()) xx += std::norm(v);
  for (const Complex& v : z.values()) zz += std::norm(v);
  xx /= area;
  zz /= area;
  SpatialMap c = idft2(cross);
  const double denom = spec.bandwidth * spec.bandwidth * area * x.channels();
  for (double& v : c.values()) v = std::exp(-std::max(0.0, xx + zz - 2.0 * v) / denom);
  return dft2(c);
}

SpectralMap kernel_autocorrelation(const SpectralMap& feat, const KernelSpec& spec) {
  return kernel_correlation(feat, feat, spec);
}

SpectralMap solve_dual(const SpectralMap& kernel, const SpectralMap& labels, double C, const Regularizer* reg,
                       int iterations, double tolerance, const SpectralMap* warm) {
  if (!(C > 0.0)) throw DomainError("solver: C must be positive");
  require_same(kernel, labels, "solve_dual");
  kernel.require_finite("solve_dual");
  labels.require_finite("solve_dual");
  const double area = kernel.grid().area();
  SpectralMap rhs = labels;
  for (Complex& v : rhs.values()) v = std::conj(v);
  if (!reg) {
    const auto k = kernel.values();
    auto a = rhs.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] /= k[i] + area / C;
    rhs.require_finite("solve_dual");
    return rhs;
  }
  if (reg->grid() != kernel.grid()) throw ShapeError("solve_dual: regularizer grid mismatch");
  const auto k = kernel.values();
  auto apply = [&](const SpectralMap& v) {
    SpectralMap out = reg->apply(reg->apply(v));
    auto o = out.values();
    const auto vv = v.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = area / C * o[i] + k[i].real() * vv[i];
    return out;
  };
  const SpectralMap zero(kernel.height(), kernel.width(), 1, rhs.real_origin());
  return conjugate_gradient(apply, nullptr, rhs, warm ? *warm : zero, iterations, tolerance, nullptr);
}

ConfidenceMap score_dual(const SpectralMap& cross_kernel, const SpectralMap& alpha) {
  require_same(cross_kernel, alpha, "score_dual");
  return make_confidence(idft2(circular_correlate(alpha, cross_kernel)));
}

StructuralFilter train_dual(const TrainingSet& set, const KernelSpec& kernel, const SolverConfig& cfg, int outer,
                            const StructuralFilter& warm, OptimizeReport* report) {
  StructuralFilter out;
  out.mode = StructuralFilter::Mode::Dual;
  out.kernel = kernel;
  out.training = set.feats;
  OptimizeReport local;
  local.objective.resize(set.feats.size());
  local.residual.assign(set.feats.size(), 0.0);
  const bool warm_usable = warm.mode == StructuralFilter::Mode::Dual && warm.layers.size() == set.feats.size();
  for (std::size_t l = 0; l < set.feats.size(); ++l) {
    const SpectralMap k = kernel_autocorrelation(set.feats[l], kernel);
    SpectralMap alpha = warm_usable && warm.layers[l].grid() == k.grid() ? warm.layers[l]
                                                                           : SpectralMap(k.height(), k.width(), 1, true);
    for (int it = 0; it < outer; ++it) {
      const SpatialMap s = score_dual(k, alpha).grid;
      const SpatialMap eps = update_slack(s, set.cost);
      const SpectralMap rho = confidence_labels(s, set.cost, eps);
      alpha = solve_dual(k, rho, cfg.C, set.reg, cfg.cg_iterations, cfg.tolerance, &alpha);
      const SpatialMap after = score_dual(k, alpha).grid;
      const double s0 = after.at(0, 0, 0);
      double hinge = 0.0;
      for (std::size_t i = 0; i < after.values().size(); ++i) {
        const double xi = std::max(0.0, set.cost.values()[i] - (s0 - after.values()[i]));
        hinge += xi * xi;
      }
      local.objective[l].push_back(cfg.C * hinge / static_cast<double>(after.values().size()));
    }
    out.layers.push_back(std::move(alpha));
  }
  if (report) *report = std::move(local);
  return out;
}

}  // namespace csot
