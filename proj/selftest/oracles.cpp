#include "selftest.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "csot/bench.hpp"
#include "csot/ensemble.hpp"
#include "csot/features.hpp"
#include "csot/operator.hpp"
#include "csot/optimizer.hpp"
#include "csot/spectral.hpp"

namespace csot::selftest {

namespace {

constexpr double kPi = std::numbers::pi;
using Clock = std::chrono::steady_clock;
using Cx = std::complex<double>;

SpatialMap random_map(std::mt19937_64& rng, int h, int w, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  SpatialMap m(h, w, d);
  for (double& v : m.values()) v = n(rng);
  return m;
}

SuiteResult finish(std::string name, double error, double tolerance, Clock::time_point start,
                   const std::string& detail = {}) {
  SuiteResult r;
  r.name = std::move(name);
  r.error = error;
  r.tolerance = tolerance;
  r.passed = std::isfinite(error) && error <= tolerance;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  r.detail = detail;
  return r;
}

double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

// Periodic spline series on [0, 1): b(t) = sum_k c_k (1/N) e^{-i pi k/N} sinc^4(k/N) e^{i 2 pi k t},
// |k| <= N/2 with the two Nyquist terms of an even N at half weight.
double spline_series(int n, double t) {
  double sum = 0.0;
  for (int k = -(n / 2); k <= n / 2; ++k) {
    const double f = static_cast<double>(k) / n;
    const double sinc = k == 0 ? 1.0 : std::sin(kPi * f) / (kPi * f);
    double weight = 1.0 / n * std::pow(sinc, 4);
    if (n % 2 == 0 && std::abs(k) == n / 2) weight *= 0.5;
    sum += weight * std::cos(2.0 * kPi * k * t - kPi * k / n);
  }
  return sum;
}

double kl(const std::vector<SpatialMap>& maps, const std::vector<double>& r) {
  double total = 0.0;
  for (const SpatialMap& m : maps) {
    const auto v = m.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] <= 0.0) continue;
      if (r[i] <= 0.0) return std::numeric_limits<double>::infinity();
      total += v[i] * std::log(v[i] / r[i]);
    }
  }
  return total;
}

// Euclidean projection onto {r >= floor, sum r = 1} by bisection on the shift.
std::vector<double> project_simplex(const std::vector<double>& v, double floor) {
  double lo = -1e3, hi = 1e3;
  std::vector<double> out(v.size());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : v) s += std::max(x - mid, floor);
    (s > 1.0 ? lo : hi) = mid;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += (out[i] = std::max(v[i] - 0.5 * (lo + hi), floor));
  for (double& x : out) x /= s;
  return out;
}

double own_iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double ih = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace

SuiteResult correlation_suite(const Options& opt, int instances, int size, int channels) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    const SpatialMap w = random_map(rng, size, size, channels);
    const SpatialMap x = random_map(rng, size, size, channels);

    // Direct transform of x.
    const SpectralMap xs = dft2(x);
    double scale = 0.0, err = 0.0;
    for (int c = 0; c < channels; ++c) {
      for (int ky = 0; ky < size; ++ky) {
        for (int kx = 0; kx < size; ++kx) {
          Cx sum{};
          for (int y = 0; y < size; ++y) {
            for (int xx = 0; xx < size; ++xx) {
              sum += x.at(c, y, xx) * std::polar(1.0, -2.0 * kPi * (static_cast<double>(ky * y) / size +
                                                                    static_cast<double>(kx * xx) / size));
            }
          }
          scale = std::max(scale, std::abs(sum));
          err = std::max(err, std::abs(sum - xs.channel(c)[static_cast<std::size_t>(ky) * size + kx]));
        }
      }
    }
    worst = std::max(worst, rel(err, scale));

    // Spatial correlation S[p] = sum_d sum_n w_d[n] x_d[n + p].
    SpectralMap ws = dft2(w);
    for (Cx& v : ws.values()) v *= 1.0 + opt.perturb;
    const SpatialMap s = idft2(circular_correlate(ws, xs));
    scale = err = 0.0;
    for (int py = 0; py < size; ++py) {
      for (int px = 0; px < size; ++px) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) {
          for (int y = 0; y < size; ++y) {
            for (int xx = 0; xx < size; ++xx) sum += w.at(c, y, xx) * x.at(c, (y + py) % size, (xx + px) % size);
          }
        }
        scale = std::max(scale, std::abs(sum));
        err = std::max(err, std::abs(sum - s.at(0, py, px)));
      }
    }
    worst = std::max(worst, rel(err, scale));
  }
  return finish("spectral/correlation", worst, 1e-8, start);
}

SuiteResult interpolation_suite(const Options& opt, int instances, int samples, int output) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed + 1);
  double worst = 0.0;
  std::vector<double> b(static_cast<std::size_t>(output) * samples);
  for (int m = 0; m < output; ++m) {
    for (int n = 0; n < samples; ++n) {
      b[static_cast<std::size_t>(m) * samples + n] =
          spline_series(samples, static_cast<double>(m) / output - static_cast<double>(n) / samples);
    }
  }
  InterpolationKernel kernel = spline_kernel(samples);
  for (Cx& v : kernel.coefficients) v *= 1.0 + opt.perturb;
  for (int it = 0; it < instances; ++it) {
    const SpatialMap x = random_map(rng, samples, samples, 1);
    const SpatialMap got = idft2(interpolate(x, kernel, {output, output}));
    double scale = 0.0, err = 0.0;
    for (int my = 0; my < output; ++my) {
      for (int mx = 0; mx < output; ++mx) {
        double sum = 0.0;
        for (int ny = 0; ny < samples; ++ny) {
          for (int nx = 0; nx < samples; ++nx) {
            sum += x.at(0, ny, nx) * b[static_cast<std::size_t>(my) * samples + ny] *
                   b[static_cast<std::size_t>(mx) * samples + nx];
          }
        }
        scale = std::max(scale, std::abs(sum));
        err = std::max(err, std::abs(sum - got.at(0, my, mx)));
      }
    }
    worst = std::max(worst, rel(err, scale));
  }
  return finish("spectral/interpolation", worst, 1e-8, start);
}

SuiteResult slack_suite(const Options& opt, int instances, int elements) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed + 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> cost(0.0, 1.0);
  int mismatches = 0;
  double label_err = 0.0;
  for (int it = 0; it < instances; ++it) {
    SpatialMap s(1, elements, 1);
    SpatialMap j(1, elements, 1);
    for (double& v : s.values()) v = u(rng);
    for (double& v : j.values()) v = cost(rng);
    const int anchor = static_cast<int>(rng() % static_cast<std::uint64_t>(elements));
    j.at(0, 0, anchor) = 0.0;
    const double s0 = s.at(0, 0, anchor) * (1.0 + opt.perturb);
    SpatialMap scored = s;
    scored.at(0, 0, anchor) = s0;
    const SpatialMap eps = update_slack(scored, j, 0, anchor);
    const SpatialMap rho = idft2(confidence_labels(scored, j, eps, 0, anchor));
    for (int p = 0; p < elements; ++p) {
      // min over e >= 0 of (S0 - S - J - e)^2: the stationary point if feasible, else the boundary.
      const double d = s.at(0, 0, anchor) - s.at(0, 0, p) - j.at(0, 0, p);
      double best = 0.0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (const double e : {0.0, d}) {
        const double c = (d - e) * (d - e);
        if (e >= 0.0 && c < best_cost) {
          best = e;
          best_cost = c;
        }
      }
      if (eps.at(0, 0, p) != best) ++mismatches;
      const double expected = s.at(0, 0, anchor) - j.at(0, 0, p) - best;
      label_err = std::max(label_err, std::abs(rho.at(0, 0, p) - expected));
    }
  }
  std::ostringstream detail;
  detail << mismatches << " slack mismatches, label error " << label_err;
  return finish("optimizer/slack", mismatches + (label_err > 1e-12 ? 1.0 : 0.0), 0.0, start, detail.str());
}

SuiteResult dense_solver_suite(const Options& opt, int instances, int size, int channels) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed + 3);
  std::uniform_real_distribution<double> weight(0.2, 2.0);
  const int area = size * size;
  const double C = 50.0;
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    const SpatialMap x = random_map(rng, size, size, channels);
    const SpatialMap rho = random_map(rng, size, size, 1);
    SpatialMap gamma(size, size, 1);
    for (double& v : gamma.values()) v = weight(rng);

    // Minimize C/area |X w - rho|^2 + 1/area |gamma w|^2 over spatial w,
    // (X w)[p] = 1/area sum_d sum_n w_d[n] x_d[n + p].
    const int unknowns = area * channels;
    Eigen::MatrixXd X(area, unknowns);
    for (int py = 0; py < size; ++py) {
      for (int px = 0; px < size; ++px) {
        for (int d = 0; d < channels; ++d) {
          for (int y = 0; y < size; ++y) {
            for (int xx = 0; xx < size; ++xx) {
              X(py * size + px, d * area + y * size + xx) =
                  x.at(d, (y + py) % size, (xx + px) % size) / area;
            }
          }
        }
      }
    }
    Eigen::VectorXd g2(unknowns);
    for (int d = 0; d < channels; ++d) {
      for (int i = 0; i < area; ++i) g2(d * area + i) = std::pow(gamma.values()[static_cast<std::size_t>(i)], 2);
    }
    Eigen::VectorXd r(area);
    for (int i = 0; i < area; ++i) r(i) = rho.values()[static_cast<std::size_t>(i)];
    Eigen::MatrixXd normal = C * X.transpose() * X;
    normal.diagonal() += g2;
    const Eigen::VectorXd ref = normal.ldlt().solve(C * X.transpose() * r);

    const Regularizer reg(gamma, 0.0);
    SolverConfig cfg;
    cfg.C = C * (1.0 + opt.perturb);
    // One step per real unknown: the finite-termination bound of CG.
    cfg.cg_iterations = area * channels;
    cfg.tolerance = 1e-15;
    const std::vector<SpectralMap> feats{dft2(x)};
    const StructuralFilter warm = StructuralFilter::zeros(feats);
    const StructuralFilter w = solve_filters_cg(feats, {dft2(rho)}, reg, cfg, warm);
    const SpatialMap ws = idft2(w.layers[0]);
    double err = 0.0;
    for (int d = 0; d < channels; ++d) {
      for (int i = 0; i < area; ++i) {
        err = std::max(err, std::abs(ws.channel(d)[static_cast<std::size_t>(i)] * area - ref(d * area + i)));
      }
    }
    worst = std::max(worst, rel(err, ref.cwiseAbs().maxCoeff()));
  }
  return finish("optimizer/dense-solve", worst, 1e-6, start);
}

SuiteResult closed_form_suite(const Options& opt, int instances, int size, int channels) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed + 4);
  const double C = 50.0;
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    const std::vector<SpectralMap> feats{dft2(random_map(rng, size, size, channels))};
    const std::vector<SpectralMap> labels{dft2(random_map(rng, size, size, 1))};
    SolverConfig cfg;
    cfg.C = C * (1.0 + opt.perturb);
    cfg.cg_iterations = 400;
    cfg.tolerance = 1e-15;
    const StructuralFilter cg =
        solve_filters_cg(feats, labels, constant_regularizer({size, size}, 1.0), cfg, StructuralFilter::zeros(feats));
    const StructuralFilter closed = solve_filters_closed(feats, labels, C);
    double err = 0.0;
    const auto a = cg.layers[0].values();
    const auto b = closed.layers[0].values();
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    worst = std::max(worst, rel(err, closed.layers[0].max_abs()));
  }
  return finish("optimizer/closed-form", worst, 1e-5, start);
}

SuiteResult fusion_suite(const Options& opt, int instances, int layers, int size) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed + 5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> spread(0.01, 0.5);
  double worst = -std::numeric_limits<double>::infinity();
  double impl_err = 0.0;
  for (int it = 0; it < instances; ++it) {
    std::vector<SpatialMap> maps;
    for (int l = 0; l < layers; ++l) maps.push_back(normalize_map(random_map(rng, size, size, 1)));
    const std::vector<SpatialMap> weighted = pairwise_filter(maps);
    const ConfidenceMap fused = fuse(weighted, layers);
    const auto raw = fused.grid.values();
    std::vector<double> r(raw.begin(), raw.end());
    double total = 0.0;
    for (double& v : r) total += (v = std::pow(v, 1.0 + opt.perturb));
    for (double& v : r) v /= total;
    const double f0 = kl(weighted, r);
    SpatialMap candidate(size, size, 1, r);
    impl_err = std::max(impl_err, std::abs(kl_objective(weighted, candidate) - f0) / std::max(1.0, std::abs(f0)));

    for (int trial = 0; trial < 1000; ++trial) {
      const double s = spread(rng);
      std::vector<double> q(r.size());
      double z = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) z += (q[i] = r[i] * std::exp(s * n(rng)));
      for (double& v : q) v /= z;
      worst = std::max(worst, f0 - kl(weighted, q));
    }

    // Projected gradient from the fused map; d/dR of the objective is -sum_theta theta / R.
    std::vector<double> mass(r.size(), 0.0);
    for (const SpatialMap& m : weighted) {
      for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += m.values()[i];
    }
    std::vector<double> cur = r;
    double fcur = f0;
    double step = 1e-2 * *std::min_element(r.begin(), r.end());
    for (int k = 0; k < 100; ++k) {
      std::vector<double> next(cur.size());
      for (std::size_t i = 0; i < cur.size(); ++i) next[i] = cur[i] + step * mass[i] / cur[i];
      next = project_simplex(next, 1e-300);
      const double fn = kl(weighted, next);
      if (fn < fcur) {
        cur = std::move(next);
        fcur = fn;
      } else {
        step *= 0.5;
      }
    }
    worst = std::max(worst, f0 - fcur);
  }
  std::ostringstream detail;
  detail << "largest improvement over the fused map " << worst << ", kl_objective error " << impl_err;
  return finish("ensemble/kl-optimality", std::max(worst, impl_err > 1e-12 ? 1.0 : 0.0), 1e-9, start, detail.str());
}

SuiteResult primal_dual_suite(const Options& opt) {
  const auto start = Clock::now();
  SynthSpec spec;
  spec.frames = 2;
  const SynthSequence seq = synth_sequence(spec, opt.seed);
  const std::vector<FeatureLayerSpec> layers{gray_layer(2), hog_layer(4), colornames_layer(4)};
  const int side = 200;
  const int t = side / 2;
  const double region = 5.0 * std::sqrt(spec.initial.w * spec.initial.h);
  ExtractionContext ctx;
  ctx.colornames = std::make_shared<const ColorNamesTable>(ColorNamesTable::prototype());
  auto features = [&](const Image& frame) {
    const FeatureStack stack = extract_stack(crop_region(frame, spec.initial.center(), region, side), layers, ctx);
    std::vector<SpectralMap> out;
    for (SpatialMap layer : stack.layers) {
      apply_hann_window(layer);
      out.push_back(interpolate(layer, spline_kernel(layer.height()), {t, t}));
    }
    return out;
  };
  const auto train = features(seq.frames[0]);
  const auto test = features(seq.frames[1]);
  const SpectralMap labels = gaussian_label_spectrum(LabelSpec{}, {t, t});
  const double C = 20000.0;
  const KernelSpec linear{KernelSpec::Kind::Linear, 0.2};
  double worst = 0.0;
  for (std::size_t l = 0; l < train.size(); ++l) {
    const SpatialMap primal = score_layer(solve_layer_closed(train[l], labels, C), test[l]);
    const SpectralMap alpha = solve_dual(kernel_autocorrelation(train[l], linear), labels, C * (1.0 + opt.perturb));
    const ConfidenceMap dual = score_dual(kernel_correlation(train[l], test[l], linear), alpha);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < primal.values().size(); ++i) {
      err = std::max(err, std::abs(primal.values()[i] - dual.grid.values()[i]));
      scale = std::max(scale, std::abs(primal.values()[i]));
    }
    worst = std::max(worst, rel(err, scale));
  }
  return finish("optimizer/primal-dual", worst, 1e-5, start);
}

SuiteResult metrics_suite(const Options& opt, int trajectories, int length) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opt.seed + 6);
  std::uniform_real_distribution<double> pos(0.0, 300.0);
  std::uniform_real_distribution<double> dim(10.0, 80.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  double worst = 0.0;
  double iou_err = 0.0;
  for (int it = 0; it < trajectories; ++it) {
    const double noise = 2.0 + 10.0 * (it % 5);
    Trajectory gt, traj;
    double mean = 0.0;
    for (int f = 0; f < length; ++f) {
      const Box g{pos(rng), pos(rng), dim(rng), dim(rng)};
      const Box b{g.x + noise * jitter(rng), g.y + noise * jitter(rng), std::max(1.0, g.w + noise * jitter(rng)),
                  std::max(1.0, g.h + noise * jitter(rng))};
      gt.push_back(g);
      traj.push_back(b);
      const double o = own_iou(b, g);
      mean += o;
      iou_err = std::max(iou_err, std::abs(o - iou(b, g)));
    }
    mean /= length;
    const double auc = success_auc(traj, gt).auc * (1.0 + opt.perturb);
    worst = std::max(worst, std::abs(auc - mean));
  }
  std::ostringstream detail;
  detail << "iou error " << iou_err;
  return finish("bench/auc-identity", std::max(worst, iou_err > 1e-12 ? 1.0 : 0.0), 0.01, start, detail.str());
}

std::vector<SuiteResult> run_all(const Options& opt) {
  return {correlation_suite(opt), interpolation_suite(opt), slack_suite(opt),   dense_solver_suite(opt),
          closed_form_suite(opt), fusion_suite(opt),        primal_dual_suite(opt), metrics_suite(opt)};
}

}  // namespace csot::selftest
