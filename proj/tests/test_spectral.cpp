#include <gtest/gtest.h>

#include <numbers>

#include "csot/error.hpp"
#include "csot/spectral.hpp"
#include "helpers.hpp"

using namespace csot;
using csot::test::max_abs_diff;
using csot::test::random_map;

namespace {

constexpr double kPi = std::numbers::pi;

Complex direct_dft(const SpatialMap& m, int c, int ky, int kx, double sign) {
  Complex sum{};
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      sum += m.at(c, y, x) * std::polar(1.0, sign * 2.0 * kPi *
                                                 (static_cast<double>(ky * y) / m.height() +
                                                  static_cast<double>(kx * x) / m.width()));
    }
  }
  return sum;
}

}  // namespace

TEST(Dft2, ImpulseGivesAllOnes) {
  SpatialMap m(4, 4, 1);
  m.at(0, 0, 0) = 1.0;
  const SpectralMap s = dft2(m);
  for (const Complex& v : s.values()) EXPECT_NEAR(std::abs(v - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Dft2, ConstantIsDcOnly) {
  SpatialMap m(5, 5, 1);
  for (double& v : m.values()) v = 2.5;
  const SpectralMap s = dft2(m);
  EXPECT_NEAR(std::abs(s.at(0, 0, 0) - Complex(2.5 * 25, 0.0)), 0.0, 1e-12);
  for (std::size_t i = 1; i < s.values().size(); ++i) EXPECT_LT(std::abs(s.values()[i]), 1e-12);
}

TEST(Dft2, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  const SpatialMap m = random_map(rng, 8, 8, 2);
  const SpectralMap s = dft2(m);
  for (int c = 0; c < 2; ++c) {
    for (int ky = 0; ky < 8; ++ky) {
      for (int kx = 0; kx < 8; ++kx) {
        const Complex ref = direct_dft(m, c, ky, kx, -1.0);
        EXPECT_LT(std::abs(ref - s.channel(c)[ky * 8 + kx]), 1e-9 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST(Dft2, RejectsNonFinite) {
  SpatialMap m(4, 4, 1);
  m.at(0, 1, 1) = std::nan("");
  EXPECT_THROW(dft2(m), DomainError);
}

TEST(Idft2, RoundTrip) {
  std::mt19937_64 rng(4);
  for (int n : {8, 13, 64}) {
    const SpatialMap m = random_map(rng, n, n, 2);
    EXPECT_LT(max_abs_diff(idft2(dft2(m)), m), 1e-10);
  }
}

TEST(Idft2, AllOnesGivesImpulse) {
  SpectralMap s(4, 4, 1);
  for (Complex& v : s.values()) v = 1.0;
  const SpatialMap m = idft2(s);
  EXPECT_NEAR(m.at(0, 0, 0), 1.0, 1e-15);
  for (std::size_t i = 1; i < m.values().size(); ++i) EXPECT_NEAR(m.values()[i], 0.0, 1e-15);
}

TEST(Idft2, MatchesDirectInverse) {
  std::mt19937_64 rng(5);
  const SpectralMap s = dft2(random_map(rng, 6, 6, 1));
  const SpatialMap m = idft2(s);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      Complex sum{};
      for (int ky = 0; ky < 6; ++ky) {
        for (int kx = 0; kx < 6; ++kx) {
          sum += s.channel(0)[ky * 6 + kx] * std::polar(1.0, 2.0 * kPi * (ky * y + kx * x) / 6.0);
        }
      }
      EXPECT_NEAR(sum.real() / 36.0, m.at(0, y, x), 1e-9);
    }
  }
}

TEST(Idft2, RejectsAsymmetricRealOriginSpectrum) {
  SpectralMap s(4, 4, 1, true);
  s.at(0, 0, 1) = Complex(1.0, 0.0);
  EXPECT_THROW(idft2(s), DomainError);
}

TEST(Parseval, InnerProducts) {
  std::mt19937_64 rng(6);
  const SpatialMap a = random_map(rng, 9, 7, 1);
  const SpatialMap b = random_map(rng, 9, 7, 1);
  double spatial = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) spatial += a.values()[i] * b.values()[i];
  const SpectralMap fa = dft2(a), fb = dft2(b);
  Complex spectral{};
  for (std::size_t i = 0; i < fa.values().size(); ++i) spectral += std::conj(fa.values()[i]) * fb.values()[i];
  EXPECT_NEAR(spatial, spectral.real() / 63.0, 1e-9);
}

TEST(SplineKernel, DcAndNyquist) {
  const InterpolationKernel k = spline_kernel(8);
  EXPECT_NEAR(std::abs(k.at(0) - Complex(1.0 / 8, 0.0)), 0.0, 1e-15);
  // exp(-i pi 4/8) = -i
  EXPECT_NEAR(std::arg(k.at(4)), -kPi / 2, 1e-12);
  EXPECT_THROW(spline_kernel(1), DomainError);
}

TEST(SplineKernel, MagnitudeDecays) {
  const InterpolationKernel k = spline_kernel(16);
  for (int i = 1; i <= 8; ++i) EXPECT_LE(std::abs(k.at(i)), std::abs(k.at(i - 1)));
}

TEST(Interpolate, ZeroMapGivesZeroSpectrum) {
  const SpectralMap s = interpolate(SpatialMap(6, 6, 2), spline_kernel(6), {12, 12});
  for (const Complex& v : s.values()) EXPECT_EQ(v, Complex{});
}

TEST(Interpolate, IdentityKernelEqualsDft) {
  std::mt19937_64 rng(7);
  for (int n : {6, 7}) {
    const SpatialMap m = random_map(rng, n, n, 2);
    EXPECT_LT(max_abs_diff(interpolate(m, identity_kernel(n), {n, n}), dft2(m)), 1e-12);
  }
}

TEST(Interpolate, RejectsShrinking) {
  EXPECT_THROW(interpolate(SpatialMap(8, 8, 1), spline_kernel(8), {6, 6}), Error);
}

TEST(PadSpectrum, IdentityAndParseval) {
  std::mt19937_64 rng(8);
  const SpatialMap m = random_map(rng, 4, 4, 1);
  const SpectralMap s = dft2(m);
  EXPECT_LT(max_abs_diff(pad_spectrum(s, {4, 4}), s), 1e-15);

  // Same Fourier-series coefficients on a finer grid: mean square is preserved
  // (odd size, so no Nyquist line gets split).
  const SpatialMap m5 = random_map(rng, 5, 5, 1);
  SpectralMap fs = dft2(m5);
  for (Complex& v : fs.values()) v /= 25.0;
  SpectralMap padded = pad_spectrum(fs, {9, 9});
  for (Complex& v : padded.values()) v *= 81.0;
  const SpatialMap up = idft2(padded);
  double e5 = 0.0, e9 = 0.0;
  for (double v : m5.values()) e5 += v * v;
  for (double v : up.values()) e9 += v * v;
  EXPECT_NEAR(e5 / 25.0, e9 / 81.0, 1e-9);
  EXPECT_TRUE(padded.real_origin());
  EXPECT_THROW(pad_spectrum(s, {2, 2}), Error);
}

TEST(PadSpectrum, RetainedCoefficientsUnchanged) {
  std::mt19937_64 rng(9);
  const SpectralMap s = dft2(random_map(rng, 5, 5, 1));
  const SpectralMap p = pad_spectrum(s, {9, 9});
  for (int ky = -2; ky <= 2; ++ky) {
    for (int kx = -2; kx <= 2; ++kx) EXPECT_EQ(p.at(0, ky, kx), s.at(0, ky, kx));
  }
}

TEST(PadSpectrum, ImpulsePeaksAtOrigin) {
  SpectralMap s(4, 4, 1);
  for (Complex& v : s.values()) v = 1.0;
  const SpatialMap m = idft2(pad_spectrum(s, {16, 16}));
  const auto it = std::max_element(m.values().begin(), m.values().end());
  EXPECT_EQ(it - m.values().begin(), 0);
}

TEST(CircularCorrelate, AutocorrelationPeak) {
  std::mt19937_64 rng(10);
  const SpatialMap m = random_map(rng, 8, 8, 1);
  const SpectralMap s = dft2(m);
  const SpatialMap c = idft2(circular_correlate(s, s));
  double norm = 0.0;
  for (double v : m.values()) norm += v * v;
  EXPECT_NEAR(c.at(0, 0, 0), norm, 1e-10 * norm);
  for (double v : c.values()) EXPECT_LE(v, c.at(0, 0, 0) + 1e-9);
}

TEST(CircularCorrelate, ZeroFilterAndShapeMismatch) {
  std::mt19937_64 rng(11);
  const SpectralMap x = dft2(random_map(rng, 8, 8, 3));
  const SpectralMap r = circular_correlate(SpectralMap(8, 8, 3), x);
  for (const Complex& v : r.values()) EXPECT_EQ(v, Complex{});
  EXPECT_THROW(circular_correlate(SpectralMap(8, 8, 2), x), ShapeError);
}

TEST(CircularCorrelate, Linear) {
  std::mt19937_64 rng(12);
  const SpectralMap f = dft2(random_map(rng, 8, 8, 2));
  const SpectralMap g = dft2(random_map(rng, 8, 8, 2));
  const SpectralMap x = dft2(random_map(rng, 8, 8, 2));
  SpectralMap combo = f;
  for (std::size_t i = 0; i < combo.values().size(); ++i) combo.values()[i] = 2.5 * f.values()[i] + g.values()[i];
  const SpectralMap lhs = circular_correlate(combo, x);
  const SpectralMap a = circular_correlate(f, x), b = circular_correlate(g, x);
  for (std::size_t i = 0; i < lhs.values().size(); ++i) {
    EXPECT_LT(std::abs(lhs.values()[i] - (2.5 * a.values()[i] + b.values()[i])), 1e-10 * std::max(1.0, std::abs(lhs.values()[i])));
  }
}

TEST(HermitianPart, ProjectsAndFlags) {
  SpectralMap s(4, 4, 1, false);
  s.at(0, 0, 1) = Complex(1.0, 2.0);
  const SpectralMap h = hermitian_part(s);
  EXPECT_TRUE(h.real_origin());
  EXPECT_LT(h.hermitian_defect(), 1e-15);
  EXPECT_NEAR(std::abs(h.at(0, 0, -1) - Complex(0.5, -1.0)), 0.0, 1e-15);
}
