#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "beamsense/beam.hpp"
#include "beamsense/detect.hpp"

using namespace beamsense;

namespace {

constexpr double kH = 6.62607015e-34;
constexpr double kC = 299792458.0;

BeamState reference_beam(int n_max = kDefaultNmax) { return make_coherent_beam(1e-3, 1e-6, 100e-6, 100e3, n_max); }

ModeShape orthogonal_to_flipped(int n_max) {
  // c3 u1 - c1 u3, normalized: odd, but orthogonal to the flipped mode.
  const auto c = flipped_mode_coeffs(n_max);
  ModeShape s{std::vector<double>(n_max + 1, 0.0), 0.0};
  const double norm = std::hypot(c[1], c[3]);
  s.hg[1] = c[3] / norm;
  s.hg[3] = -c[1] / norm;
  return s;
}

}  // namespace

TEST(CoherentBeam, PhotonNumberExamples) {
  const auto s = reference_beam();
  EXPECT_NEAR(s.field.photons, 1e-3 * 1e-5 * 1e-6 / (kH * kC), 1e-3);
  EXPECT_NEAR(s.field.photons / 5.03e10, 1.0, 0.002);
  EXPECT_TRUE(s.noise.matrix.isIdentity(0.0));
  EXPECT_EQ(s.field.coeffs[0], std::complex<double>(1.0, 0.0));

  const auto weak = make_coherent_beam(170e-6, 1064e-9, 106e-6, 100e3);
  EXPECT_NEAR(weak.field.photons / 9.1e9, 1.0, 0.005);
}

TEST(CoherentBeam, ZeroPower) {
  const auto s = make_coherent_beam(0.0, 1e-6, 100e-6, 100e3);
  EXPECT_EQ(s.field.photons, 0.0);
  EXPECT_TRUE(s.noise.matrix.isIdentity(0.0));
  EXPECT_EQ(s.noise.matrix.rows(), 2 * (kDefaultNmax + 2));
}

TEST(CoherentBeam, InvalidArguments) {
  EXPECT_THROW(make_coherent_beam(-1.0, 1e-6, 1e-4, 1e5), UsageError);
  EXPECT_THROW(make_coherent_beam(1e-3, 1e-6, 1e-4, 0.0), UsageError);
  EXPECT_THROW(make_coherent_beam(1e-3, 0.0, 1e-4, 1e5), GeometryError);
}

TEST(TiltMomentum, Examples) {
  EXPECT_EQ(tilt_to_momentum(0.0, 1e-6), 0.0);
  EXPECT_NEAR(tilt_to_momentum(7e-9, 1e-6), 4.4e-2, 0.001);
  for (double p : {1e-3, 0.0446, 12.0, -300.0})
    EXPECT_NEAR(tilt_to_momentum(momentum_to_tilt(p, 1064e-9), 1064e-9), p, 1e-12 * std::abs(p));
  EXPECT_THROW(momentum_to_tilt(1e7, 1e-6), UsageError);
}

TEST(Modulation, Examples) {
  const auto s = reference_beam();
  const double w0 = s.field.geom.waist_m;
  const auto d = apply_modulation(s.field, {w0 / 100, 0.0, 4e6});
  EXPECT_NEAR(d.coeffs[1].real(), 0.01, 1e-15);
  EXPECT_EQ(d.coeffs[1].imag(), 0.0);
  const auto p = apply_modulation(s.field, {0.0, 2.0 / (100 * w0), 4e6});
  EXPECT_EQ(p.coeffs[1].real(), 0.0);
  EXPECT_NEAR(p.coeffs[1].imag(), 0.01, 1e-15);
  for (int n = 0; n <= s.n_max(); ++n) {
    if (n != 1) {
      EXPECT_EQ(d.coeffs[n], s.field.coeffs[n]);
    }
  }
}

TEST(Modulation, SmallSignalWindow) {
  const auto s = reference_beam();
  try {
    apply_modulation(s.field, {s.field.geom.waist_m / 5, 0.0, 0.0});
    FAIL() << "expected ValidityError";
  } catch (const ValidityError& e) {
    EXPECT_NEAR(e.ratio(), 0.2, 1e-12);
  }
  EXPECT_THROW(apply_modulation(s.field, {0.0, 0.25 / s.field.geom.waist_m, 0.0}), ValidityError);
}

TEST(Modulation, TiltPhaseMovesTiltToTemporalQuadrature) {
  const auto s = reference_beam();
  const double w0 = s.field.geom.waist_m;
  const auto f = apply_modulation(s.field, {w0 / 200, 0.1 / w0, 4e6, std::numbers::pi / 2});
  EXPECT_NEAR(f.coeffs[1].real(), 0.005, 1e-15);
  EXPECT_NEAR(f.coeffs[1].imag(), 0.0, 1e-15);
  EXPECT_NEAR(f.coeffs_quadrature[1].imag(), -0.05, 1e-15);
}

TEST(Squeezing, ZeroDbIsIdentity) {
  const auto cov = NoiseCovariance::vacuum(kDefaultNmax);
  const auto out = inject_squeezed_mode(cov, flipped_shape(), 0.0, 0.0);
  EXPECT_LT((out.matrix - cov.matrix).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Squeezing, Tem10TwoEightDb) {
  const auto out = inject_squeezed_mode(NoiseCovariance::vacuum(kDefaultNmax), tem_shape(1), 2.0, 8.0);
  EXPECT_NEAR(out.matrix(2, 2), 0.631, 5e-4);
  EXPECT_NEAR(out.matrix(3, 3), 6.31, 5e-3);
  EXPECT_NEAR(out.matrix(2, 2), std::pow(10.0, -0.2), 1e-15);
  EXPECT_NEAR(out.matrix(3, 3), std::pow(10.0, 0.8), 1e-14);
}

TEST(Squeezing, FlippedRankOneMatchesScalarTransfer) {
  for (int n_max : {1, 5, 41, 101}) {
    for (double db : {0.5, 3.6, 10.0}) {
      const auto out = inject_squeezed_mode(NoiseCovariance::vacuum(n_max), flipped_shape(n_max), db, db);
      const double vf = db_to_variance(db);
      EXPECT_NEAR(out.matrix(2, 2), squeeze_transfer_flipped_to_tem10(vf), 1e-9);
    }
  }
  const auto out = inject_squeezed_mode(NoiseCovariance::vacuum(kDefaultNmax), flipped_shape(), 3.6, 3.6);
  EXPECT_NEAR(out.matrix(2, 2), 0.641, 5e-4);
}

TEST(Squeezing, ProjectionReturnsInjectedVariances) {
  const double angle = 0.37;
  const auto shape = flipped_shape();
  const auto out = inject_squeezed_mode(NoiseCovariance::vacuum(kDefaultNmax), shape, 2.0, 8.0, angle);
  EXPECT_NEAR(quadrature_variance(out, shape, angle), db_to_variance(2.0), 1e-12);
  EXPECT_NEAR(quadrature_variance(out, shape, angle + std::numbers::pi / 2), std::pow(10.0, 0.8), 1e-12);
  const auto ortho = orthogonal_to_flipped(kDefaultNmax);
  for (double th : {0.0, 0.4, 2.0}) EXPECT_NEAR(quadrature_variance(out, ortho, th), 1.0, 1e-12);
  EXPECT_NEAR(quadrature_variance(out, tem_shape(2), 0.3), 1.0, 1e-15);
}

TEST(Squeezing, Errors) {
  const auto cov = NoiseCovariance::vacuum(5);
  ModeShape bad = tem_shape(1, 5);
  bad.hg[1] = 0.9;
  EXPECT_THROW(inject_squeezed_mode(cov, bad, 2.0, 8.0), UsageError);
  EXPECT_THROW(inject_squeezed_mode(cov, tem_shape(1, 5), -1.0, 8.0), UsageError);
  EXPECT_THROW(inject_squeezed_mode(cov, tem_shape(1, 5), 3.0, 2.0), UsageError);
  EXPECT_THROW(inject_squeezed_mode(cov, tem_shape(1, 7), 3.0, 3.0), UsageError);
}

TEST(SqueezeTransfer, Examples) {
  EXPECT_DOUBLE_EQ(squeeze_transfer_flipped_to_tem10(1.0), 1.0);
  const double v = squeeze_transfer_flipped_to_tem10(std::pow(10.0, -0.36));
  EXPECT_NEAR(v, 0.641, 5e-4);
  EXPECT_NEAR(variance_to_db(v), -1.93, 0.01);
  EXPECT_NEAR(squeeze_transfer_flipped_to_tem10(0.0), 1.0 - 2.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(squeeze_transfer_flipped_to_tem10(0.0), 0.3634, 1e-4);
  EXPECT_THROW(squeeze_transfer_flipped_to_tem10(-0.1), UsageError);
}

TEST(Combiner, Examples) {
  const auto bright = reference_beam();
  const auto coherent = NoiseCovariance::vacuum(kDefaultNmax);
  EXPECT_TRUE(combine_mach_zehnder(bright, coherent, 1.0).noise.matrix.isIdentity(1e-15));

  const auto squeezed = inject_squeezed_mode(coherent, flipped_shape(), 3.6, 3.6);
  const auto full = combine_mach_zehnder(bright, squeezed, 1.0);
  EXPECT_LT((full.noise.matrix - squeezed.matrix).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(quadrature_variance(full.noise, flipped_shape(), 0.0), db_to_variance(3.6), 1e-12);

  const auto lossy = combine_mach_zehnder(bright, squeezed, 0.97);
  const double vf = quadrature_variance(lossy.noise, flipped_shape(), 0.0);
  EXPECT_NEAR(db_to_variance(3.6), 0.4365, 1e-4);
  EXPECT_NEAR(vf, 0.97 * db_to_variance(3.6) + 0.03, 1e-12);
  EXPECT_NEAR(vf, 0.4534, 1e-4);
  EXPECT_EQ(lossy.field.coeffs, bright.field.coeffs);
}

TEST(Combiner, EvenNoiseOfBrightPortKept) {
  auto bright = reference_beam(5);
  bright.noise = inject_squeezed_mode(bright.noise, tem_shape(0, 5), 1.0, 1.0);
  const auto dim = inject_squeezed_mode(NoiseCovariance::vacuum(5), tem_shape(3, 5), 4.0, 4.0);
  const auto out = combine_mach_zehnder(bright, dim, 0.9);
  EXPECT_NEAR(out.noise.matrix(0, 0), db_to_variance(1.0), 1e-15);
  EXPECT_NEAR(out.noise.matrix(6, 6), 0.9 * db_to_variance(4.0) + 0.1, 1e-15);
  EXPECT_TRUE(is_psd(out.noise));
}

TEST(Combiner, Errors) {
  auto bright = reference_beam();
  const auto cov = NoiseCovariance::vacuum(kDefaultNmax);
  EXPECT_THROW(combine_mach_zehnder(bright, cov, 0.0), UsageError);
  EXPECT_THROW(combine_mach_zehnder(bright, cov, 1.1), UsageError);
  EXPECT_THROW(combine_mach_zehnder(bright, NoiseCovariance::vacuum(3), 1.0), UsageError);
  bright = apply_modulation(bright, {1e-6, 0.0, 0.0});
  EXPECT_THROW(combine_mach_zehnder(bright, cov, 1.0), UsageError);
}

TEST(Propagate, ZeroIsIdentity) {
  auto s = apply_modulation(reference_beam(), {1e-6, 30.0, 0.0});
  s.noise = inject_squeezed_mode(s.noise, flipped_shape(), 3.0, 5.0, 0.2);
  const auto out = propagate(s, 0.0);
  EXPECT_EQ(out.field.coeffs, s.field.coeffs);
  EXPECT_EQ(out.noise.matrix, s.noise.matrix);
}

TEST(Propagate, FarFieldExchangesDisplacementAndTilt) {
  const auto s = apply_modulation(reference_beam(), {1e-6, 0.0, 0.0});
  const auto far = propagate(s, 1e9);
  EXPECT_NEAR(far.field.coeffs[1].real(), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(far.field.coeffs[1].imag()), 0.01, 1e-12);
  // Homodyne at phi_LO = pi/2 in the far field sees the near-field displacement.
  const auto m = homodyne_detect(far, tem_shape(1), std::numbers::pi / 2);
  const auto ref = homodyne_detect(s, tem_shape(1), 0.0);
  EXPECT_NEAR(m.signal_rel / ref.signal_rel, 1.0, 1e-9);
}

TEST(Propagate, ComposesThroughGouyPhases) {
  auto s = apply_modulation(reference_beam(), {1e-6, 50.0, 0.0});
  s.noise = inject_squeezed_mode(s.noise, flipped_shape(), 3.0, 6.0, 0.1);
  const double zr = s.field.geom.rayleigh_m();
  for (double z1 : {-0.7 * zr, 0.2 * zr, 1.5 * zr}) {
    for (double z2 : {-2.0 * zr, 0.9 * zr, 4.0 * zr}) {
      const auto two_step = propagate(propagate(s, z1), z2);
      const auto direct = propagate(s, z2);
      for (int n = 0; n <= s.n_max(); ++n)
        EXPECT_LT(std::abs(two_step.field.coeffs[n] - direct.field.coeffs[n]), 1e-14);
      EXPECT_LT((two_step.noise.matrix - direct.noise.matrix).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Propagate, TraceAndPsdPreserved) {
  auto s = reference_beam();
  s.noise = inject_squeezed_mode(s.noise, flipped_shape(), 6.0, 9.0, 0.8);
  const double tr = s.noise.matrix.trace();
  for (double z : {-1.0, 0.01, 0.3, 7.0}) {
    const auto out = propagate(s, z);
    EXPECT_NEAR(out.noise.matrix.trace(), tr, 1e-10);
    EXPECT_TRUE(is_psd(out.noise));
  }
}

TEST(Invariants, HeisenbergSaturation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-9.0, -1.0);
  for (int i = 0; i < 200; ++i) {
    const double power = std::pow(10.0, u(rng) / 2.0);
    const double w0 = std::pow(10.0, u(rng) / 3.0 - 2.0);
    const auto s = make_coherent_beam(power, 1064e-9, w0, 1e5, 3);
    const double prod = qnl_displacement(w0, s.field.photons) * qnl_momentum(w0, s.field.photons);
    EXPECT_NEAR(prod * 2.0 * s.field.photons, 1.0, 1e-14);
  }
}

TEST(Invariants, PsdAfterEveryOperation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> db(0.0, 12.0), ang(-3.0, 3.0), z(-0.5, 0.5), eta(0.5, 1.0);
  for (int i = 0; i < 20; ++i) {
    auto s = reference_beam(9);
    const double sq = db(rng);
    s.noise = inject_squeezed_mode(s.noise, flipped_shape(9), sq, sq + db(rng), ang(rng));
    ASSERT_TRUE(is_psd(s.noise));
    s = propagate(s, z(rng));
    ASSERT_TRUE(is_psd(s.noise));
    s = combine_mach_zehnder(reference_beam(9), s.noise, eta(rng));
    ASSERT_TRUE(is_psd(s.noise));
    for (int m = 0; m < 11; ++m) EXPECT_GE(s.noise.block(m).determinant(), 1.0 - 1e-9);
  }
}

TEST(Squeezing, StateLevelResidualOnlyAtWaist) {
  const auto s = reference_beam(5);
  EXPECT_NO_THROW(inject_squeezed_mode(s, flipped_shape(5), 3.0, 3.0));
  const auto moved = propagate(s, 0.01);
  EXPECT_THROW(inject_squeezed_mode(moved, flipped_shape(5), 3.0, 3.0), UsageError);
  EXPECT_NO_THROW(inject_squeezed_mode(moved, tem_shape(1, 5), 3.0, 3.0));
}
