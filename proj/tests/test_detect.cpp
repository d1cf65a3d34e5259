#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "beamsense/detect.hpp"

using namespace beamsense;

namespace {

constexpr double kPi = std::numbers::pi;

BeamState reference_beam(int n_max = kDefaultNmax) { return make_coherent_beam(1e-3, 1e-6, 100e-6, 100e3, n_max); }

double d_qnl(const BeamState& s) { return qnl_displacement(s.field.geom.waist_m, s.field.photons); }
double p_qnl(const BeamState& s) { return qnl_momentum(s.field.geom.waist_m, s.field.photons); }

}  // namespace

TEST(Qnl, WorkedExample) {
  const auto s = reference_beam();
  EXPECT_NEAR(d_qnl(s) / 0.2e-9, 1.0, 0.15);
  EXPECT_NEAR(p_qnl(s) / 4e-2, 1.0, 0.15);
  EXPECT_NEAR(momentum_to_tilt(p_qnl(s), 1e-6) / 7e-9, 1.0, 0.15);
  EXPECT_NEAR(d_qnl(s), 100e-6 / (2.0 * std::sqrt(s.field.photons)), 1e-25);
}

TEST(Qnl, SubQnlBeamExample) {
  const auto s = make_coherent_beam(170e-6, 1064e-9, 106e-6, 100e3);
  EXPECT_NEAR(d_qnl(s) / 0.6e-9, 1.0, 0.1);
}

TEST(Qnl, UndefinedForZeroPhotons) {
  EXPECT_THROW(qnl_displacement(1e-4, 0.0), UndefinedLimitError);
  EXPECT_THROW(qnl_momentum(1e-4, 0.0), UndefinedLimitError);
}

TEST(SubQnl, Examples) {
  EXPECT_NEAR(sub_qnl_displacement(1.0, 3.0), 1.0 / std::numbers::sqrt2, 0.002);
  EXPECT_EQ(sub_qnl_displacement(0.6e-9, 0.0), 0.6e-9);
  EXPECT_NEAR(sub_qnl_displacement(0.6e-9, 2.0), 0.477e-9, 5e-13);
  EXPECT_THROW(sub_qnl_displacement(1.0, -1.0), UsageError);
}

TEST(SubQnl, DisplacementFromTraceExcess) {
  const double floor = db_to_variance(2.0);
  // 0.08 shot-noise units on top of a 2 dB squeezed floor reads ~0.5 dB above it.
  const double excess = 10.0 * std::log10((0.08 + floor) / floor);
  EXPECT_NEAR(excess, 0.5, 0.05);
  EXPECT_NEAR(displacement_from_excess_db(excess, floor, 1.0), std::sqrt(0.08), 1e-12);
  EXPECT_THROW(displacement_from_excess_db(0.0, floor, 1.0), UsageError);
}

TEST(Homodyne, QnlCancellation) {
  auto s = reference_beam();
  const auto d = homodyne_detect(apply_modulation(s, {d_qnl(s), 0.0, 0.0}), tem_shape(1), 0.0);
  EXPECT_NEAR(d.snr, 1.0, 1e-12);
  const auto p = homodyne_detect(apply_modulation(s, {0.0, p_qnl(s), 0.0}), tem_shape(1), kPi / 2);
  EXPECT_NEAR(p.snr, 1.0, 1e-12);
  EXPECT_NEAR(d.snr * d.noise_rel, d.signal_rel, 1e-12);
}

TEST(Homodyne, SqueezedNoiseFloor) {
  auto s = reference_beam();
  s.noise = inject_squeezed_mode(s.noise, tem_shape(1), 2.0, 8.0);
  EXPECT_NEAR(homodyne_detect(s, tem_shape(1), 0.0).noise_rel, 0.631, 5e-4);
  EXPECT_NEAR(homodyne_detect(s, tem_shape(1), kPi / 2).noise_rel, 6.31, 5e-3);
  for (double phi : {0.0, 0.3, 1.2, 2.9}) {
    const double expect = std::pow(10.0, -0.2) * std::pow(std::cos(phi), 2) + std::pow(10.0, 0.8) * std::pow(std::sin(phi), 2);
    EXPECT_NEAR(homodyne_detect(s, tem_shape(1), phi).noise_rel, expect, 1e-12);
  }
}

TEST(Homodyne, Errors) {
  ModeShape lo = tem_shape(1);
  lo.hg[1] = 0.5;
  EXPECT_THROW(homodyne_detect(reference_beam(), lo, 0.0), UsageError);
  EXPECT_THROW(homodyne_detect(reference_beam(), tem_shape(1, 5), 0.0), UsageError);
}

TEST(Homodyne, PeriodicityPi) {
  auto s = apply_modulation(reference_beam(), {1e-6, 300.0, 0.0});
  s.noise = inject_squeezed_mode(s.noise, tem_shape(1), 2.0, 8.0, 0.3);
  for (double phi = -3.0; phi < 3.0; phi += 0.37) {
    const auto a = homodyne_detect(s, tem_shape(1), phi);
    const auto b = homodyne_detect(s, tem_shape(1), phi + kPi);
    EXPECT_NEAR(a.signal_rel, b.signal_rel, 1e-9 * a.signal_rel);
    EXPECT_NEAR(a.signal_rel + a.noise_rel, b.signal_rel + b.noise_rel, 1e-9 * (a.signal_rel + a.noise_rel));
  }
}

TEST(Homodyne, QuadratureExchange) {
  const auto s = reference_beam();
  const double w0 = s.field.geom.waist_m;
  const double amp = 0.003;  // same modulation power in both beams
  const auto disp = apply_modulation(s, {amp * w0, 0.0, 0.0});
  const auto tilt = apply_modulation(s, {0.0, 2.0 * amp / w0, 0.0});
  EXPECT_NEAR(homodyne_detect(disp, tem_shape(1), 0.0).signal_rel,
              homodyne_detect(tilt, tem_shape(1), kPi / 2).signal_rel, 1e-6);
  EXPECT_NEAR(homodyne_detect(disp, tem_shape(1), kPi / 2).signal_rel, 0.0, 1e-9);
}

TEST(Homodyne, TradeOffBetweenConjugateQuadratures) {
  auto base = apply_modulation(reference_beam(), {d_qnl(reference_beam()), 0.0, 0.0});
  double prev_snr = 0.0, prev_noise = 0.0;
  for (double db = 0.0; db <= 10.0; db += 1.0) {
    auto s = base;
    s.noise = inject_squeezed_mode(s.noise, tem_shape(1), db, db);
    const double snr = homodyne_detect(s, tem_shape(1), 0.0).snr;
    const double anti = homodyne_detect(s, tem_shape(1), kPi / 2).noise_rel;
    if (db > 0.0) {
      EXPECT_GT(snr, prev_snr);
      EXPECT_GT(anti, prev_noise);
    }
    prev_snr = snr;
    prev_noise = anti;
  }
}

TEST(Split, IdealQnlEfficiency) {
  const auto s = reference_beam();
  const auto m = split_detect(apply_modulation(s, {d_qnl(s), 0.0, 0.0}), 0.0);
  EXPECT_NEAR(m.snr, 2.0 / kPi, 1e-12);
  EXPECT_NEAR(m.noise_rel, 1.0, 1e-12);
  EXPECT_FALSE(m.apertured);
}

TEST(Split, NoModulationIsShotNoise) {
  for (double z : {0.0, 0.01, 1.0}) {
    const auto m = split_detect(reference_beam(), z);
    EXPECT_EQ(m.signal_rel, 0.0);
    EXPECT_NEAR(m.noise_rel, 1.0, 1e-12);
  }
}

TEST(Split, CoherentNoiseIsOneForAnyGeometry) {
  const auto s = reference_beam();
  for (double gap : {0.0, 10e-6, 60e-6}) {
    for (double hw : {80e-6, 250e-6, std::numeric_limits<double>::infinity()}) {
      const auto m = split_detect(s, 0.02, {gap, hw});
      EXPECT_NEAR(m.noise_rel, 1.0, 1e-12) << gap << " " << hw;
    }
  }
}

TEST(Split, SignalFollowsPropagation) {
  const auto s = reference_beam();
  const double w0 = s.field.geom.waist_m, zr = s.field.geom.rayleigh_m();
  const double a = 0.004, b = 0.002;
  const auto mod = apply_modulation(s, {a * w0, 2.0 * b / w0, 0.0});
  for (double z : {-2.0 * zr, 0.0, 0.3 * zr, zr, 10.0 * zr}) {
    const double phi = gouy_phase(z, s.field.geom);
    const double expect = 4.0 * s.field.photons * (2.0 / kPi) * std::pow(a * std::cos(phi) + b * std::sin(phi), 2);
    EXPECT_NEAR(split_detect(mod, z).signal_rel / expect, 1.0, 1e-10) << z;
  }
}

TEST(Split, FiniteGeometrySignalUsesActualC1) {
  const auto s = reference_beam();
  const double gap = 30e-6, hw = 150e-6;
  const auto mod = apply_modulation(s, {d_qnl(s), 0.0, 0.0});
  const auto m = split_detect(mod, 0.0, {gap, hw});
  const double c1 = split_overlap_coeffs(1, s.field.geom, gap, hw)[1];
  const double eta = detected_fraction(s.field.geom, gap, hw);
  EXPECT_NEAR(m.signal_rel, c1 * c1 / eta, 1e-9);
  // A central gap discards light that carries little signal; Cauchy-Schwarz still caps SNR at the homodyne value.
  EXPECT_GT(m.snr, 2.0 / kPi);
  EXPECT_LT(m.snr, 1.0);
}

TEST(Split, ApertureFlag) {
  const auto s = reference_beam();
  EXPECT_TRUE(split_detect(s, 0.0, {0.0, 30e-6}).apertured);
  EXPECT_FALSE(split_detect(s, 0.0, {0.0, 300e-6}).apertured);
  EXPECT_THROW(split_detect(s, 0.0, {0.0, 0.0}), GeometryError);
}

TEST(Split, SqueezedFlippedModeSetsNoiseAtWaist) {
  auto s = reference_beam();
  for (double db : {1.0, 3.6, 8.0}) {
    auto sq = s;
    sq.noise = inject_squeezed_mode(s.noise, flipped_shape(), db, db + 4.0);
    EXPECT_NEAR(split_detect(sq, 0.0).noise_rel, db_to_variance(db), 1e-12);
  }
  auto sq = s;
  sq.noise = inject_squeezed_mode(s.noise, flipped_shape(), 3.6, 3.6);
  const double zr = s.field.geom.rayleigh_m();
  double prev = db_to_variance(3.6);
  for (double z : {0.02 * zr, 0.1 * zr, 0.5 * zr}) {
    const double n = split_detect(sq, z).noise_rel;
    EXPECT_GT(n, prev);
    prev = n;
  }
}

TEST(Split, NoiseMatchesClosedFormUnderPropagation) {
  // Flipped-mode squeezing seen through a Gouy rotation phi: with
  // g = (2/pi) asin(e^{i phi}) the detected variance is
  // 1 + (Vs - 1) Re(g)^2 + (Va - 1) Im(g)^2.
  auto s = reference_beam();
  const double vs = db_to_variance(3.0), va = std::pow(10.0, 0.6);
  s.noise = inject_squeezed_mode(s.noise, flipped_shape(), 3.0, 6.0);
  for (double z : {0.001, 0.01, 0.05, 0.3}) {
    const auto g = flipped_self_overlap(gouy_phase(z, s.field.geom));
    const double expect = 1.0 + (vs - 1.0) * g.real() * g.real() + (va - 1.0) * g.imag() * g.imag();
    EXPECT_NEAR(split_detect(s, z).noise_rel, expect, 1e-12) << z;
  }
}

TEST(Split, HomodyneEquivalence) {
  const auto s = reference_beam();
  const auto mod = apply_modulation(s, {0.3 * d_qnl(s), 2.0 * p_qnl(s), 0.0});
  const double zr = s.field.geom.rayleigh_m();
  for (double z : {-3.0 * zr, -0.2 * zr, 0.0, 0.7 * zr, 20.0 * zr}) {
    const auto sd = split_detect(mod, z);
    const auto hd = homodyne_detect(mod, tem_shape(1), gouy_phase(z, s.field.geom));
    EXPECT_NEAR(efficiency_ratio(sd, hd), 2.0 / kPi, 1e-9);
  }
}

TEST(Split, ElectronicFloorAdds) {
  DetectorOptions opts;
  opts.electronic_floor_db = 10.0;
  EXPECT_NEAR(split_detect(reference_beam(), 0.0, {}, opts).noise_rel, 1.1, 1e-12);
  EXPECT_NEAR(homodyne_detect(reference_beam(), tem_shape(1), 0.0, opts).noise_rel, 1.1, 1e-12);
}

TEST(Efficiency, Examples) {
  const auto s = reference_beam();
  const auto mod = apply_modulation(s, {d_qnl(s), 0.0, 0.0});
  const double r = efficiency_ratio(split_detect(mod, 0.0), homodyne_detect(mod, tem_shape(1), 0.0));
  EXPECT_NEAR(r, 2.0 / kPi, 1e-9);
  EXPECT_NEAR(r, theoretical_efficiency_ratio(s.field.photons, s.field.photons), 1e-12);
  EXPECT_NEAR(theoretical_efficiency_ratio(2.0, 1.0), 4.0 / kPi, 1e-15);

  const auto twice = make_coherent_beam(2e-3, 1e-6, 100e-6, 100e3);
  const auto twice_mod = apply_modulation(twice, {d_qnl(s), 0.0, 0.0});
  EXPECT_NEAR(efficiency_ratio(split_detect(twice_mod, 0.0), homodyne_detect(mod, tem_shape(1), 0.0)),
              4.0 / kPi, 1e-9);
  EXPECT_THROW(efficiency_ratio(split_detect(mod, 0.0), homodyne_detect(s, tem_shape(1), 0.0)),
               UndefinedLimitError);
}

TEST(Efficiency, ExperimentalReconstruction) {
  EXPECT_NEAR(experimental_ratio_from_traces(4.2e-3, 170e-6, 23.0, 11.3), 0.643, 0.001);
  EXPECT_DOUBLE_EQ(experimental_ratio_from_traces(1e-3, 1e-3, 12.0, 12.0), 1.0);
  EXPECT_NEAR(experimental_ratio_from_traces(kPi / 2, 1.0, 23.0, 23.0), 2.0 / kPi, 1e-15);
  EXPECT_THROW(experimental_ratio_from_traces(1e-3, 1e-3, 0.0, 3.0), UsageError);
  EXPECT_THROW(experimental_ratio_from_traces(1e-3, 1e-3, 3.0, -1.0), UsageError);
}

TEST(Measurement, InvariantAndPositivity) {
  const auto m = make_measurement(3.0, 0.7, {});
  EXPECT_NEAR(m.snr * m.noise_rel, m.signal_rel, 1e-12);
  EXPECT_THROW(make_measurement(1.0, 0.0, {}), NumericError);
}
