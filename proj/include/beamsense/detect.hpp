#pragma once

// Split and TEM10-homodyne detector models evaluated at the modulation
// frequency. Every power is relative to the detector's own shot noise.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamsense/beam.hpp"
#include "beamsense/errors.hpp"
#include "beamsense/modes.hpp"

namespace beamsense {

enum class SettingKind { kSplitZ, kHomodynePhase };

struct Setting {
  SettingKind kind = SettingKind::kSplitZ;
  double value = 0.0;  // z in m, or phi_LO in rad
};

struct Measurement {
  double signal_rel = 0.0;
  double noise_rel = 1.0;
  double snr = 0.0;
  Setting setting;
  bool apertured = false;  // beam clipped by the split detector

  double total_db() const { return 10.0 * std::log10(signal_rel + noise_rel); }
};

inline Measurement make_measurement(double signal_rel, double noise_rel, Setting setting) {
  if (!(noise_rel > 0.0) || !std::isfinite(noise_rel))
    throw NumericError("noise power must be positive and finite, got " + std::to_string(noise_rel));
  return {signal_rel, noise_rel, signal_rel / noise_rel, setting, false};
}

/// Linear noise readout: noise_rel = (v^T C v + vacuum) / reference.
struct NoiseProjection {
  Eigen::VectorXd vector;
  double vacuum = 0.0;     // variance from vacuum modes outside the represented basis
  double reference = 1.0;  // shot-noise normalization
};

struct DetectorOptions {
  /// Additive electronic noise, in dB below shot noise. Off when empty.
  std::optional<double> electronic_floor_db;
};

namespace detail {

inline double apply_floor(double noise_rel, const DetectorOptions& opts) {
  if (opts.electronic_floor_db) noise_rel += std::pow(10.0, -*opts.electronic_floor_db / 10.0);
  return noise_rel;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quantum noise limits

inline double qnl_displacement(double waist_m, double photons) {
  if (!(photons > 0.0)) throw UndefinedLimitError("QNL undefined for N = 0 photons");
  return waist_m / (2.0 * std::sqrt(photons));
}

inline double qnl_momentum(double waist_m, double photons) {
  if (!(photons > 0.0)) throw UndefinedLimitError("QNL undefined for N = 0 photons");
  return 1.0 / (waist_m * std::sqrt(photons));
}

/// SNR is quadratic in d, so squeezing by x dB lowers the limit by 10^(-x/20).
inline double sub_qnl_displacement(double d_qnl_m, double squeeze_db) {
  if (!(squeeze_db >= 0.0)) throw UsageError("squeeze_dB must be >= 0");
  return d_qnl_m * std::pow(10.0, -squeeze_db / 20.0);
}

/// Displacement implied by a trace sitting `excess_db` above a noise floor of
/// `floor_rel` (relative to shot noise): d = sqrt(signal_rel) d_QNL.
inline double displacement_from_excess_db(double excess_db, double floor_rel, double d_qnl_m) {
  if (!(excess_db > 0.0)) throw UsageError("signal is indistinguishable from the floor");
  const double signal_rel = floor_rel * (std::pow(10.0, excess_db / 10.0) - 1.0);
  return std::sqrt(signal_rel) * d_qnl_m;
}

// ---------------------------------------------------------------------------
// Homodyne detection with a shaped local oscillator

inline NoiseProjection homodyne_projection(const BeamState& state, const ModeShape& lo_shape,
                                           double phi_lo) {
  detail::check_shape(lo_shape, state.n_max(), 1e-6, "homodyne_detect");
  return {detail::quadrature_vector(lo_shape, phi_lo), 0.0, 1.0};
}

/// Signal and noise of an LO of shape `lo_shape` at phase phi_lo. The carrier
/// (order 0) is DC and does not contribute at the modulation frequency.
inline Measurement homodyne_detect(const BeamState& state, const ModeShape& lo_shape, double phi_lo,
                                   const DetectorOptions& opts = {}) {
  const NoiseProjection proj = homodyne_projection(state, lo_shape, phi_lo);
  double in_phase = 0.0, quadrature = 0.0;
  for (int n = 1; n <= state.n_max(); ++n) {
    const auto a = state.field.coeffs[n];
    const auto b = state.field.coeffs_quadrature[n];
    in_phase += lo_shape.hg[n] * (a.real() * std::cos(phi_lo) + a.imag() * std::sin(phi_lo));
    quadrature += lo_shape.hg[n] * (b.real() * std::cos(phi_lo) + b.imag() * std::sin(phi_lo));
  }
  const double signal = 4.0 * state.field.photons * (in_phase * in_phase + quadrature * quadrature);
  const double noise =
      detail::apply_floor(proj.vector.dot(state.noise.matrix * proj.vector), opts);
  return make_measurement(signal, noise, {SettingKind::kHomodynePhase, phi_lo});
}

// ---------------------------------------------------------------------------
// Split detection

struct SplitGeometry {
  double gap_m = 0.0;
  double half_width_m = std::numeric_limits<double>::infinity();

  bool ideal() const { return gap_m == 0.0 && std::isinf(half_width_m); }
};

/// Highest order used when summing the residual-mode coupling of a finite detector.
inline constexpr int kResidualSeriesOrder = 1001;

namespace detail {

struct SplitReadout {
  NoiseProjection projection;
  OverlapVector coeffs;  // c_n(z), n <= n_max
};

// Detector readout in the plane z_m for a state already expressed in that plane.
inline SplitReadout split_readout(const BeamState& state, const SplitGeometry& det) {
  const int n_max = state.n_max();
  const auto& geom = state.field.geom;
  const BeamGeometry local = geom.at(state.z_m);
  const double phi = gouy_phase(state.z_m, geom);
  const double eta = detected_fraction(local, det.gap_m, det.half_width_m);
  if (!(eta > 0.0)) throw GeometryError("split detector collects no light");

  // Residual mode in this plane: sum_{n > n_max} (c_n / rho) exp(-i n phi) u_n(x, z).
  // Its coupling to the detector is kappa = sum_{n > n_max} c_n(z) c_n exp(-i n phi) / rho.
  const OverlapVector flipped = flipped_mode_coeffs(std::max(n_max, 1));
  const double rho = flipped_residual_norm(std::max(n_max, 1));
  OverlapVector c;
  std::complex<double> kappa{0.0, 0.0};
  if (det.ideal()) {
    c = flipped;
    c.resize(static_cast<std::size_t>(n_max) + 1);
    std::complex<double> head{0.0, 0.0};
    for (int n = 1; n <= n_max; n += 2) head += c[n] * c[n] * std::polar(1.0, -n * phi);
    kappa = (std::conj(flipped_self_overlap(phi)) - head) / rho;
  } else {
    const int order = std::max(kResidualSeriesOrder, n_max);
    const OverlapVector wide = split_overlap_coeffs(order, local, det.gap_m, det.half_width_m);
    const OverlapVector ideal = flipped_mode_coeffs(order);
    for (int n = n_max + 1; n <= order; ++n)
      kappa += wide[n] * ideal[n] * std::polar(1.0, -n * phi);
    kappa /= rho;
    c.assign(wide.begin(), wide.begin() + n_max + 1);
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * (n_max + 2));
  for (int n = 0; n <= n_max; ++n) v[2 * n] = c[n];
  v[2 * (n_max + 1)] = kappa.real();
  v[2 * (n_max + 1) + 1] = -kappa.imag();
  const double tail = eta - squared_norm(c) - std::norm(kappa);
  return {{std::move(v), std::max(0.0, tail), eta}, std::move(c)};
}

}  // namespace detail

/// Noise readout of a split detector placed at z_m (from the waist).
inline NoiseProjection split_projection(const BeamState& state, double z_m, const SplitGeometry& det) {
  return detail::split_readout(propagate(state, z_m), det).projection;
}

inline Measurement split_detect(const BeamState& state, double z_m, const SplitGeometry& det = {},
                                const DetectorOptions& opts = {}) {
  const BeamState here = propagate(state, z_m);
  const auto readout = detail::split_readout(here, det);
  const auto& proj = readout.projection;
  double in_phase = 0.0, quadrature = 0.0;
  for (int n = 1; n <= here.n_max(); ++n) {
    in_phase += readout.coeffs[n] * here.field.coeffs[n].real();
    quadrature += readout.coeffs[n] * here.field.coeffs_quadrature[n].real();
  }
  const double signal =
      4.0 * here.field.photons * (in_phase * in_phase + quadrature * quadrature) / proj.reference;
  const double noise = detail::apply_floor(
      (proj.vector.dot(here.noise.matrix * proj.vector) + proj.vacuum) / proj.reference, opts);
  Measurement m = make_measurement(signal, noise, {SettingKind::kSplitZ, z_m});
  m.apertured = squared_norm(readout.coeffs) < 0.5;
  return m;
}

// ---------------------------------------------------------------------------
// Efficiency comparisons

/// SNR_SD / SNR_HD for two measurements at matched modulation quadrature.
inline double efficiency_ratio(const Measurement& split, const Measurement& homodyne) {
  if (!(homodyne.snr > 0.0)) throw UndefinedLimitError("homodyne SNR is zero; ratio undefined");
  return split.snr / homodyne.snr;
}

/// Coherent light, ideal detector: (2/pi) N_SD / N_HD.
inline double theoretical_efficiency_ratio(double photons_split, double photons_homodyne) {
  if (!(photons_homodyne > 0.0)) throw UndefinedLimitError("homodyne photon number is zero");
  return 2.0 / std::numbers::pi * photons_split / photons_homodyne;
}

/// (P_HD / P_SD) * (10^(Mod_SD/10) - 1) / (10^(Mod_HD/10) - 1). Modulation peaks
/// are trace heights above shot noise; the noise floor is subtracted before the ratio.
inline double experimental_ratio_from_traces(double power_split_w, double power_homodyne_w,
                                             double mod_split_db, double mod_homodyne_db) {
  if (!(mod_split_db > 0.0) || !(mod_homodyne_db > 0.0))
    throw UsageError("modulation peak must lie above the shot-noise floor (> 0 dB)");
  if (!(power_split_w > 0.0) || !(power_homodyne_w > 0.0))
    throw UsageError("signal beam powers must be > 0");
  const double snr_split = std::pow(10.0, mod_split_db / 10.0) - 1.0;
  const double snr_homodyne = std::pow(10.0, mod_homodyne_db / 10.0) - 1.0;
  return power_homodyne_w / power_split_w * snr_split / snr_homodyne;
}

}  // namespace beamsense
