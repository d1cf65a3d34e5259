#pragma once

// Beam state: coherent modal amplitudes relative to the TEM00 carrier plus the
// shot-noise-normalized quadrature covariance of every mode.
//
// Quadrature convention, fixed project-wide:
//   X+ = a + a^dag,  X- = -i (a - a^dag),  X^phi = cos(phi) X+ + sin(phi) X-
// Coherent/vacuum noise is the identity. Covariance rows are ordered
//   (X+_0, X-_0, X+_1, X-_1, ..., X+_nmax, X-_nmax, X+_r, X-_r)
// where r is the residual mode: the normalized part of the flipped mode that
// lies outside span(u_0..u_nmax). It lets the truncated basis hold the flipped
// mode exactly.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamsense/errors.hpp"
#include "beamsense/modes.hpp"

namespace beamsense {

namespace phys {
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;    // m/s
}  // namespace phys

/// Limit on |d|/w0 and |p| w0/2 for the first-order field expansion.
inline constexpr double kSmallSignalLimit = 0.1;

/// Coherent content. `coeffs` holds the carrier and the sidebands oscillating
/// in phase with the modulation drive (cos Wt); `coeffs_quadrature` holds the
/// sideband part in temporal quadrature (sin Wt), nonzero only when tilt and
/// displacement are driven with a relative phase.
struct ModalField {
  BeamGeometry geom;
  std::vector<std::complex<double>> coeffs;  // index = HG order; coeffs[0] = carrier
  std::vector<std::complex<double>> coeffs_quadrature;
  double photons = 0.0;                      // detected in integration_s
  double integration_s = 0.0;

  int n_max() const { return static_cast<int>(coeffs.size()) - 1; }
};

struct NoiseCovariance {
  Eigen::MatrixXd matrix;

  static NoiseCovariance vacuum(int n_max) {
    return {Eigen::MatrixXd::Identity(2 * (n_max + 2), 2 * (n_max + 2))};
  }
  int n_max() const { return static_cast<int>(matrix.rows()) / 2 - 2; }
  int residual_slot() const { return n_max() + 1; }

  /// 2x2 block of one mode (HG order, or residual_slot()).
  Eigen::Matrix2d block(int mode) const { return matrix.block<2, 2>(2 * mode, 2 * mode); }
};

struct BeamState {
  ModalField field;
  NoiseCovariance noise;
  double z_m = 0.0;  // plane the state is expressed in, measured from the waist

  int n_max() const { return field.n_max(); }
};

/// Transverse shape of a mode: HG coefficients plus the residual-mode component.
struct ModeShape {
  std::vector<double> hg;
  double residual = 0.0;

  double squared_norm() const { return beamsense::squared_norm(hg) + residual * residual; }
  int n_max() const { return static_cast<int>(hg.size()) - 1; }
};

/// Pure TEM_n0 shape.
inline ModeShape tem_shape(int n, int n_max = kDefaultNmax) {
  detail::check_order(n, n_max);
  ModeShape s{std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.0), 0.0};
  s.hg[n] = 1.0;
  return s;
}

/// The flipped mode, exactly normalized (HG part + residual).
inline ModeShape flipped_shape(int n_max = kDefaultNmax) {
  return {flipped_mode_coeffs(n_max), flipped_residual_norm(n_max)};
}

struct Modulation {
  double displacement_m = 0.0;
  double momentum_per_m = 0.0;
  double frequency_hz = 0.0;    // bookkeeping only
  double tilt_phase_rad = 0.0;  // temporal phase of the tilt drive relative to displacement
};

// ---------------------------------------------------------------------------

inline double photons_in(double power_w, double wavelength_m, double integration_s) {
  return power_w * integration_s * wavelength_m / (phys::kPlanck * phys::kSpeedOfLight);
}

/// Coherent TEM00 beam; N counts photons in T = 1/rbw.
inline BeamState make_coherent_beam(double power_w, double wavelength_m, double waist_m,
                                    double rbw_hz, int n_max = kDefaultNmax) {
  if (!(power_w >= 0.0)) throw UsageError("beam power must be >= 0");
  if (!(rbw_hz > 0.0)) throw UsageError("resolution bandwidth must be > 0");
  detail::check_order(1, std::max(n_max, 0));
  BeamState s;
  s.field.geom = BeamGeometry(waist_m, wavelength_m);
  s.field.coeffs.assign(static_cast<std::size_t>(n_max) + 1, {0.0, 0.0});
  s.field.coeffs[0] = 1.0;
  s.field.coeffs_quadrature.assign(s.field.coeffs.size(), {0.0, 0.0});
  s.field.integration_s = 1.0 / rbw_hz;
  s.field.photons = photons_in(power_w, wavelength_m, s.field.integration_s);
  s.noise = NoiseCovariance::vacuum(n_max);
  return s;
}

inline double tilt_to_momentum(double theta_rad, double wavelength_m) {
  return 2.0 * std::numbers::pi * std::sin(theta_rad) / wavelength_m;
}

inline double momentum_to_tilt(double p_per_m, double wavelength_m) {
  const double s = p_per_m * wavelength_m / (2.0 * std::numbers::pi);
  if (std::abs(s) > 1.0) throw UsageError("momentum exceeds the propagating limit 2 pi / lambda");
  return std::asin(s);
}

/// Adds (d/w0 + i w0 p / 2) to the TEM10 amplitude.
inline ModalField apply_modulation(ModalField field, const Modulation& mod) {
  if (field.n_max() < 1) throw TruncationError("modulation needs n_max >= 1");
  const double w0 = field.geom.waist_m;
  const double d_ratio = mod.displacement_m / w0;
  const double p_ratio = mod.momentum_per_m * w0 / 2.0;
  if (std::abs(d_ratio) >= kSmallSignalLimit)
    throw ValidityError("displacement d/w0 = " + std::to_string(d_ratio) +
                            " outside small-signal window (|d/w0| < 0.1)",
                        d_ratio);
  if (std::abs(p_ratio) >= kSmallSignalLimit)
    throw ValidityError("momentum p w0/2 = " + std::to_string(p_ratio) +
                            " outside small-signal window (|p w0/2| < 0.1)",
                        p_ratio);
  // p(t) = p cos(Wt + psi) = p cos(psi) cos(Wt) - p sin(psi) sin(Wt)
  field.coeffs_quadrature.resize(field.coeffs.size());
  field.coeffs[1] += std::complex<double>(d_ratio, p_ratio * std::cos(mod.tilt_phase_rad));
  field.coeffs_quadrature[1] += std::complex<double>(0.0, -p_ratio * std::sin(mod.tilt_phase_rad));
  return field;
}

inline BeamState apply_modulation(BeamState state, const Modulation& mod) {
  state.field = apply_modulation(std::move(state.field), mod);
  return state;
}

inline double db_to_variance(double squeeze_db) { return std::pow(10.0, -squeeze_db / 10.0); }
inline double variance_to_db(double variance) { return 10.0 * std::log10(variance); }

namespace detail {

// Quadrature-space vector of `shape` along angle theta: X^theta of that mode.
inline Eigen::VectorXd quadrature_vector(const ModeShape& shape, double theta) {
  const int n_max = shape.n_max();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * (n_max + 2));
  const double c = std::cos(theta), s = std::sin(theta);
  for (int n = 0; n <= n_max; ++n) {
    v[2 * n] = shape.hg[n] * c;
    v[2 * n + 1] = shape.hg[n] * s;
  }
  v[2 * (n_max + 1)] = shape.residual * c;
  v[2 * (n_max + 1) + 1] = shape.residual * s;
  return v;
}

inline void check_shape(const ModeShape& shape, int n_max, double tol, const char* what) {
  if (shape.n_max() != n_max)
    throw UsageError(std::string(what) + ": shape truncation " + std::to_string(shape.n_max()) +
                     " does not match state truncation " + std::to_string(n_max));
  const double norm = std::sqrt(shape.squared_norm());
  if (std::abs(norm - 1.0) > tol)
    throw UsageError(std::string(what) + ": mode shape is not normalized (norm " +
                     std::to_string(norm) + ")");
}

}  // namespace detail

/// Variance of quadrature X^theta of the mode `shape`: v^T C v.
inline double quadrature_variance(const NoiseCovariance& cov, const ModeShape& shape, double theta) {
  const Eigen::VectorXd v = detail::quadrature_vector(shape, theta);
  return v.dot(cov.matrix * v);
}

/// Fills the normalized mode `shape` with squeezed vacuum:
/// V_s = 10^(-squeeze_db/10) along angle `angle`, V_a = 10^(antisqueeze_db/10)
/// along the orthogonal quadrature.  C -> C + (V_s - 1) s s^T + (V_a - 1) a a^T.
inline NoiseCovariance inject_squeezed_mode(const NoiseCovariance& cov, const ModeShape& shape,
                                            double squeeze_db, double antisqueeze_db,
                                            double angle_rad = 0.0) {
  detail::check_shape(shape, cov.n_max(), 1e-6, "inject_squeezed_mode");
  if (!(squeeze_db >= 0.0)) throw UsageError("squeeze_dB must be >= 0");
  if (!(antisqueeze_db >= squeeze_db)) throw UsageError("antisqueeze_dB must be >= squeeze_dB");
  const Eigen::VectorXd s = detail::quadrature_vector(shape, angle_rad);
  const Eigen::VectorXd a = detail::quadrature_vector(shape, angle_rad + std::numbers::pi / 2);
  NoiseCovariance out = cov;
  out.matrix += (db_to_variance(squeeze_db) - 1.0) * s * s.transpose();
  out.matrix += (std::pow(10.0, antisqueeze_db / 10.0) - 1.0) * a * a.transpose();
  return out;
}

/// State-level injection. The residual mode is defined in the waist plane, so a
/// shape with residual content can only be injected before propagation.
inline BeamState inject_squeezed_mode(BeamState state, const ModeShape& shape, double squeeze_db,
                                      double antisqueeze_db, double angle_rad = 0.0) {
  if (state.z_m != 0.0 && shape.residual != 0.0)
    throw UsageError("a shape with residual flipped-mode content must be injected at z = 0");
  state.noise = inject_squeezed_mode(state.noise, shape, squeeze_db, antisqueeze_db, angle_rad);
  return state;
}

/// Amplitude-quadrature variance of TEM10 when only the flipped mode is non-coherent.
inline double squeeze_transfer_flipped_to_tem10(double flipped_variance) {
  if (!(flipped_variance >= 0.0)) throw UsageError("variance must be >= 0");
  constexpr double two_over_pi = 2.0 / std::numbers::pi;
  return two_over_pi * flipped_variance + (1.0 - two_over_pi);
}

/// Odd modes (including the residual flipped-tail mode) flip sign in the extra-mirror arm.
inline bool is_odd_mode(int mode, int n_max) { return mode > n_max || (mode % 2) == 1; }

/// Lossless even/odd combiner. The bright port keeps its even-mode content and
/// noise; the odd-mode noise comes from the dim port through a loss channel
/// C -> eta C + (1 - eta) I.
inline BeamState combine_mach_zehnder(const BeamState& bright, const NoiseCovariance& dim,
                                      double efficiency) {
  const int n_max = bright.n_max();
  if (dim.n_max() != n_max) throw UsageError("combiner inputs have different truncations");
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw UsageError("combiner efficiency must lie in (0, 1]");
  for (int n = 1; n <= n_max; n += 2) {
    if (std::abs(bright.field.coeffs[n]) > 1e-12 || std::abs(bright.field.coeffs_quadrature[n]) > 1e-12)
      throw UsageError("bright combiner input carries coherent odd-mode content (TEM" +
                       std::to_string(n) + "0)");
  }
  BeamState out = bright;
  const int modes = n_max + 2;
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < modes; ++j) {
      const bool odd_i = is_odd_mode(i, n_max), odd_j = is_odd_mode(j, n_max);
      auto blk = out.noise.matrix.block<2, 2>(2 * i, 2 * j);
      if (odd_i && odd_j) {
        blk = efficiency * dim.matrix.block<2, 2>(2 * i, 2 * j);
        if (i == j) blk += (1.0 - efficiency) * Eigen::Matrix2d::Identity();
      } else if (odd_i != odd_j) {
        blk.setZero();
      }
    }
  }
  return out;
}

/// Free propagation to the plane z (from the waist). Mode n rotates as
/// a_n -> a_n exp(-i n dphi) with dphi the Gouy phase accumulated since state.z_m.
/// The residual mode co-propagates and is left untouched.
inline BeamState propagate(const BeamState& state, double z_m) {
  const auto& geom = state.field.geom;
  const double dphi = gouy_phase(z_m, geom) - gouy_phase(state.z_m, geom);
  BeamState out = state;
  out.z_m = z_m;
  const int n_max = state.n_max();
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(2 * (n_max + 2), 2 * (n_max + 2));
  for (int n = 1; n <= n_max; ++n) {
    const double theta = n * dphi;
    out.field.coeffs[n] *= std::polar(1.0, -theta);
    out.field.coeffs_quadrature[n] *= std::polar(1.0, -theta);
    const double c = std::cos(theta), s = std::sin(theta);
    rot(2 * n, 2 * n) = c;
    rot(2 * n, 2 * n + 1) = s;
    rot(2 * n + 1, 2 * n) = -s;
    rot(2 * n + 1, 2 * n + 1) = c;
  }
  out.noise.matrix = rot * state.noise.matrix * rot.transpose();
  return out;
}

/// Smallest eigenvalue of the symmetrized covariance.
inline double min_eigenvalue(const NoiseCovariance& cov) {
  const Eigen::MatrixXd sym = 0.5 * (cov.matrix + cov.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline bool is_psd(const NoiseCovariance& cov, double tol = 1e-9) {
  return cov.matrix.isApprox(cov.matrix.transpose(), 1e-12) && min_eigenvalue(cov) >= -tol;
}

}  // namespace beamsense
