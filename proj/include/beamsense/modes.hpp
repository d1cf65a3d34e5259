#pragma once

// Hermite-Gauss mode functions in one transverse dimension, quadrature grids,
// overlap integrals and the flipped-mode decomposition.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "beamsense/errors.hpp"

namespace beamsense {

/// Truncation used when callers do not pass one: odd modes through 41.
inline constexpr int kDefaultNmax = 41;

using OverlapVector = std::vector<double>;

struct BeamGeometry {
  double waist_m = 0.0;
  double wavelength_m = 0.0;

  BeamGeometry() = default;
  BeamGeometry(double waist, double wavelength) : waist_m(waist), wavelength_m(wavelength) {
    validate();
  }

  void validate() const {
    if (!(waist_m > 0.0) || !std::isfinite(waist_m))
      throw GeometryError("beam waist must be positive and finite, got " + std::to_string(waist_m));
    if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
      throw GeometryError("wavelength must be positive and finite, got " +
                          std::to_string(wavelength_m));
  }

  double rayleigh_m() const { return std::numbers::pi * waist_m * waist_m / wavelength_m; }

  /// 1/e^2 intensity radius at distance z from the waist.
  double width_at(double z_m) const {
    const double r = z_m / rayleigh_m();
    return waist_m * std::sqrt(1.0 + r * r);
  }

  /// Same beam seen in the plane z (waist replaced by the local width).
  BeamGeometry at(double z_m) const { return BeamGeometry(width_at(z_m), wavelength_m); }
};

namespace detail {

inline void check_order(int n, int n_max) {
  if (n < 0) throw TruncationError("mode index must be non-negative, got " + std::to_string(n));
  if (n > n_max)
    throw TruncationError("mode index " + std::to_string(n) + " exceeds truncation n_max=" +
                          std::to_string(n_max));
}

struct RecurrenceTable {
  static constexpr int kSize = 4096;
  std::vector<double> up, down;  // sqrt(2/(k+1)), sqrt(k/(k+1))
  RecurrenceTable() : up(kSize), down(kSize) {
    for (int k = 0; k < kSize; ++k) {
      up[k] = std::sqrt(2.0 / (k + 1));
      down[k] = std::sqrt(double(k) / (k + 1));
    }
  }
};

inline const RecurrenceTable& recurrence_table() {
  static const RecurrenceTable table;
  return table;
}

// Normalized Hermite functions psi_k(xi) = H_k(xi) exp(-xi^2/2) / sqrt(2^k k! sqrt(pi)),
// k = 0..n, written into out[0..n]. The normalization is carried through the
// three-term recurrence so nothing overflows at high order.
inline void hermite_functions(double xi, int n, double* out) {
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
  if (n == 0) return;
  out[1] = std::numbers::sqrt2 * xi * out[0];
  const auto& table = recurrence_table();
  const int cached = std::min(n, RecurrenceTable::kSize);
  int k = 1;
  for (; k < cached; ++k) out[k + 1] = table.up[k] * xi * out[k] - table.down[k] * out[k - 1];
  for (; k < n; ++k)
    out[k + 1] = std::sqrt(2.0 / (k + 1)) * xi * out[k] - std::sqrt(double(k) / (k + 1)) * out[k - 1];
}

inline std::vector<double> hermite_functions(double xi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  hermite_functions(xi, n, out.data());
  return out;
}

}  // namespace detail

/// Normalized waist-plane amplitude u_n(x) of the TEM_n0 mode, in m^-1/2.
inline double hg_amplitude(int n, double x_m, const BeamGeometry& geom, int n_max = kDefaultNmax) {
  detail::check_order(n, n_max);
  const double xi = std::numbers::sqrt2 * x_m / geom.waist_m;
  std::vector<double> psi(static_cast<std::size_t>(n) + 1);
  detail::hermite_functions(xi, n, psi.data());
  return psi[n] * std::sqrt(std::numbers::sqrt2 / geom.waist_m);
}

/// All amplitudes u_0(x) .. u_nmax(x) in one recurrence pass.
inline std::vector<double> hg_amplitudes(int n_max, double x_m, const BeamGeometry& geom) {
  detail::check_order(0, n_max);
  auto psi = detail::hermite_functions(std::numbers::sqrt2 * x_m / geom.waist_m, n_max);
  const double scale = std::sqrt(std::numbers::sqrt2 / geom.waist_m);
  for (auto& v : psi) v *= scale;
  return psi;
}

/// arctan(z / z_R); +-pi/2 at +-infinity.
inline double gouy_phase(double z_m, const BeamGeometry& geom) {
  return std::atan(z_m / geom.rayleigh_m());
}

// ---------------------------------------------------------------------------
// Quadrature grids and sampled profiles

/// Nodes and weights such that  int f(x) dx ~= sum_i weights[i] * f(nodes[i]).
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::string rule;
};

/// Gauss-Hermite rule scaled to the waist. Weights absorb exp(+xi^2), so products
/// u_m u_n with m + n <= 2K - 1 integrate exactly. K defaults to 4 n_max + 64.
inline std::shared_ptr<const QuadratureGrid> gauss_hermite_grid(const BeamGeometry& geom,
                                                                int n_max = kDefaultNmax,
                                                                int nodes = 0) {
  detail::check_order(0, n_max);
  const int k_nodes = std::max(nodes, 4 * n_max + 64);

  // Golub-Welsch: eigenvalues of the Jacobi matrix for weight exp(-xi^2).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(k_nodes);
  Eigen::VectorXd sub(k_nodes - 1);
  for (int k = 1; k < k_nodes; ++k) sub[k - 1] = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("Gauss-Hermite node solve failed");

  auto grid = std::make_shared<QuadratureGrid>();
  grid->rule = "gauss-hermite/" + std::to_string(k_nodes);
  grid->nodes.resize(k_nodes);
  grid->weights.resize(k_nodes);
  std::vector<double> psi(static_cast<std::size_t>(k_nodes) + 1);
  const double scale = geom.waist_m / std::numbers::sqrt2;
  for (int i = 0; i < k_nodes; ++i) {
    double xi = solver.eigenvalues()[i];
    // Newton polish on psi_K; psi_K' = sqrt(2K) psi_{K-1} - xi psi_K.
    for (int it = 0; it < 3; ++it) {
      detail::hermite_functions(xi, k_nodes, psi.data());
      const double deriv = std::sqrt(2.0 * k_nodes) * psi[k_nodes - 1] - xi * psi[k_nodes];
      if (deriv == 0.0) break;
      xi -= psi[k_nodes] / deriv;
    }
    detail::hermite_functions(xi, k_nodes - 1, psi.data());
    grid->nodes[i] = xi * scale;
    grid->weights[i] = scale / (k_nodes * psi[k_nodes - 1] * psi[k_nodes - 1]);
  }
  return grid;
}

/// Composite 20-point Gauss-Legendre rule on [-L, 0] and [0, L] with a panel
/// boundary at the origin, for integrands with a kink or jump at x = 0.
inline std::shared_ptr<const QuadratureGrid> split_legendre_grid(const BeamGeometry& geom,
                                                                 double half_span_waists = 12.0,
                                                                 int panels_per_side = 96) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = Rule::abscissa();
  const auto& rule_weights = Rule::weights();
  auto grid = std::make_shared<QuadratureGrid>();
  grid->rule = "split-legendre/" + std::to_string(panels_per_side);
  const double length = half_span_waists * geom.waist_m;
  const double h = length / panels_per_side;
  for (int side : {-1, 1}) {
    for (int p = 0; p < panels_per_side; ++p) {
      const double mid = side * (p + 0.5) * h;
      for (std::size_t k = 0; k < abscissa.size(); ++k) {
        grid->nodes.push_back(mid + 0.5 * h * abscissa[k]);
        grid->weights.push_back(0.5 * h * rule_weights[k]);
        grid->nodes.push_back(mid - 0.5 * h * abscissa[k]);
        grid->weights.push_back(0.5 * h * rule_weights[k]);
      }
    }
  }
  return grid;
}

/// Function values on a particular grid.
struct SampledProfile {
  std::shared_ptr<const QuadratureGrid> grid;
  std::vector<double> values;
};

template <class F>
SampledProfile sample_profile(std::shared_ptr<const QuadratureGrid> grid, F&& f) {
  SampledProfile out{std::move(grid), {}};
  out.values.reserve(out.grid->nodes.size());
  for (double x : out.grid->nodes) out.values.push_back(f(x));
  return out;
}

inline SampledProfile sample_mode(std::shared_ptr<const QuadratureGrid> grid, int n,
                                  const BeamGeometry& geom, int n_max = kDefaultNmax) {
  detail::check_order(n, n_max);
  return sample_profile(std::move(grid), [&](double x) { return hg_amplitude(n, x, geom, n_max); });
}

/// Flipped mode: u_0 with a pi phase step at the origin.
inline double flipped_amplitude(double x_m, const BeamGeometry& geom) {
  const double u0 = hg_amplitude(0, x_m, geom, 0);
  return x_m < 0.0 ? -u0 : (x_m > 0.0 ? u0 : 0.0);
}

/// int f g dx on the shared grid.
inline double overlap(const SampledProfile& f, const SampledProfile& g) {
  if (!f.grid || f.grid != g.grid)
    throw UsageError("overlap: profiles are sampled on different quadrature grids");
  if (f.values.size() != f.grid->nodes.size() || g.values.size() != g.grid->nodes.size())
    throw UsageError("overlap: profile length does not match its grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) acc += f.grid->weights[i] * (f.values[i] * g.values[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Split-detector and flipped-mode coefficients

/// Fraction of the TEM00 power falling on a two-halves detector.
inline double detected_fraction(const BeamGeometry& geom, double gap_m, double half_width_m) {
  const double inner = gap_m / (std::numbers::sqrt2 * geom.waist_m);
  const double outer = std::isinf(half_width_m) ? std::numeric_limits<double>::infinity()
                                                : std::numbers::sqrt2 * half_width_m / geom.waist_m;
  return std::erf(outer) - std::erf(inner);
}

/// c_n = int_{gap/2}^{hw} u_n u_0 dx - int_{-hw}^{-gap/2} u_n u_0 dx for n = 0..n_max.
/// half_width may be +infinity for the ideal detector.
inline OverlapVector split_overlap_coeffs(int n_max, const BeamGeometry& geom, double gap_m = 0.0,
                                          double half_width_m = std::numeric_limits<double>::infinity()) {
  detail::check_order(0, n_max);
  if (!(gap_m >= 0.0)) throw GeometryError("split detector gap must be >= 0");
  if (!(half_width_m > 0.5 * gap_m))
    throw GeometryError("split detector half width must exceed half the gap");

  // u_n u_0 has parity (-1)^n, so even orders cancel exactly and odd orders are
  // twice the right half-line integral, which is smooth on its interval.
  constexpr double kCutoff = 13.0;  // psi_0 < 1e-36 beyond
  constexpr double kPanel = 0.125;
  const double lo = gap_m / (std::numbers::sqrt2 * geom.waist_m);
  const double hi = std::min(kCutoff, std::isinf(half_width_m)
                                          ? kCutoff
                                          : std::numbers::sqrt2 * half_width_m / geom.waist_m);
  OverlapVector c(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (hi <= lo) return c;

  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / kPanel)));
  const double h = (hi - lo) / panels;
  std::vector<double> psi(static_cast<std::size_t>(n_max) + 1);
  auto accumulate = [&](double xi, double w) {
    detail::hermite_functions(xi, n_max, psi.data());
    const double wp0 = w * psi[0];
    for (int n = 1; n <= n_max; n += 2) c[n] += wp0 * psi[n];
  };
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
      const double half = 0.5 * h * abscissa[k];
      accumulate(mid + half, 0.5 * h * weights[k]);
      accumulate(mid - half, 0.5 * h * weights[k]);
    }
  }
  for (auto& v : c) v *= 2.0;
  return c;
}

/// Expansion coefficients of the flipped mode on the HG basis, exact:
/// c_1 = sqrt(2/pi), c_{n+2} = -n / sqrt((n+1)(n+2)) c_n, even orders vanish.
inline OverlapVector flipped_mode_coeffs(int n_max = kDefaultNmax) {
  if (n_max < 1) throw UsageError("flipped_mode_coeffs needs n_max >= 1");
  OverlapVector c(static_cast<std::size_t>(n_max) + 1, 0.0);
  double cn = std::sqrt(2.0 / std::numbers::pi);
  for (int n = 1; n <= n_max; n += 2) {
    c[n] = cn;
    cn *= -n / std::sqrt(double(n + 1) * (n + 2));
  }
  return c;
}

inline double squared_norm(const OverlapVector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

/// sum over all n of c_n^2 exp(i n phi) = (2/pi) asin(exp(i phi)).
/// Overlap of the flipped mode with itself after a Gouy rotation phi.
inline std::complex<double> flipped_self_overlap(double phi) {
  return (2.0 / std::numbers::pi) * std::asin(std::polar(1.0, phi));
}

/// Norm of the flipped mode outside span(u_0..u_nmax): sqrt(1 - sum c_n^2).
inline double flipped_residual_norm(int n_max = kDefaultNmax) {
  return std::sqrt(std::max(0.0, 1.0 - squared_norm(flipped_mode_coeffs(n_max))));
}

}  // namespace beamsense
