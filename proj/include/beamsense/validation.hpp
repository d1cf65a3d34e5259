#pragma once

// Canned Monte-Carlo cross-checks of the analytic detector noise.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "beamsense/beam.hpp"
#include "beamsense/detect.hpp"
#include "beamsense/mc.hpp"

namespace beamsense {

struct McCheck {
  std::string name;
  double analytic = 0.0;
  double monte_carlo = 0.0;
  double tolerance = 0.0;  // relative

  double deviation() const { return std::abs(monte_carlo / analytic - 1.0); }
  bool passed() const { return deviation() < tolerance; }
};

namespace detail {

struct CheckCase {
  std::string name;
  NoiseCovariance cov;
  NoiseProjection readout;
  double analytic;
};

inline std::vector<CheckCase> check_cases(int n_max) {
  constexpr double kPi = std::numbers::pi;
  const BeamState coherent = make_coherent_beam(4.2e-3, 1064e-9, 106e-6, 100e3, n_max);
  BeamState tem10 = coherent;
  tem10.noise = inject_squeezed_mode(coherent.noise, tem_shape(1, n_max), 2.0, 8.0);
  BeamState flipped = coherent;
  flipped.noise = inject_squeezed_mode(coherent.noise, flipped_shape(n_max), 3.6, 3.6);
  BeamState tilted = coherent;
  tilted.noise = inject_squeezed_mode(coherent.noise, flipped_shape(n_max), 3.0, 6.0, 0.2);
  const double zr = coherent.field.geom.rayleigh_m();
  const SplitGeometry finite{20e-6, 400e-6};
  const ModeShape lo = tem_shape(1, n_max);

  std::vector<CheckCase> out;
  auto homodyne = [&](std::string name, const BeamState& s, double phi) {
    out.push_back({std::move(name), s.noise, homodyne_projection(s, lo, phi), homodyne_detect(s, lo, phi).noise_rel});
  };
  auto split = [&](std::string name, const BeamState& s, double z, const SplitGeometry& det) {
    out.push_back({std::move(name), propagate(s, z).noise, split_projection(s, z, det),
                   split_detect(s, z, det).noise_rel});
  };
  homodyne("homodyne coherent phi=0", coherent, 0.0);
  homodyne("homodyne 2/8 dB phi=0", tem10, 0.0);
  homodyne("homodyne 2/8 dB phi=pi/2", tem10, kPi / 2);
  homodyne("homodyne 2/8 dB phi=pi/4", tem10, kPi / 4);
  split("split coherent z=0", coherent, 0.0, {});
  split("split flipped 3.6 dB z=0", flipped, 0.0, {});
  split("split flipped 3/6 dB z=zR", tilted, zr, {});
  split("split flipped 3/6 dB z=0.3zR gap", tilted, 0.3 * zr, finite);
  return out;
}

}  // namespace detail

/// Runs every canned check with the given sampling configuration.
inline std::vector<McCheck> run_mc_checks(const McConfig& cfg, int n_max = kDefaultNmax) {
  std::vector<McCheck> out;
  for (const auto& c : detail::check_cases(n_max))
    out.push_back({c.name, c.analytic, mc_detector_noise(c.cov, c.readout, cfg), mc_tolerance(cfg.samples)});
  return out;
}

}  // namespace beamsense
