#pragma once

// Bundled scenarios and the reference values their summaries are checked against.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "beamsense/scenario.hpp"

namespace beamsense {

struct Expectation {
  const char* key;
  double value;
  double tolerance;  // absolute
};

struct Preset {
  const char* name;
  const char* description;
  const char* ini;
  std::vector<Expectation> expected;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all{
      {"qnl-table", "Quantum noise limits for 1 mW at 1 um, w0 = 100 um, RBW = 100 kHz",
       R"ini([scenario]
name = qnl-table
task = qnl

[source]
power_mW = 1
wavelength_um = 1
waist_um = 100
rbw_kHz = 100
)ini",
       {{"d_qnl", 0.2e-9, 0.15 * 0.2e-9}, {"p_qnl", 4e-2, 0.15 * 4e-2}, {"theta_qnl", 7e-9, 0.15 * 7e-9}}},

      {"sub-qnl", "Displacement inferred 0.5 dB above a 2 dB squeezed TEM10 homodyne floor",
       R"ini([scenario]
name = sub-qnl
task = qnl

[source]
power_uW = 170
wavelength_nm = 1064
waist_um = 106
rbw_kHz = 100

[squeezing]
mode = tem10
squeeze_dB = 2
antisqueeze_dB = 8

[analysis]
excess_dB = 0.5
)ini",
       {{"d_qnl", 0.6e-9, 0.15 * 0.6e-9},
        {"d_exp", 0.15e-9, 0.15 * 0.15e-9},
        {"d_exp_over_d_qnl_squared", 0.08, 0.005},
        {"floor_rel", 0.631, 0.001}}},

      {"fig-split-scan", "Split-detector z scan, 10% displacement / 90% tilt modulation power",
       R"ini([scenario]
name = fig-split-scan
task = sweep

[source]
power_mW = 4.2
wavelength_nm = 1064
waist_um = 106
rbw_kHz = 100
vbw_Hz = 100

[modulation]
displacement_fraction = 0.1
peak_dB = 23
tilt_phase_rad = 0.5pi
frequency_MHz = 4

[detector]
type = split
z_start_cm = 0
z_stop_cm = 60
points = 601
near_field_offset_cm = 1.6

[output]
trace_noise = true
seed = 1
)ini",
       {{"far_field_dB", 23.0, 0.5}, {"far_minus_near_dB", 10.0, 1.0}, {"argmin", 0.016, 0.001}}},

      {"fig-homodyne-scan", "TEM10 homodyne LO-phase scan with 2 dB / 8 dB squeezing",
       R"ini([scenario]
name = fig-homodyne-scan
task = sweep

[source]
power_uW = 170
wavelength_nm = 1064
waist_um = 106
rbw_kHz = 100
vbw_Hz = 100

[modulation]
displacement_fraction = 0.1
total_signal_rel = 0.8
tilt_phase_rad = 0.5pi
frequency_MHz = 4

[squeezing]
mode = tem10
squeeze_dB = 2
antisqueeze_dB = 8
combiner_efficiency = 1

[detector]
type = homodyne
lo = tem10
phi_start_rad = 0
phi_stop_rad = 2pi
points = 361
traces = QNL,SQZ,MOD,MOD-SQZ

[output]
trace_noise = true
seed = 1
)ini",
       {{"QNL.noise_rel_phi0", 1.0, 1e-9},
        {"SQZ.noise_rel_phi0", 0.631, 0.001},
        {"SQZ.noise_rel_phi_half_pi", 6.31, 0.01}}},

      {"efficiency", "Split vs homodyne efficiency: theory, Monte-Carlo and trace reconstruction",
       R"ini([scenario]
name = efficiency
task = efficiency

[source]
power_uW = 170
wavelength_nm = 1064
waist_um = 106
rbw_kHz = 100

[efficiency]
power_split_mW = 4.2
power_homodyne_uW = 170
mod_split_dB = 23
mod_homodyne_dB = 11.3

[mc]
samples = 1000000
seed = 1
)ini",
       {{"ratio_equal_power", 2.0 / std::numbers::pi, 1e-9},
        {"ratio_equal_power_mc", 2.0 / std::numbers::pi, 0.01 * 2.0 / std::numbers::pi},
        {"ratio_exp", 0.64, 0.03}}},

      {"squeeze-transfer", "Flipped-mode squeezing of 3.6 dB seen by the TEM10 mode",
       R"ini([scenario]
name = squeeze-transfer
task = squeeze-transfer

[source]
power_mW = 4.2
wavelength_nm = 1064
waist_um = 106
rbw_kHz = 100

[squeezing]
mode = flipped
squeeze_dB = 3.6
antisqueeze_dB = 3.6
combiner_efficiency = 1
)ini",
       {{"tem10_dB", -2.0, 0.1}, {"split_noise_at_waist", 0.4365, 1e-4}}},
  };
  return all;
}

inline const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (name == p.name) return p;
  std::string known;
  for (const auto& p : presets()) known += std::string(known.empty() ? "" : ", ") + p.name;
  throw UsageError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

inline Scenario preset_scenario(std::string_view name) {
  const Preset& p = find_preset(name);
  return parse_scenario(p.ini, std::string("preset:") + p.name);
}

/// Attaches reference values when `s` is physically identical to a bundled
/// preset (output settings may differ).
inline void annotate_expectations(const Scenario& s, RunResult& r) {
  auto physics = [](Scenario x) {
    x.output = OutputConfig{};
    return to_ini(x);
  };
  for (const auto& p : presets()) {
    if (s.name != p.name) continue;
    if (physics(s) != physics(parse_scenario(p.ini))) return;
    for (const auto& e : p.expected) {
      for (auto& item : r.summary) {
        if (item.key == e.key) {
          item.expected = e.value;
          item.tolerance = e.tolerance;
        }
      }
    }
  }
}

inline bool within_expectation(const SummaryItem& item) {
  return !item.expected || std::abs(item.value - *item.expected) <= item.tolerance;
}

}  // namespace beamsense
