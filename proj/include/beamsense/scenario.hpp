#pragma once

// Declarative experiment descriptions. A scenario is an INI document with
// unit-suffixed keys (power_mW, waist_um, z_cm, ...); it is parsed and fully
// validated into a Scenario value, then run() evaluates it into measurement
// tables plus a list of summary scalars.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "beamsense/beam.hpp"
#include "beamsense/detect.hpp"
#include "beamsense/errors.hpp"
#include "beamsense/io.hpp"
#include "beamsense/mc.hpp"
#include "beamsense/spectrum.hpp"

namespace beamsense {

enum class Task { kQnl, kSweep, kEfficiency, kSqueezeTransfer };
enum class SqueezeMode { kNone, kTem10, kFlipped };
enum class DetectorKind { kSplit, kHomodyne };
enum class HomodyneTrace { kQnl, kSqz, kMod, kModSqz };

struct SourceConfig {
  double power_w = 1e-3;
  double wavelength_m = 1e-6;
  double waist_m = 100e-6;
  double rbw_hz = 100e3;
  double vbw_hz = 100e3;
};

/// Either explicit (d, p) or a displacement power fraction with an overall
/// strength (homodyne-referenced signal, or a calibrated split-scan peak).
struct ModulationConfig {
  double displacement_m = 0.0;
  double momentum_per_m = 0.0;
  std::optional<double> displacement_fraction;
  std::optional<double> total_signal_rel;  // 4N [(d/w0)^2 + (p w0/2)^2]
  std::optional<double> peak_db;           // calibrate so the sweep maximum reads this
  double tilt_phase_rad = 0.0;
  double frequency_hz = 4e6;

  bool enabled() const {
    return displacement_m != 0.0 || momentum_per_m != 0.0 || displacement_fraction.has_value();
  }
};

struct SqueezingConfig {
  SqueezeMode mode = SqueezeMode::kNone;
  double squeeze_db = 0.0;
  double antisqueeze_db = 0.0;
  double angle_rad = 0.0;
  double combiner_efficiency = 1.0;
};

struct SweepRange {
  double start = 0.0;
  double stop = 0.0;
  int points = 1;

  double at(int i) const { return points == 1 ? start : start + (stop - start) * i / double(points - 1); }
};

struct DetectorConfig {
  DetectorKind kind = DetectorKind::kHomodyne;
  SweepRange sweep;                   // z (m) for split, phi_LO (rad) for homodyne
  double near_field_offset_m = 0.0;   // split: scan coordinate of the waist's image
  SplitGeometry geometry;             // split only
  std::vector<HomodyneTrace> traces;  // homodyne figure traces; empty = configured state only
  std::optional<double> electronic_floor_db;
};

struct EfficiencyConfig {
  double power_split_w = 0.0;
  double power_homodyne_w = 0.0;
  double mod_split_db = 0.0;
  double mod_homodyne_db = 0.0;
  bool has_traces = false;
};

struct OutputConfig {
  std::string path;  // directory; empty = caller decides
  TableFormat format = TableFormat::kCsv;
  bool trace_noise = false;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct Scenario {
  std::string name = "scenario";
  Task task = Task::kSweep;
  int n_max = kDefaultNmax;
  SourceConfig source;
  ModulationConfig modulation;
  SqueezingConfig squeezing;
  DetectorConfig detector;
  std::optional<McConfig> mc;
  std::optional<double> excess_db;  // analysis: trace height above the squeezed floor
  EfficiencyConfig efficiency;
  OutputConfig output;
};

// ---------------------------------------------------------------------------
// Results

struct NamedTable {
  std::string name;
  std::vector<Measurement> rows;
  std::optional<std::vector<double>> db;  // fluctuating trace, when enabled
  std::vector<double> mc_noise;           // per-row Monte-Carlo noise, when enabled
};

struct SummaryItem {
  std::string key;
  double value = 0.0;
  std::string unit;
  std::optional<double> expected;  // filled for bundled presets
  double tolerance = 0.0;  // absolute
};

struct RunResult {
  std::vector<NamedTable> tables;
  std::vector<SummaryItem> summary;

  const SummaryItem* find(const std::string& key) const {
    for (const auto& s : summary)
      if (s.key == key) return &s;
    return nullptr;
  }
  double at(const std::string& key) const {
    if (const auto* s = find(key)) return s->value;
    throw UsageError("no summary entry '" + key + "'");
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

using Units = std::vector<std::pair<const char*, double>>;

inline const Units kPowerUnits{{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}};
inline const Units kLengthUnits{{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
inline const Units kFrequencyUnits{{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}};
inline const Units kAngleUnits{{"rad", 1.0}, {"mrad", 1e-3}, {"urad", 1e-6}, {"nrad", 1e-9}};

inline std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Real number; "inf" allowed; a trailing "pi" multiplies by pi ("0.5pi", "-pi").
inline double parse_real(const std::string& where, const std::string& raw) {
  std::string text = trim(raw);
  double factor = 1.0;
  if (text.size() >= 2 && lower(text.substr(text.size() - 2)) == "pi") {
    factor = std::numbers::pi;
    text = trim(text.substr(0, text.size() - 2));
    if (text.empty() || text == "+") text = "1";
    if (text == "-") text = "-1";
    if (!text.empty() && text.back() == '*') text = trim(text.substr(0, text.size() - 1));
  }
  if (text.empty()) throw ScenarioError(where, "empty value");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw ScenarioError(where, "not a number: '" + trim(raw) + "'");
  if (std::isnan(v)) throw ScenarioError(where, "NaN is not allowed");
  return v * factor;
}

inline bool parse_bool(const std::string& where, const std::string& raw) {
  const std::string t = lower(trim(raw));
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ScenarioError(where, "expected true/false, got '" + trim(raw) + "'");
}

inline std::string where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

// One INI section with bookkeeping of which keys were consumed.
class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }
  const std::string& name() const { return name_; }

  std::optional<std::string> text(const std::string& key) {
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    used_.insert(key);
    return trim(it->second.data());
  }

  std::optional<double> real(const std::string& key) {
    const auto t = text(key);
    if (!t) return std::nullopt;
    return parse_real(where(name_, key), *t);
  }

  // Looks up base_<unit> for each accepted unit; at most one may be present. Returns SI.
  std::optional<double> quantity(const std::string& base, const Units& units) {
    std::optional<double> out;
    std::string found;
    for (const auto& [suffix, scale] : units) {
      const std::string key = base + "_" + suffix;
      if (auto v = real(key)) {
        if (out) throw ScenarioError(where(name_, key), "conflicts with " + found);
        out = *v * scale;
        found = key;
      }
    }
    return out;
  }

  double quantity_or(const std::string& base, const Units& units, double fallback) {
    return quantity(base, units).value_or(fallback);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_)
      if (!used_.count(key)) throw ScenarioError(where(name_, key), "unknown key");
  }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::set<std::string> used_;
};

inline void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ScenarioError(where, what);
}

inline Task parse_task(const std::string& where, const std::string& t) {
  if (t == "qnl") return Task::kQnl;
  if (t == "sweep") return Task::kSweep;
  if (t == "efficiency") return Task::kEfficiency;
  if (t == "squeeze-transfer") return Task::kSqueezeTransfer;
  throw ScenarioError(where, "unknown task '" + t + "' (qnl|sweep|efficiency|squeeze-transfer)");
}

inline const char* task_name(Task t) {
  switch (t) {
    case Task::kQnl: return "qnl";
    case Task::kSweep: return "sweep";
    case Task::kEfficiency: return "efficiency";
    case Task::kSqueezeTransfer: return "squeeze-transfer";
  }
  return "sweep";
}

inline const char* trace_name(HomodyneTrace t) {
  switch (t) {
    case HomodyneTrace::kQnl: return "QNL";
    case HomodyneTrace::kSqz: return "SQZ";
    case HomodyneTrace::kMod: return "MOD";
    case HomodyneTrace::kModSqz: return "MOD-SQZ";
  }
  return "QNL";
}

inline HomodyneTrace parse_trace(const std::string& where, std::string t) {
  t = trim(t);
  for (HomodyneTrace k : {HomodyneTrace::kQnl, HomodyneTrace::kSqz, HomodyneTrace::kMod, HomodyneTrace::kModSqz})
    if (lower(t) == lower(trace_name(k))) return k;
  throw ScenarioError(where, "unknown trace '" + t + "' (QNL|SQZ|MOD|MOD-SQZ)");
}

inline const char* squeeze_mode_name(SqueezeMode m) {
  switch (m) {
    case SqueezeMode::kNone: return "none";
    case SqueezeMode::kTem10: return "tem10";
    case SqueezeMode::kFlipped: return "flipped";
  }
  return "none";
}

inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void validate(const Scenario& s) {
  using detail::require;
  require(!s.name.empty(), "[scenario] name", "must not be empty");
  require(s.n_max >= 1 && s.n_max <= 4000, "[scenario] n_max", "must lie in [1, 4000]");
  const auto& src = s.source;
  require(src.power_w >= 0.0 && std::isfinite(src.power_w), "[source] power", "must be finite and >= 0");
  require(src.wavelength_m > 0.0 && std::isfinite(src.wavelength_m), "[source] wavelength", "must be > 0");
  require(src.waist_m > 0.0 && std::isfinite(src.waist_m), "[source] waist", "must be > 0");
  require(src.rbw_hz > 0.0 && std::isfinite(src.rbw_hz), "[source] rbw", "must be > 0");
  require(src.vbw_hz > 0.0 && src.vbw_hz <= src.rbw_hz, "[source] vbw", "must satisfy 0 < vbw <= rbw");

  const auto& mod = s.modulation;
  if (mod.displacement_fraction) {
    require(*mod.displacement_fraction >= 0.0 && *mod.displacement_fraction <= 1.0,
            "[modulation] displacement_fraction", "must lie in [0, 1]");
    require(mod.displacement_m == 0.0 && mod.momentum_per_m == 0.0, "[modulation] displacement_fraction",
            "cannot be combined with explicit d/p/theta");
    require(mod.total_signal_rel.has_value() != mod.peak_db.has_value(), "[modulation] displacement_fraction",
            "needs exactly one of total_signal_rel or peak_dB");
    if (mod.total_signal_rel)
      require(*mod.total_signal_rel >= 0.0, "[modulation] total_signal_rel", "must be >= 0");
    if (mod.peak_db)
      require(s.task == Task::kSweep, "[modulation] peak_dB", "calibration needs a sweep task");
  } else {
    require(!mod.total_signal_rel && !mod.peak_db, "[modulation] total_signal_rel",
            "only valid together with displacement_fraction");
  }
  require(std::isfinite(mod.tilt_phase_rad), "[modulation] tilt_phase_rad", "must be finite");

  const auto& sq = s.squeezing;
  if (sq.mode != SqueezeMode::kNone) {
    require(sq.squeeze_db >= 0.0, "[squeezing] squeeze_dB", "must be >= 0");
    require(sq.antisqueeze_db >= sq.squeeze_db, "[squeezing] antisqueeze_dB", "must be >= squeeze_dB");
    require(sq.combiner_efficiency > 0.0 && sq.combiner_efficiency <= 1.0, "[squeezing] combiner_efficiency",
            "must lie in (0, 1]");
  }

  const auto& det = s.detector;
  if (s.task == Task::kSweep) {
    require(det.sweep.points >= 1 && det.sweep.points <= 1'000'000, "[detector] points", "must lie in [1, 1e6]");
    require(std::isfinite(det.sweep.start) && std::isfinite(det.sweep.stop), "[detector] sweep",
            "bounds must be finite");
    if (det.kind == DetectorKind::kSplit) {
      require(det.geometry.gap_m >= 0.0, "[detector] gap", "must be >= 0");
      require(det.geometry.half_width_m > det.geometry.gap_m / 2, "[detector] half_width",
              "must exceed half the gap");
      require(std::isfinite(det.near_field_offset_m), "[detector] near_field_offset", "must be finite");
      require(det.traces.empty(), "[detector] traces", "only valid for a homodyne detector");
    }
    for (auto t : det.traces)
      if (t == HomodyneTrace::kSqz || t == HomodyneTrace::kModSqz)
        require(sq.mode != SqueezeMode::kNone, "[detector] traces", "SQZ traces need a [squeezing] mode");
  }
  if (s.task == Task::kSqueezeTransfer)
    require(sq.mode == SqueezeMode::kFlipped, "[squeezing] mode", "squeeze-transfer needs mode = flipped");
  if (s.task == Task::kEfficiency && s.efficiency.has_traces) {
    const auto& e = s.efficiency;
    require(e.power_split_w > 0.0, "[efficiency] power_split", "must be > 0");
    require(e.power_homodyne_w > 0.0, "[efficiency] power_homodyne", "must be > 0");
    require(e.mod_split_db > 0.0, "[efficiency] mod_split_dB", "must lie above the shot-noise floor (> 0 dB)");
    require(e.mod_homodyne_db > 0.0, "[efficiency] mod_homodyne_dB", "must lie above the shot-noise floor (> 0 dB)");
  }
  if (s.excess_db) require(*s.excess_db > 0.0, "[analysis] excess_dB", "must be > 0");
  if (s.mc) {
    require(s.mc->samples >= kMinSamples, "[mc] samples", "must be >= 1000");
    require(s.mc->batch > 0, "[mc] batch", "must be > 0");
  }
}

/// Builds a Scenario from a parsed INI tree. Throws ScenarioError naming the
/// offending "[section] key".
inline Scenario scenario_from_tree(const boost::property_tree::ptree& tree) {
  using detail::Section;
  static const std::set<std::string> kSections{"scenario", "source",   "modulation", "squeezing", "detector",
                                               "mc",       "analysis", "efficiency", "output"};
  for (const auto& [name, child] : tree) {
    if (!kSections.count(name))
      throw ScenarioError("[" + name + "]", child.empty() ? "key outside any section" : "unknown section");
  }
  auto section = [&](const char* name) {
    const auto it = tree.find(name);
    return Section(name, it == tree.not_found() ? nullptr : &it->second);
  };

  Scenario s;
  Section sc = section("scenario");
  if (auto v = sc.text("name")) s.name = *v;
  if (auto v = sc.text("task")) s.task = detail::parse_task(detail::where("scenario", "task"), *v);
  if (auto v = sc.real("n_max")) {
    detail::require(*v == std::floor(*v), "[scenario] n_max", "must be an integer");
    s.n_max = static_cast<int>(*v);
  }
  sc.reject_unknown();

  Section src = section("source");
  s.source.power_w = src.quantity_or("power", detail::kPowerUnits, s.source.power_w);
  s.source.wavelength_m = src.quantity_or("wavelength", detail::kLengthUnits, s.source.wavelength_m);
  s.source.waist_m = src.quantity_or("waist", detail::kLengthUnits, s.source.waist_m);
  s.source.rbw_hz = src.quantity_or("rbw", detail::kFrequencyUnits, s.source.rbw_hz);
  s.source.vbw_hz = src.quantity_or("vbw", detail::kFrequencyUnits, s.source.rbw_hz);
  src.reject_unknown();

  Section mod = section("modulation");
  auto& m = s.modulation;
  m.displacement_m = mod.quantity_or("d", detail::kLengthUnits, 0.0);
  const auto p = mod.real("p_per_m");
  const auto theta = mod.quantity("theta", detail::kAngleUnits);
  detail::require(!(p && theta), "[modulation] theta", "give either p_per_m or theta, not both");
  if (p) m.momentum_per_m = *p;
  if (theta) m.momentum_per_m = tilt_to_momentum(*theta, s.source.wavelength_m);
  m.displacement_fraction = mod.real("displacement_fraction");
  m.total_signal_rel = mod.real("total_signal_rel");
  m.peak_db = mod.real("peak_dB");
  m.tilt_phase_rad = mod.real("tilt_phase_rad").value_or(0.0);
  m.frequency_hz = mod.quantity_or("frequency", detail::kFrequencyUnits, m.frequency_hz);
  mod.reject_unknown();

  Section sq = section("squeezing");
  if (auto v = sq.text("mode")) {
    const std::string t = detail::lower(*v);
    if (t == "none") s.squeezing.mode = SqueezeMode::kNone;
    else if (t == "tem10") s.squeezing.mode = SqueezeMode::kTem10;
    else if (t == "flipped") s.squeezing.mode = SqueezeMode::kFlipped;
    else throw ScenarioError("[squeezing] mode", "unknown mode '" + *v + "' (none|tem10|flipped)");
  }
  s.squeezing.squeeze_db = sq.real("squeeze_dB").value_or(0.0);
  s.squeezing.antisqueeze_db = sq.real("antisqueeze_dB").value_or(s.squeezing.squeeze_db);
  s.squeezing.angle_rad = sq.real("angle_rad").value_or(0.0);
  s.squeezing.combiner_efficiency = sq.real("combiner_efficiency").value_or(1.0);
  sq.reject_unknown();

  Section det = section("detector");
  auto& d = s.detector;
  if (auto v = det.text("type")) {
    const std::string t = detail::lower(*v);
    if (t == "split") d.kind = DetectorKind::kSplit;
    else if (t == "homodyne") d.kind = DetectorKind::kHomodyne;
    else throw ScenarioError("[detector] type", "unknown detector '" + *v + "' (split|homodyne)");
  } else if (s.task == Task::kSweep) {
    throw ScenarioError("[detector] type", "a sweep needs exactly one detector (split|homodyne)");
  }
  const auto points = det.real("points");
  if (points) detail::require(*points == std::floor(*points), "[detector] points", "must be an integer");
  if (d.kind == DetectorKind::kSplit) {
    const auto z = det.quantity("z", detail::kLengthUnits);
    const auto z0 = det.quantity("z_start", detail::kLengthUnits);
    const auto z1 = det.quantity("z_stop", detail::kLengthUnits);
    detail::require(!(z && (z0 || z1)), "[detector] z", "give either z or z_start/z_stop");
    detail::require(z0.has_value() == z1.has_value(), "[detector] z_start", "z_start and z_stop go together");
    if (z0) d.sweep = {*z0, *z1, points ? static_cast<int>(*points) : 101};
    else d.sweep = {z.value_or(0.0), z.value_or(0.0), 1};
    d.near_field_offset_m = det.quantity_or("near_field_offset", detail::kLengthUnits, 0.0);
    d.geometry.gap_m = det.quantity_or("gap", detail::kLengthUnits, 0.0);
    d.geometry.half_width_m =
        det.quantity_or("half_width", detail::kLengthUnits, std::numeric_limits<double>::infinity());
  } else {
    if (auto lo = det.text("lo"))
      detail::require(detail::lower(*lo) == "tem10", "[detector] lo", "only lo = tem10 is supported");
    const auto phi = det.real("phi_rad");
    const auto p0 = det.real("phi_start_rad");
    const auto p1 = det.real("phi_stop_rad");
    detail::require(!(phi && (p0 || p1)), "[detector] phi_rad", "give either phi_rad or phi_start_rad/phi_stop_rad");
    detail::require(p0.has_value() == p1.has_value(), "[detector] phi_start_rad",
                    "phi_start_rad and phi_stop_rad go together");
    if (p0) d.sweep = {*p0, *p1, points ? static_cast<int>(*points) : 181};
    else d.sweep = {phi.value_or(0.0), phi.value_or(0.0), 1};
    if (auto t = det.text("traces")) {
      std::stringstream ss(*t);
      std::string item;
      while (std::getline(ss, item, ','))
        d.traces.push_back(detail::parse_trace(detail::where("detector", "traces"), item));
    }
  }
  if (points && d.sweep.points == 1 && *points != 1)
    throw ScenarioError("[detector] points", "only valid with a start/stop sweep");
  d.electronic_floor_db = det.real("electronic_floor_dB");
  det.reject_unknown();

  Section mc = section("mc");
  if (mc.present()) {
    McConfig cfg;
    if (auto v = mc.real("samples")) cfg.samples = static_cast<std::uint64_t>(std::max(0.0, *v));
    if (auto v = mc.real("seed")) cfg.seed = static_cast<std::uint64_t>(std::max(0.0, *v));
    if (auto v = mc.real("batch")) cfg.batch = static_cast<std::uint64_t>(std::max(0.0, *v));
    if (auto v = mc.real("workers")) cfg.workers = static_cast<unsigned>(std::max(0.0, *v));
    s.mc = cfg;
  }
  mc.reject_unknown();

  Section an = section("analysis");
  s.excess_db = an.real("excess_dB");
  an.reject_unknown();

  Section eff = section("efficiency");
  if (eff.present()) {
    auto& e = s.efficiency;
    e.has_traces = true;
    e.power_split_w = eff.quantity_or("power_split", detail::kPowerUnits, 0.0);
    e.power_homodyne_w = eff.quantity_or("power_homodyne", detail::kPowerUnits, 0.0);
    e.mod_split_db = eff.real("mod_split_dB").value_or(0.0);
    e.mod_homodyne_db = eff.real("mod_homodyne_dB").value_or(0.0);
  }
  eff.reject_unknown();

  Section out = section("output");
  if (auto v = out.text("path")) s.output.path = *v;
  if (auto v = out.text("format")) {
    if (*v == "csv") s.output.format = TableFormat::kCsv;
    else if (*v == "json-lines") s.output.format = TableFormat::kJsonLines;
    else throw ScenarioError("[output] format", "expected csv or json-lines, got '" + *v + "'");
  }
  if (auto v = out.text("trace_noise")) s.output.trace_noise = detail::parse_bool("[output] trace_noise", *v);
  if (auto v = out.real("seed")) s.output.seed = static_cast<std::uint64_t>(std::max(0.0, *v));
  if (auto v = out.real("workers")) s.output.workers = static_cast<unsigned>(std::max(0.0, *v));
  out.reject_unknown();

  validate(s);
  return s;
}

inline boost::property_tree::ptree parse_ini_tree(const std::string& text, const std::string& origin = "<string>") {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ScenarioError(origin + ":" + std::to_string(e.line()), e.message());
  }
  return tree;
}

inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>") {
  return scenario_from_tree(parse_ini_tree(text, origin));
}

/// Canonical INI text (SI units). parse_scenario(to_ini(s)) reproduces s.
inline std::string to_ini(const Scenario& s) {
  using detail::format_real;
  std::ostringstream os;
  os << "[scenario]\nname = " << s.name << "\ntask = " << detail::task_name(s.task) << "\nn_max = " << s.n_max
     << "\n\n[source]\npower_W = " << format_real(s.source.power_w)
     << "\nwavelength_m = " << format_real(s.source.wavelength_m) << "\nwaist_m = " << format_real(s.source.waist_m)
     << "\nrbw_Hz = " << format_real(s.source.rbw_hz) << "\nvbw_Hz = " << format_real(s.source.vbw_hz) << "\n";
  const auto& m = s.modulation;
  os << "\n[modulation]\n";
  if (m.displacement_fraction) {
    os << "displacement_fraction = " << format_real(*m.displacement_fraction) << "\n";
    if (m.total_signal_rel) os << "total_signal_rel = " << format_real(*m.total_signal_rel) << "\n";
    if (m.peak_db) os << "peak_dB = " << format_real(*m.peak_db) << "\n";
  } else {
    os << "d_m = " << format_real(m.displacement_m) << "\np_per_m = " << format_real(m.momentum_per_m) << "\n";
  }
  os << "tilt_phase_rad = " << format_real(m.tilt_phase_rad) << "\nfrequency_Hz = " << format_real(m.frequency_hz)
     << "\n";
  const auto& q = s.squeezing;
  os << "\n[squeezing]\nmode = " << detail::squeeze_mode_name(q.mode) << "\nsqueeze_dB = " << format_real(q.squeeze_db)
     << "\nantisqueeze_dB = " << format_real(q.antisqueeze_db) << "\nangle_rad = " << format_real(q.angle_rad)
     << "\ncombiner_efficiency = " << format_real(q.combiner_efficiency) << "\n";
  const auto& d = s.detector;
  os << "\n[detector]\ntype = " << (d.kind == DetectorKind::kSplit ? "split" : "homodyne") << "\n";
  const bool sweep = d.sweep.points > 1 || d.sweep.start != d.sweep.stop;
  if (d.kind == DetectorKind::kSplit) {
    if (sweep)
      os << "z_start_m = " << format_real(d.sweep.start) << "\nz_stop_m = " << format_real(d.sweep.stop)
         << "\npoints = " << d.sweep.points << "\n";
    else
      os << "z_m = " << format_real(d.sweep.start) << "\n";
    os << "near_field_offset_m = " << format_real(d.near_field_offset_m)
       << "\ngap_m = " << format_real(d.geometry.gap_m) << "\nhalf_width_m = " << format_real(d.geometry.half_width_m)
       << "\n";
  } else {
    os << "lo = tem10\n";
    if (sweep)
      os << "phi_start_rad = " << format_real(d.sweep.start) << "\nphi_stop_rad = " << format_real(d.sweep.stop)
         << "\npoints = " << d.sweep.points << "\n";
    else
      os << "phi_rad = " << format_real(d.sweep.start) << "\n";
    if (!d.traces.empty()) {
      os << "traces = ";
      for (std::size_t i = 0; i < d.traces.size(); ++i) os << (i ? "," : "") << detail::trace_name(d.traces[i]);
      os << "\n";
    }
  }
  if (d.electronic_floor_db) os << "electronic_floor_dB = " << format_real(*d.electronic_floor_db) << "\n";
  if (s.mc)
    os << "\n[mc]\nsamples = " << s.mc->samples << "\nseed = " << s.mc->seed << "\nbatch = " << s.mc->batch
       << "\nworkers = " << s.mc->workers << "\n";
  if (s.excess_db) os << "\n[analysis]\nexcess_dB = " << format_real(*s.excess_db) << "\n";
  if (s.efficiency.has_traces) {
    const auto& e = s.efficiency;
    os << "\n[efficiency]\npower_split_W = " << format_real(e.power_split_w)
       << "\npower_homodyne_W = " << format_real(e.power_homodyne_w)
       << "\nmod_split_dB = " << format_real(e.mod_split_db) << "\nmod_homodyne_dB = " << format_real(e.mod_homodyne_db)
       << "\n";
  }
  os << "\n[output]\n";
  if (!s.output.path.empty()) os << "path = " << s.output.path << "\n";
  os << "format = " << (s.output.format == TableFormat::kCsv ? "csv" : "json-lines")
     << "\ntrace_noise = " << (s.output.trace_noise ? "true" : "false") << "\nseed = " << s.output.seed
     << "\nworkers = " << s.output.workers << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Execution

/// Source beam, before modulation and squeezing.
inline BeamState scenario_beam(const Scenario& s) {
  return make_coherent_beam(s.source.power_w, s.source.wavelength_m, s.source.waist_m, s.source.rbw_hz, s.n_max);
}

/// Explicit modulation for a given overall strength (signal units of a perfect TEM10 homodyne).
inline Modulation modulation_for_total(const Scenario& s, double photons, double total_signal_rel) {
  const auto& m = s.modulation;
  if (!(photons > 0.0)) throw UndefinedLimitError("modulation strength is undefined for N = 0 photons");
  const double f = *m.displacement_fraction;
  const double a = std::sqrt(f * total_signal_rel / (4.0 * photons));
  const double b = std::sqrt((1.0 - f) * total_signal_rel / (4.0 * photons));
  return {a * s.source.waist_m, 2.0 * b / s.source.waist_m, m.frequency_hz, m.tilt_phase_rad};
}

/// Source state with the configured squeezing routed in through the even/odd combiner.
inline BeamState squeezed_source(const Scenario& s, bool squeeze) {
  BeamState state = scenario_beam(s);
  const auto& q = s.squeezing;
  if (!squeeze || q.mode == SqueezeMode::kNone) return state;
  const ModeShape shape = q.mode == SqueezeMode::kTem10 ? tem_shape(1, s.n_max) : flipped_shape(s.n_max);
  const auto dim = inject_squeezed_mode(NoiseCovariance::vacuum(s.n_max), shape, q.squeeze_db, q.antisqueeze_db,
                                        q.angle_rad);
  return combine_mach_zehnder(state, dim, q.combiner_efficiency);
}

namespace detail {

inline Setting sweep_setting(const Scenario& s, int i) {
  return {s.detector.kind == DetectorKind::kSplit ? SettingKind::kSplitZ : SettingKind::kHomodynePhase,
          s.detector.sweep.at(i)};
}

inline Measurement measure(const Scenario& s, const BeamState& state, double setting) {
  DetectorOptions opts{s.detector.electronic_floor_db};
  if (s.detector.kind == DetectorKind::kHomodyne) return homodyne_detect(state, tem_shape(1, s.n_max), setting, opts);
  Measurement m = split_detect(state, setting - s.detector.near_field_offset_m, s.detector.geometry, opts);
  m.setting.value = setting;
  return m;
}

inline NoiseProjection readout(const Scenario& s, const BeamState& state, double setting, NoiseCovariance& cov) {
  if (s.detector.kind == DetectorKind::kHomodyne) {
    cov = state.noise;
    return homodyne_projection(state, tem_shape(1, s.n_max), setting);
  }
  const BeamState here = propagate(state, setting - s.detector.near_field_offset_m);
  cov = here.noise;
  return split_projection(state, setting - s.detector.near_field_offset_m, s.detector.geometry);
}

inline std::vector<Measurement> sweep_rows(const Scenario& s, const BeamState& state) {
  std::vector<Measurement> rows(static_cast<std::size_t>(s.detector.sweep.points));
  parallel_for(rows.size(), s.output.workers, [&](std::size_t i) {
    rows[i] = measure(s, state, s.detector.sweep.at(static_cast<int>(i)));
  });
  return rows;
}

// Amplitude-squared scale that puts the sweep maximum of signal + noise at peak_db.
inline double peak_scale(const std::vector<Measurement>& unit_rows, double peak_db) {
  const double target = std::pow(10.0, peak_db / 10.0);
  double k = std::numeric_limits<double>::infinity();
  for (const auto& r : unit_rows) {
    if (r.noise_rel >= target) throw ScenarioError("[modulation] peak_dB", "lies below the noise floor of the sweep");
    if (r.signal_rel > 0.0) k = std::min(k, (target - r.noise_rel) / r.signal_rel);
  }
  if (std::isinf(k)) throw ScenarioError("[modulation] peak_dB", "the detector sees no modulation anywhere in the sweep");
  return k;
}

inline void add(std::vector<SummaryItem>& out, std::string key, double value, std::string unit) {
  out.push_back({std::move(key), value, std::move(unit), std::nullopt, 0.0});
}

}  // namespace detail

/// Modulation actually applied by a sweep scenario (resolving fractions and calibration).
inline Modulation resolve_modulation(const Scenario& s) {
  const auto& m = s.modulation;
  const BeamState beam = scenario_beam(s);
  if (!m.displacement_fraction) return {m.displacement_m, m.momentum_per_m, m.frequency_hz, m.tilt_phase_rad};
  if (m.total_signal_rel) return modulation_for_total(s, beam.field.photons, *m.total_signal_rel);
  // peak_dB: evaluate the sweep at a reference strength, then scale (signal is quadratic in amplitude).
  constexpr double kReference = 1.0;
  const Modulation ref = modulation_for_total(s, beam.field.photons, kReference);
  const bool squeeze = s.squeezing.mode != SqueezeMode::kNone;
  const auto rows = detail::sweep_rows(s, apply_modulation(squeezed_source(s, squeeze), ref));
  return modulation_for_total(s, beam.field.photons, kReference * detail::peak_scale(rows, *m.peak_db));
}

namespace detail {

inline void run_qnl(const Scenario& s, RunResult& r) {
  const BeamState beam = scenario_beam(s);
  const double n = beam.field.photons;
  const double d = qnl_displacement(s.source.waist_m, n);
  const double p = qnl_momentum(s.source.waist_m, n);
  add(r.summary, "photons", n, "1");
  add(r.summary, "d_qnl", d, "m");
  add(r.summary, "p_qnl", p, "1/m");
  add(r.summary, "theta_qnl", momentum_to_tilt(p, s.source.wavelength_m), "rad");
  if (s.squeezing.mode != SqueezeMode::kNone) {
    add(r.summary, "d_sqz", sub_qnl_displacement(d, s.squeezing.squeeze_db), "m");
    if (s.excess_db) {
      // Floor of a TEM10 homodyne at phi_LO = 0 with the configured squeezing.
      const BeamState sq = squeezed_source(s, true);
      const double floor = homodyne_detect(sq, tem_shape(1, s.n_max), 0.0).noise_rel;
      const double d_exp = displacement_from_excess_db(*s.excess_db, floor, d);
      add(r.summary, "floor_rel", floor, "1");
      add(r.summary, "d_exp", d_exp, "m");
      add(r.summary, "d_exp_over_d_qnl_squared", (d_exp / d) * (d_exp / d), "1");
      // Forward check: that displacement on the squeezed beam reads excess_dB above the floor.
      const auto m = homodyne_detect(apply_modulation(sq, {d_exp, 0.0, s.modulation.frequency_hz}),
                                     tem_shape(1, s.n_max), 0.0);
      add(r.summary, "simulated_excess_dB", 10.0 * std::log10((m.signal_rel + m.noise_rel) / m.noise_rel), "dB");
    }
  } else if (s.excess_db) {
    add(r.summary, "d_exp", displacement_from_excess_db(*s.excess_db, 1.0, d), "m");
  }
}

inline void add_mc(const Scenario& s, const BeamState& state, NamedTable& t, double& worst) {
  if (!s.mc) return;
  t.mc_noise.resize(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    NoiseCovariance cov;
    const auto proj = readout(s, state, t.rows[i].setting.value, cov);
    const double floor_extra = t.rows[i].noise_rel - (proj.vector.dot(cov.matrix * proj.vector) + proj.vacuum) / proj.reference;
    t.mc_noise[i] = mc_detector_noise(cov, proj, *s.mc) + floor_extra;
    worst = std::max(worst, std::abs(t.mc_noise[i] / t.rows[i].noise_rel - 1.0));
  }
}

inline void run_sweep(const Scenario& s, RunResult& r) {
  const BeamState beam = scenario_beam(s);
  const bool squeeze = s.squeezing.mode != SqueezeMode::kNone;
  const Modulation mod = resolve_modulation(s);
  const bool modulated = s.modulation.enabled();
  add(r.summary, "photons", beam.field.photons, "1");
  add(r.summary, "d_qnl", qnl_displacement(s.source.waist_m, beam.field.photons), "m");
  add(r.summary, "p_qnl", qnl_momentum(s.source.waist_m, beam.field.photons), "1/m");
  if (modulated) {
    add(r.summary, "displacement", mod.displacement_m, "m");
    add(r.summary, "momentum", mod.momentum_per_m, "1/m");
  }

  struct Variant {
    std::string name;
    bool squeeze, modulate;
  };
  std::vector<Variant> variants;
  if (s.detector.traces.empty()) {
    variants.push_back({s.name, squeeze, modulated});
  } else {
    for (auto t : s.detector.traces)
      variants.push_back({trace_name(t), t == HomodyneTrace::kSqz || t == HomodyneTrace::kModSqz,
                          t == HomodyneTrace::kMod || t == HomodyneTrace::kModSqz});
  }

  double mc_worst = 0.0;
  std::uint64_t trace_seed = s.output.seed;
  for (const auto& v : variants) {
    BeamState state = squeezed_source(s, v.squeeze);
    if (v.modulate && modulated) state = apply_modulation(state, mod);
    NamedTable t{v.name, sweep_rows(s, state), std::nullopt, {}};
    if (s.output.trace_noise) {
      const auto trace = spectrum_trace(t.rows, s.source.rbw_hz, s.source.vbw_hz, trace_seed, s.output.workers);
      std::vector<double> db;
      for (const auto& p : trace.points) db.push_back(p.db);
      t.db = std::move(db);
    }
    ++trace_seed;
    add_mc(s, state, t, mc_worst);

    const std::string prefix = s.detector.traces.empty() ? "" : v.name + ".";
    auto level = [&](std::size_t i) { return t.db ? (*t.db)[i] : t.rows[i].total_db(); };
    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      if (level(i) > level(imax)) imax = i;
      if (level(i) < level(imin)) imin = i;
    }
    add(r.summary, prefix + "max_dB", level(imax), "dB");
    add(r.summary, prefix + "argmax", t.rows[imax].setting.value, setting_unit(t.rows[imax].setting.kind));
    add(r.summary, prefix + "min_dB", level(imin), "dB");
    add(r.summary, prefix + "argmin", t.rows[imin].setting.value, setting_unit(t.rows[imin].setting.kind));
    if (s.detector.kind == DetectorKind::kSplit) {
      const double near = measure(s, state, s.detector.near_field_offset_m).total_db();
      const double far = t.rows.back().total_db();
      add(r.summary, prefix + "near_field_dB", near, "dB");
      add(r.summary, prefix + "far_field_dB", far, "dB");
      add(r.summary, prefix + "far_minus_near_dB", far - near, "dB");
    } else {
      add(r.summary, prefix + "noise_rel_phi0", measure(s, state, 0.0).noise_rel, "1");
      add(r.summary, prefix + "noise_rel_phi_half_pi", measure(s, state, std::numbers::pi / 2).noise_rel, "1");
    }
    r.tables.push_back(std::move(t));
  }
  if (s.mc) {
    add(r.summary, "mc_max_rel_deviation", mc_worst, "1");
    add(r.summary, "mc_tolerance", mc_tolerance(s.mc->samples), "1");
  }
}

inline void run_efficiency(const Scenario& s, RunResult& r) {
  // Matched modulation quadrature: pure displacement, split detector at the waist.
  const BeamState beam = scenario_beam(s);
  const double n = beam.field.photons;
  const Modulation mod{qnl_displacement(s.source.waist_m, n), 0.0, s.modulation.frequency_hz};
  const BeamState state = apply_modulation(beam, mod);
  const auto sd = split_detect(state, 0.0, s.detector.geometry);
  const auto hd = homodyne_detect(state, tem_shape(1, s.n_max), 0.0);
  add(r.summary, "snr_split", sd.snr, "1");
  add(r.summary, "snr_homodyne", hd.snr, "1");
  add(r.summary, "ratio_equal_power", efficiency_ratio(sd, hd), "1");
  add(r.summary, "ratio_theory_equal_power", theoretical_efficiency_ratio(n, n), "1");
  if (s.mc) {
    NoiseCovariance cov;
    Scenario split = s;
    split.detector.kind = DetectorKind::kSplit;
    split.detector.near_field_offset_m = 0.0;
    const auto proj_sd = readout(split, state, 0.0, cov);
    const double mc_sd = mc_detector_noise(cov, proj_sd, *s.mc);
    const auto proj_hd = homodyne_projection(state, tem_shape(1, s.n_max), 0.0);
    const double mc_hd = mc_detector_noise(state.noise, proj_hd, *s.mc);
    add(r.summary, "ratio_equal_power_mc", (sd.signal_rel / mc_sd) / (hd.signal_rel / mc_hd), "1");
    add(r.summary, "mc_tolerance", mc_tolerance(s.mc->samples), "1");
  }
  if (s.efficiency.has_traces) {
    const auto& e = s.efficiency;
    add(r.summary, "ratio_exp",
        experimental_ratio_from_traces(e.power_split_w, e.power_homodyne_w, e.mod_split_db, e.mod_homodyne_db), "1");
    const double lambda = s.source.wavelength_m, t = 1.0 / s.source.rbw_hz;
    add(r.summary, "ratio_theory_at_powers",
        theoretical_efficiency_ratio(photons_in(e.power_split_w, lambda, t), photons_in(e.power_homodyne_w, lambda, t)),
        "1");
  }
}

inline void run_squeeze_transfer(const Scenario& s, RunResult& r) {
  const auto& q = s.squeezing;
  const double vf = db_to_variance(q.squeeze_db);
  const BeamState state = squeezed_source(s, true);
  const double tem10 = state.noise.matrix(2, 2);
  const double vf_out = quadrature_variance(state.noise, flipped_shape(s.n_max), q.angle_rad);
  add(r.summary, "flipped_variance_in", vf, "1");
  add(r.summary, "flipped_variance_out", vf_out, "1");
  add(r.summary, "tem10_variance_scalar", squeeze_transfer_flipped_to_tem10(vf_out), "1");
  add(r.summary, "tem10_variance_covariance", tem10, "1");
  add(r.summary, "tem10_dB", variance_to_db(tem10), "dB");
  add(r.summary, "split_noise_at_waist", split_detect(state, 0.0).noise_rel, "1");
}

}  // namespace detail

/// Evaluates a validated scenario. Deterministic for fixed seeds.
inline RunResult run(const Scenario& s) {
  validate(s);
  RunResult r;
  switch (s.task) {
    case Task::kQnl: detail::run_qnl(s, r); break;
    case Task::kSweep: detail::run_sweep(s, r); break;
    case Task::kEfficiency: detail::run_efficiency(s, r); break;
    case Task::kSqueezeTransfer: detail::run_squeeze_transfer(s, r); break;
  }
  return r;
}

}  // namespace beamsense
