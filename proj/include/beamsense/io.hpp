#pragma once

// Structured text I/O: beam-state JSON documents and measurement tables
// (CSV or JSON lines).

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamsense/beam.hpp"
#include "beamsense/detect.hpp"
#include "beamsense/errors.hpp"

namespace beamsense {

inline constexpr const char* kStateFormat = "beamsense-state";
inline constexpr int kStateVersion = 1;
inline constexpr const char* kQuadratureOrdering = "X+_0,X-_0,X+_1,X-_1,...,X+_nmax,X-_nmax,X+_res,X-_res";
inline constexpr const char* kQuadratureConvention =
    "X+ = a + a^dag, X- = -i(a - a^dag), vacuum covariance = identity";

inline nlohmann::json state_to_json(const BeamState& s) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : s.field.coeffs) coeffs.push_back({c.real(), c.imag()});
  nlohmann::json coeffs_q = nlohmann::json::array();
  for (const auto& c : s.field.coeffs_quadrature) coeffs_q.push_back({c.real(), c.imag()});
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.noise.matrix.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < s.noise.matrix.cols(); ++j) row.push_back(s.noise.matrix(i, j));
    cov.push_back(std::move(row));
  }
  return {{"format", kStateFormat},
          {"version", kStateVersion},
          {"ordering", kQuadratureOrdering},
          {"convention", kQuadratureConvention},
          {"n_max", s.n_max()},
          {"waist_m", s.field.geom.waist_m},
          {"wavelength_m", s.field.geom.wavelength_m},
          {"photons", s.field.photons},
          {"integration_s", s.field.integration_s},
          {"z_m", s.z_m},
          {"coeffs", std::move(coeffs)},
          {"coeffs_quadrature", std::move(coeffs_q)},
          {"covariance", std::move(cov)}};
}

inline BeamState state_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kStateFormat)
      throw UsageError("not a beamsense state document");
    if (j.at("version").get<int>() != kStateVersion)
      throw UsageError("unsupported state version " + j.at("version").dump());
    if (j.at("ordering").get<std::string>() != kQuadratureOrdering)
      throw UsageError("unsupported quadrature ordering");
    const int n_max = j.at("n_max").get<int>();
    BeamState s;
    s.field.geom = BeamGeometry(j.at("waist_m").get<double>(), j.at("wavelength_m").get<double>());
    s.field.photons = j.at("photons").get<double>();
    s.field.integration_s = j.at("integration_s").get<double>();
    s.z_m = j.at("z_m").get<double>();
    const auto& coeffs = j.at("coeffs");
    if (static_cast<int>(coeffs.size()) != n_max + 1) throw UsageError("coeffs length != n_max + 1");
    for (const auto& c : coeffs) s.field.coeffs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    const auto& coeffs_q = j.at("coeffs_quadrature");
    if (coeffs_q.size() != coeffs.size()) throw UsageError("coeffs_quadrature length != n_max + 1");
    for (const auto& c : coeffs_q)
      s.field.coeffs_quadrature.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    const auto& cov = j.at("covariance");
    const int dim = 2 * (n_max + 2);
    if (static_cast<int>(cov.size()) != dim) throw UsageError("covariance has wrong dimension");
    s.noise.matrix.resize(dim, dim);
    for (int r = 0; r < dim; ++r) {
      if (static_cast<int>(cov[r].size()) != dim) throw UsageError("covariance row has wrong length");
      for (int c = 0; c < dim; ++c) s.noise.matrix(r, c) = cov[r][c].get<double>();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed state document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Measurement tables

enum class TableFormat { kCsv, kJsonLines };

inline const char* setting_unit(SettingKind kind) {
  return kind == SettingKind::kSplitZ ? "z_m" : "phi_lo_rad";
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// One row per measurement. `db` overrides the analytic 10 log10(signal + noise)
/// when a fluctuating trace is supplied; `mc` appends a Monte-Carlo noise column.
inline void write_table(std::ostream& os, const std::vector<Measurement>& rows, TableFormat format,
                        const std::vector<double>* db = nullptr, const std::vector<double>* mc = nullptr) {
  if ((db && db->size() != rows.size()) || (mc && mc->size() != rows.size()))
    throw UsageError("write_table: column lengths differ");
  const SettingKind kind = rows.empty() ? SettingKind::kSplitZ : rows.front().setting.kind;
  if (format == TableFormat::kCsv) {
    os << "# beamsense table v1; setting unit: " << setting_unit(kind)
       << "; signal_rel, noise_rel relative to shot noise (= 1); dB = "
       << (db ? "simulated analyzer trace, 10 log10(signal_rel + noise_rel * chi)" : "10 log10(signal_rel + noise_rel)")
       << '\n';
    os << "setting,signal_rel,noise_rel,snr,dB" << (mc ? ",mc_noise_rel" : "") << '\n';
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = rows[i];
    const double level = db ? (*db)[i] : m.total_db();
    if (format == TableFormat::kCsv) {
      os << detail::format_double(m.setting.value) << ',' << detail::format_double(m.signal_rel) << ','
         << detail::format_double(m.noise_rel) << ',' << detail::format_double(m.snr) << ','
         << detail::format_double(level);
      if (mc) os << ',' << detail::format_double((*mc)[i]);
      os << '\n';
    } else {
      nlohmann::json line = {{"setting", m.setting.value}, {"setting_unit", setting_unit(kind)},
                             {"signal_rel", m.signal_rel}, {"noise_rel", m.noise_rel},
                             {"snr", m.snr},               {"dB", level}};
      if (mc) line["mc_noise_rel"] = (*mc)[i];
      if (m.apertured) line["apertured"] = true;
      os << line.dump() << '\n';
    }
  }
}

}  // namespace beamsense
