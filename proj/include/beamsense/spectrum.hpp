#pragma once

// Zero-span spectrum-analyzer trace: each point displays
// 10 log10(signal + noise * chi), where chi is the unit-mean power-estimate
// fluctuation left after video filtering (relative variance 2 vbw / rbw).

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "beamsense/detect.hpp"
#include "beamsense/errors.hpp"
#include "beamsense/parallel.hpp"
#include "beamsense/philox.hpp"

namespace beamsense {

struct TracePoint {
  double setting = 0.0;
  double db = 0.0;  // relative to shot noise
};

struct SpectrumTrace {
  std::vector<TracePoint> points;
  double rbw_hz = 0.0;
  double vbw_hz = 0.0;
  std::uint64_t seed = 0;
};

/// Relative variance of the displayed noise power.
inline double trace_relative_variance(double rbw_hz, double vbw_hz) { return 2.0 * vbw_hz / rbw_hz; }

/// Unit-mean Gamma deviate with relative variance 2 vbw / rbw for point `index`.
/// Depends only on (seed, index).
inline double trace_fluctuation(double rbw_hz, double vbw_hz, std::uint64_t seed, std::uint64_t index) {
  const double shape = 1.0 / trace_relative_variance(rbw_hz, vbw_hz);
  const double u = uniform_pair(seed, RngStream::kTrace, index, 0).first;
  // u is in (0, 1]; the quantile at exactly 1 is infinite.
  const double p = u < 1.0 ? u : 1.0 - 0x1.0p-53;
  return boost::math::gamma_p_inv(shape, p) / shape;
}

inline SpectrumTrace spectrum_trace(std::span<const Measurement> sweep, double rbw_hz, double vbw_hz,
                                    std::uint64_t seed, unsigned workers = 1) {
  if (!(rbw_hz > 0.0) || !(vbw_hz > 0.0)) throw UsageError("rbw and vbw must be > 0");
  if (vbw_hz > rbw_hz) throw UsageError("video bandwidth must not exceed resolution bandwidth");
  SpectrumTrace trace{std::vector<TracePoint>(sweep.size()), rbw_hz, vbw_hz, seed};
  parallel_for(sweep.size(), workers, [&](std::size_t i) {
    const auto& m = sweep[i];
    const double chi = trace_fluctuation(rbw_hz, vbw_hz, seed, i);
    trace.points[i] = {m.setting.value, 10.0 * std::log10(m.signal_rel + m.noise_rel * chi)};
  });
  return trace;
}

}  // namespace beamsense
