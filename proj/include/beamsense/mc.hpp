#pragma once

// Monte-Carlo check of the analytic noise powers. Linearized quadrature
// fluctuations are zero-mean Gaussian with the state's covariance; samples are
// drawn with a counter-based generator keyed by sample index, and moments are
// reduced over fixed index blocks in index order, so results do not depend on
// batch size or worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamsense/beam.hpp"
#include "beamsense/detect.hpp"
#include "beamsense/errors.hpp"
#include "beamsense/parallel.hpp"
#include "beamsense/philox.hpp"

namespace beamsense {

inline constexpr std::uint64_t kMinSamples = 1000;

struct McConfig {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t batch = 65536;  // samples per scheduled chunk
  unsigned workers = 0;         // 0 = hardware concurrency

  void validate() const {
    if (samples < kMinSamples)
      throw UsageError("Monte-Carlo needs at least 1000 samples, got " + std::to_string(samples));
    if (batch == 0) throw UsageError("Monte-Carlo batch must be > 0");
  }
};

/// Relative tolerance 3 sqrt(2/M) on a sample variance.
inline double mc_tolerance(std::uint64_t samples) { return 3.0 * std::sqrt(2.0 / double(samples)); }

/// Zero-mean Gaussian sampler with covariance C = L L^T, L = V sqrt(Lambda).
class QuadratureSampler {
 public:
  explicit QuadratureSampler(const NoiseCovariance& cov, std::uint64_t seed = 1) : seed_(seed) {
    const Eigen::MatrixXd sym = 0.5 * (cov.matrix + cov.matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
    Eigen::VectorXd lambda = solver.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (lambda[i] < -1e-9)
        throw NumericError("covariance is not positive semidefinite: eigenvalue " +
                           std::to_string(lambda[i]) + " at index " + std::to_string(i));
      lambda[i] = std::sqrt(std::max(0.0, lambda[i]));
    }
    factor_ = solver.eigenvectors() * lambda.asDiagonal();
  }

  Eigen::Index dimension() const { return factor_.rows(); }
  const Eigen::MatrixXd& factor() const { return factor_; }

  /// Standard normal for coordinate j of sample `index`.
  double normal(std::uint64_t index, Eigen::Index j) const {
    const auto [g0, g1] = normal_pair(seed_, RngStream::kQuadrature, index, static_cast<std::uint32_t>(j / 2));
    return (j % 2 == 0) ? g0 : g1;
  }

  /// Full quadrature fluctuation vector of sample `index`.
  Eigen::VectorXd sample(std::uint64_t index) const {
    Eigen::VectorXd g(dimension());
    fill_normals(index, g);
    return factor_ * g;
  }

  /// Projection v . x of sample `index`, computed as (L^T v) . g.
  double project(std::uint64_t index, const Eigen::VectorXd& weights) const {
    double acc = 0.0;
    const Eigen::Index d = weights.size();
    for (Eigen::Index j = 0; j < d; j += 2) {
      const bool lead = weights[j] != 0.0;
      const bool trail = j + 1 < d && weights[j + 1] != 0.0;
      if (!lead && !trail) continue;
      const auto [g0, g1] = normal_pair(seed_, RngStream::kQuadrature, index, static_cast<std::uint32_t>(j / 2));
      if (lead) acc += weights[j] * g0;
      if (trail) acc += weights[j + 1] * g1;
    }
    return acc;
  }

 private:
  void fill_normals(std::uint64_t index, Eigen::VectorXd& g) const {
    for (Eigen::Index j = 0; j < g.size(); j += 2) {
      const auto [g0, g1] = normal_pair(seed_, RngStream::kQuadrature, index, static_cast<std::uint32_t>(j / 2));
      g[j] = g0;
      if (j + 1 < g.size()) g[j + 1] = g1;
    }
  }

  std::uint64_t seed_;
  Eigen::MatrixXd factor_;
};

namespace detail {

inline constexpr std::uint64_t kMomentBlock = 4096;

struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }
  double variance() const { return m2 / (count - 1.0); }
};

// Sample variance of f(index) over [0, samples), reduced block-by-block in index order.
template <class F>
double blocked_variance(const McConfig& cfg, F&& f) {
  cfg.validate();
  const std::uint64_t blocks = (cfg.samples + kMomentBlock - 1) / kMomentBlock;
  const std::uint64_t blocks_per_chunk = std::max<std::uint64_t>(1, (cfg.batch + kMomentBlock - 1) / kMomentBlock);
  const std::uint64_t chunks = (blocks + blocks_per_chunk - 1) / blocks_per_chunk;
  std::vector<Moments> partial(blocks);
  parallel_for(chunks, cfg.workers, [&](std::size_t chunk) {
    const std::uint64_t b0 = chunk * blocks_per_chunk;
    const std::uint64_t b1 = std::min(blocks, b0 + blocks_per_chunk);
    for (std::uint64_t b = b0; b < b1; ++b) {
      const std::uint64_t i1 = std::min(cfg.samples, (b + 1) * kMomentBlock);
      Moments m;
      for (std::uint64_t i = b * kMomentBlock; i < i1; ++i) m.push(f(i));
      partial[b] = m;
    }
  });
  Moments total;
  for (const auto& m : partial) total.merge(m);
  return total.variance();
}

}  // namespace detail

/// Empirical variance of v . x for x ~ N(0, C). Requires |v| = 1.
inline double mc_noise_power(const NoiseCovariance& cov, const Eigen::VectorXd& projection,
                             const McConfig& cfg) {
  if (projection.size() != cov.matrix.rows())
    throw UsageError("projection length does not match covariance dimension");
  if (std::abs(projection.norm() - 1.0) > 1e-6)
    throw UsageError("Monte-Carlo projection must be normalized (norm " +
                     std::to_string(projection.norm()) + ")");
  const QuadratureSampler sampler(cov, cfg.seed);
  const Eigen::VectorXd weights = sampler.factor().transpose() * projection;
  return detail::blocked_variance(cfg, [&](std::uint64_t i) { return sampler.project(i, weights); });
}

/// Monte-Carlo estimate of a detector's noise_rel for a given readout.
inline double mc_detector_noise(const NoiseCovariance& cov, const NoiseProjection& readout,
                                const McConfig& cfg) {
  const double norm = readout.vector.norm();
  if (!(norm > 0.0)) return readout.vacuum / readout.reference;
  const double variance = mc_noise_power(cov, readout.vector / norm, cfg);
  return (norm * norm * variance + readout.vacuum) / readout.reference;
}

/// Sample covariance of M full quadrature vectors; O(M d^2), intended for small d.
inline Eigen::MatrixXd empirical_covariance(const NoiseCovariance& cov, const McConfig& cfg) {
  cfg.validate();
  const QuadratureSampler sampler(cov, cfg.seed);
  const Eigen::Index d = sampler.dimension();
  const std::uint64_t blocks = (cfg.samples + detail::kMomentBlock - 1) / detail::kMomentBlock;
  std::vector<Eigen::MatrixXd> partial(blocks);
  parallel_for(blocks, cfg.workers, [&](std::size_t b) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    const std::uint64_t i1 = std::min<std::uint64_t>(cfg.samples, (b + 1) * detail::kMomentBlock);
    for (std::uint64_t i = b * detail::kMomentBlock; i < i1; ++i) {
      const Eigen::VectorXd x = sampler.sample(i);
      acc.noalias() += x * x.transpose();
    }
    partial[b] = std::move(acc);
  });
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : partial) total += p;
  return total / double(cfg.samples);  // mean is zero by construction
}

}  // namespace beamsense
