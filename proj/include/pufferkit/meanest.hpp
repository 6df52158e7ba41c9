// Copyright 2026 The Pufferkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Private multivariate mean estimation: chunked noisy means with a median
// aggregation step, plus the sample-complexity calculator. Each chunk's
// noisy mean depends only on its own rows and its own noise substream, so
// the release is reproducible chunk by chunk.

#ifndef PUFFERKIT_MEANEST_HPP
#define PUFFERKIT_MEANEST_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"
#include "pufferkit/rng.hpp"

namespace pufferkit {

enum class MedianKind { kGeometric, kCoordinatewise };

struct MeanEstConfig {
  double eps = 1.0;
  double beta = 0.05;        // target failure probability
  double c = 1.0;            // second-moment bound E[||X - mu||^2]
  double m_multiplier = 200.0;
  MedianKind median = MedianKind::kGeometric;
  double tol = 1e-9;
  int max_iters = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eps > 0) || !(beta > 0) || beta >= 1 || !(c > 0) ||
        !(m_multiplier > 0) || !(tol > 0) || max_iters < 1) {
      throw ValidationError("invalid mean-estimation configuration");
    }
  }

  int chunk_count() const {
    const int m = static_cast<int>(
        std::floor(m_multiplier * std::log(1.0 / beta)));
    if (m < 1) {
      throw ValidationError("m_multiplier and beta give zero chunks");
    }
    return m;
  }
};

struct GeometricMedianResult {
  Vector point;
  int iterations = 0;
  bool converged = false;
};

// Weiszfeld iteration with the standard adjustment when an iterate lands on
// a data point; stops on a gradient-norm certificate <= tol.
inline GeometricMedianResult geometric_median(const Matrix& points, double tol,
                                              int max_iters) {
  if (points.rows() < 1) throw ValidationError("no points");
  if (!(tol > 0) || max_iters < 1) throw ValidationError("invalid tolerance");
  const Eigen::Index m = points.rows(), d = points.cols();
  GeometricMedianResult out;
  out.point = points.colwise().mean();
  if (m == 1) {
    out.point = points.row(0);
    out.converged = true;
    return out;
  }
  // The minimizer is either a data point or an interior stationary point.
  // Check the data points first: Weiszfeld converges only sublinearly when
  // the optimum sits on one, but the subgradient certificate there is exact.
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector r = Vector::Zero(d);
    double anchors = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector diff = (points.row(i) - points.row(j)).transpose();
      const double dist = diff.norm();
      if (dist < 1e-14) {
        anchors += 1;
        continue;
      }
      r += diff / dist;
    }
    if (r.norm() <= anchors + tol) {
      out.point = points.row(j);
      out.converged = true;
      return out;
    }
  }
  for (int t = 0; t < max_iters; ++t) {
    out.iterations = t + 1;
    Vector r = Vector::Zero(d);  // sum of unit directions toward the points
    double weight_sum = 0;
    Vector weighted = Vector::Zero(d);
    double anchors = 0;  // multiplicity of data points equal to the iterate
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector diff = points.row(i).transpose() - out.point;
      const double dist = diff.norm();
      if (dist < 1e-14) {
        anchors += 1;
        continue;
      }
      r += diff / dist;
      weight_sum += 1.0 / dist;
      weighted += points.row(i).transpose() / dist;
    }
    const double rnorm = r.norm();
    // Subgradient optimality: ||sum of unit directions|| <= anchor count.
    if (rnorm <= anchors + tol) {
      out.converged = true;
      return out;
    }
    if (anchors == 0) {
      out.point = weighted / weight_sum;
    } else {
      const double step = std::max(0.0, 1.0 - anchors / rnorm);
      out.point += step * (r / weight_sum);
    }
  }
  return out;
}

inline Vector coordinatewise_median(const Matrix& points) {
  if (points.rows() < 1) throw ValidationError("no points");
  const Eigen::Index m = points.rows(), d = points.cols();
  Vector out(d);
  std::vector<double> col(m);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) col[i] = points(i, j);
    std::sort(col.begin(), col.end());
    out[j] = m % 2 == 1 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
  }
  return out;
}

struct MeanEstReport {
  Vector estimate;
  Matrix noisy_chunk_means;  // m x d
  int m = 0;                 // chunk count
  Eigen::Index chunk_size = 0;
  double sigma2 = 0.0;
  int median_iterations = 0;
  bool median_converged = true;
  // Failure probability the chosen multiplier actually corresponds to under
  // the design value 200 log(1/beta).
  double effective_beta = 0.0;
};

// Chunked private mean: m = floor(m_multiplier log(1/beta)) chunks of
// k = floor(n/m) consecutive rows; each chunk mean gets N(0, sigma2 I_d)
// with sigma2 = c d m^2 / (2 n^2 eps); leftover rows are discarded; the
// configured median aggregates the noisy chunk means.
inline MeanEstReport private_mean(const Matrix& samples,
                                  const MeanEstConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = samples.rows(), d = samples.cols();
  if (n < 1 || d < 1) throw ValidationError("empty sample matrix");
  if (!samples.allFinite()) throw ValidationError("samples must be finite");
  MeanEstReport report;
  report.m = cfg.chunk_count();
  if (n < report.m) {
    throw ValidationError(
        "fewer samples than chunks; lower m_multiplier or beta");
  }
  report.chunk_size = n / report.m;
  report.sigma2 = cfg.c * static_cast<double>(d) * report.m * report.m /
                  (2.0 * static_cast<double>(n) * static_cast<double>(n) *
                   cfg.eps);
  report.effective_beta = std::exp(-report.m / 200.0);
  const double sd = std::sqrt(report.sigma2);
  report.noisy_chunk_means.resize(report.m, d);
  Rng base(cfg.seed, 0x3EA0);
  for (int p = 0; p < report.m; ++p) {
    Rng rng = base.substream(p);
    const Vector mean =
        samples.middleRows(p * report.chunk_size, report.chunk_size)
            .colwise()
            .mean();
    for (Eigen::Index j = 0; j < d; ++j) {
      report.noisy_chunk_means(p, j) = mean[j] + rng.gaussian(0.0, sd);
    }
  }
  if (cfg.median == MedianKind::kGeometric) {
    const auto gm =
        geometric_median(report.noisy_chunk_means, cfg.tol, cfg.max_iters);
    report.estimate = gm.point;
    report.median_iterations = gm.iterations;
    report.median_converged = gm.converged;
  } else {
    report.estimate = coordinatewise_median(report.noisy_chunk_means);
  }
  return report;
}

struct SampleComplexityConstants {
  // k >= var_term * d c / alpha'^2 and
  // k >= noise_term * d c / (alpha' sqrt(eps)), alpha' = alpha / alpha_slack.
  double var_term = 4.0 / 0.1;
  double noise_term = 2.0 * std::sqrt(std::log(20.0));
  double alpha_slack = 1.04;
  double m_multiplier = 200.0;
};

struct SampleComplexityResult {
  long long n0 = 0;
  int m = 0;
  long long chunk_size = 0;
  SampleComplexityConstants constants;
};

inline SampleComplexityResult sample_complexity(
    double alpha, double beta, double eps, std::size_t d, double c,
    const SampleComplexityConstants& constants = {}) {
  if (!(alpha > 0) || !(beta > 0) || beta >= 1 || !(eps > 0) || d < 1 ||
      !(c > 0)) {
    throw ValidationError("invalid sample-complexity inputs");
  }
  SampleComplexityResult out;
  out.constants = constants;
  out.m = static_cast<int>(
      std::floor(constants.m_multiplier * std::log(1.0 / beta)));
  if (out.m < 1) throw ValidationError("multiplier and beta give zero chunks");
  const double ap = alpha / constants.alpha_slack;
  const double k1 = constants.var_term * d * c / (ap * ap);
  const double k2 = constants.noise_term * d * c / (ap * std::sqrt(eps));
  out.chunk_size = static_cast<long long>(std::ceil(std::max(k1, k2)));
  out.n0 = static_cast<long long>(out.m) * out.chunk_size;
  return out;
}

}  // namespace pufferkit

#endif  // PUFFERKIT_MEANEST_HPP
