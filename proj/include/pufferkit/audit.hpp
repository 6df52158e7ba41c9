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
// Black-box privacy auditing: the null hypothesis is that the mechanism
// meets the target sliced-MI privacy level; a statistic above eps + r
// certifies a violation of that level and therefore of the stronger
// classic-MI and pointwise-ratio levels it is implied by.

#ifndef PUFFERKIT_AUDIT_HPP
#define PUFFERKIT_AUDIT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pufferkit/errors.hpp"
#include "pufferkit/smi.hpp"

namespace pufferkit {

enum class ThresholdMethod { kFixedMargin, kBootstrapNull };

struct AuditConfig {
  double eps = 0.1;
  double level_alpha = 0.05;
  double margin = 0.0;  // fixed-margin r; ignored in bootstrap mode
  ThresholdMethod threshold_method = ThresholdMethod::kFixedMargin;
  NeuralDVConfig estimator;
  std::size_t p = 8;  // projections per row
  int bootstrap_reps = 20;
  std::uint64_t seed = 0;
  int threads = 1;
  // Null-calibrated reference samples, required in bootstrap mode.
  std::optional<SliceSampleSet> reference;

  void validate() const {
    if (!(eps >= 0) || level_alpha <= 0 || level_alpha >= 1 || p < 1) {
      throw ValidationError("invalid audit configuration");
    }
    if (threshold_method == ThresholdMethod::kFixedMargin && !(margin > 0)) {
      throw ValidationError("fixed-margin mode needs a margin r > 0");
    }
    if (threshold_method == ThresholdMethod::kBootstrapNull) {
      if (!reference) {
        throw ValidationError(
            "bootstrap-null mode needs a reference sample set");
      }
      if (bootstrap_reps < 2) {
        throw ValidationError("need at least two bootstrap replicates");
      }
    }
  }
};

struct AuditReport {
  double statistic = 0.0;
  double threshold = 0.0;
  bool violation = false;  // statistic > threshold, exactly
  Eigen::Index argmax_row = 0;
  std::vector<double> per_row;
  std::uint64_t seed = 0;
  std::string mode;  // "fixed-margin" (guaranteed form) or
                     // "bootstrap-null" (heuristic threshold)
  double runtime_seconds = 0.0;
};

namespace detail {

inline SliceSampleSet bootstrap_resample(const SliceSampleSet& set, Rng& rng) {
  SliceSampleSet out = set;
  std::vector<Eigen::Index> pick(set.m);
  for (Eigen::Index j = 0; j < set.m; ++j) {
    pick[j] = static_cast<Eigen::Index>(rng.below(set.m));
  }
  for (Eigen::Index i = 0; i < set.n; ++i) {
    for (Eigen::Index j = 0; j < set.m; ++j) {
      out.x[i].row(j) = set.x[i].row(pick[j]);
      out.y[i].row(j) = set.y[i].row(pick[j]);
      out.z[i].row(j) = set.z[i].row(pick[j]);
    }
  }
  return out;
}

}  // namespace detail

inline AuditReport audit_dp(const SliceSampleSet& samples,
                            const AuditConfig& cfg) {
  cfg.validate();
  samples.validate();
  const auto start = std::chrono::steady_clock::now();
  AuditReport report;
  report.seed = cfg.seed;
  const auto stat = smi_dp_statistic(samples, cfg.p, cfg.estimator, cfg.seed,
                                     cfg.threads);
  report.statistic = stat.value;
  report.argmax_row = stat.argmax_row;
  report.per_row = stat.per_row;
  double r = cfg.margin;
  if (cfg.threshold_method == ThresholdMethod::kBootstrapNull) {
    // Heuristic margin: the (1 - alpha) empirical quantile of the statistic
    // over bootstrap resamples of the reference samples with fresh
    // projection seeds. No finite-sample level is guaranteed.
    report.mode = "bootstrap-null";
    Rng boot(cfg.seed, 0xB007);
    std::vector<double> null_stats;
    for (int b = 0; b < cfg.bootstrap_reps; ++b) {
      Rng rng = boot.substream(b);
      const auto resampled = detail::bootstrap_resample(*cfg.reference, rng);
      null_stats.push_back(smi_dp_statistic(resampled, cfg.p, cfg.estimator,
                                            rng.next_u64(), cfg.threads)
                               .value);
    }
    std::sort(null_stats.begin(), null_stats.end());
    const auto idx = static_cast<std::size_t>(
        std::ceil((1.0 - cfg.level_alpha) * null_stats.size()) - 1);
    r = null_stats[std::min(idx, null_stats.size() - 1)];
  } else {
    report.mode = "fixed-margin";
  }
  report.threshold = cfg.eps + r;
  report.violation = report.statistic > report.threshold;
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

// Diagnostic Type-I bound C (n^3 k^2 / r)(ell^{-1/2} + m^{-1/2} + p^{-1/2}).
// The constant C is not known numerically; this never backs a guarantee.
inline double type1_bound(std::size_t n, std::size_t k, double r,
                          std::size_t ell, std::size_t m, std::size_t p,
                          double c) {
  if (n < 1 || k < 1 || !(r > 0) || ell < 1 || m < 1 || p < 1 || !(c > 0)) {
    throw ValidationError("all audit-bound inputs must be positive");
  }
  const double n3 = static_cast<double>(n) * n * n;
  const double k2 = static_cast<double>(k) * k;
  return c * (n3 * k2 / r) *
         (1.0 / std::sqrt(static_cast<double>(ell)) +
          1.0 / std::sqrt(static_cast<double>(m)) +
          1.0 / std::sqrt(static_cast<double>(p)));
}

}  // namespace pufferkit

#endif  // PUFFERKIT_AUDIT_HPP
