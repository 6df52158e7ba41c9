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

#ifndef PUFFERKIT_NOISE_HPP
#define PUFFERKIT_NOISE_HPP

#include <cmath>
#include <cstdint>
#include <optional>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"

namespace pufferkit {

// Additive-noise parameters: per-coordinate i.i.d. Laplace(b) or
// Gaussian(sigma2), optionally preceded by a linear projection of the query
// output (d coordinates down to the projection's column count).
struct NoiseSpec {
  enum class Family { kLaplace, kGaussian };

  struct RandomProjection {
    std::uint64_t seed = 0;
    Eigen::Index ell = 1;  // target dimension; entries N(0, 1/d)
  };

  Family family = Family::kGaussian;
  double param = 0.0;  // Laplace scale b, or Gaussian variance sigma2
  Eigen::Index dim = 1;
  std::optional<Matrix> projection;  // d x ell, applied as A^T f(x)
  std::optional<RandomProjection> random_projection;

  void validate() const {
    if (dim < 1) throw ValidationError("noise dimension must be positive");
    if (family == Family::kLaplace) {
      if (!(param > 0)) throw ValidationError("Laplace scale must be > 0");
    } else if (param < 0 || !std::isfinite(param)) {
      throw ValidationError("Gaussian variance must be finite and >= 0");
    }
    if (projection && random_projection) {
      throw ValidationError("at most one projection form may be set");
    }
    if (projection && projection->cols() > projection->rows()) {
      throw ValidationError("projection must not increase dimension");
    }
    if (random_projection && random_projection->ell < 1) {
      throw ValidationError("projection dimension must be positive");
    }
  }

  // Scale parameter in output units (b, or the standard deviation).
  double scale() const {
    return family == Family::kLaplace ? param : std::sqrt(param);
  }

  double cdf(double z) const {
    if (family == Family::kLaplace) {
      const double b = param;
      return z < 0 ? 0.5 * std::exp(z / b) : 1.0 - 0.5 * std::exp(-z / b);
    }
    const double sd = std::sqrt(param);
    if (sd == 0) return z < 0 ? 0.0 : 1.0;
    return 0.5 * std::erfc(-z / (sd * std::numbers::sqrt2));
  }

  double sample(Rng& rng) const {
    if (family == Family::kLaplace) return rng.laplace(param);
    return rng.gaussian(0.0, std::sqrt(param));
  }

  // Materializes the projection matrix (d x ell) if any form is set.
  std::optional<Matrix> projection_matrix(Eigen::Index d) const {
    if (projection) {
      if (projection->rows() != d) {
        throw ValidationError("projection row count must match query dim");
      }
      return projection;
    }
    if (random_projection) {
      Rng rng(random_projection->seed, 0xA11CE5);
      Matrix a(d, random_projection->ell);
      const double sd = 1.0 / std::sqrt(static_cast<double>(d));
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < d; ++i) a(i, j) = rng.gaussian(0.0, sd);
      return a;
    }
    return std::nullopt;
  }
};

}  // namespace pufferkit

#endif  // PUFFERKIT_NOISE_HPP
