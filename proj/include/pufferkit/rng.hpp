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

#ifndef PUFFERKIT_RNG_HPP
#define PUFFERKIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pufferkit {

// Counter-based deterministic stream: every draw is a pure function of
// (seed, stream, counter), so substreams can be split without coupling and
// results are reproducible bit-for-bit across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ stream)), counter_(0) {}

  // Independent stream derived from this generator's identity; does not
  // consume state from the parent.
  Rng substream(std::uint64_t index) const {
    Rng child(0);
    child.base_ = mix(base_ ^ mix(index + 0x632be59bd9b4e019ULL));
    child.counter_ = 0;
    child.have_cached_gaussian_ = false;
    return child;
  }

  std::uint64_t next_u64() { return mix(base_ + (++counter_) * kGamma); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller; the pair is cached so consecutive draws cost one transform.
  double gaussian() {
    if (have_cached_gaussian_) {
      have_cached_gaussian_ = false;
      return cached_gaussian_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = radius * std::sin(angle);
    have_cached_gaussian_ = true;
    return radius * std::cos(angle);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Laplace(0, b) via inverse CDF.
  double laplace(double scale) {
    const double u = uniform() - 0.5;
    return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
  }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_;
  std::uint64_t counter_;
  bool have_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

}  // namespace pufferkit

#endif  // PUFFERKIT_RNG_HPP
