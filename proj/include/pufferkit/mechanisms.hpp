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
// Noise calibration for additive Laplace and Gaussian mechanisms: conditional
// variance routes, sensitivity fallbacks, random-projection and entropy-based
// variants, and mechanism execution. Monte Carlo estimated bounds are
// inflated by two standard errors so estimation noise never under-provisions.

#ifndef PUFFERKIT_MECHANISMS_HPP
#define PUFFERKIT_MECHANISMS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"
#include "pufferkit/infotheory.hpp"
#include "pufferkit/noise.hpp"

namespace pufferkit {

struct CalibrationReport {
  NoiseSpec noise;           // param = the inflated bound
  double bound_raw = 0.0;    // supremum of the bound expression
  double bound_inflated = 0.0;
  double estimator_stderr = 0.0;
  std::string sup_witness;   // family member / public function attaining it
  std::string method;
  bool free_regime = false;
};

namespace detail {

struct SupResult {
  double raw = 0.0;
  double stderr_total = 0.0;
  std::string witness = "none";
};

// Max of `score(moments)` over worst-case family members and the given
// public functions; stderr taken from the maximizing cell.
template <typename Score>
SupResult sup_over_family(const PPFramework& fw, const DataFunction& f,
                          const std::vector<DataFunction>& publics,
                          const McConfig& mc, Score score) {
  fw.validate();
  const auto members = fw.theta.worst_case_members();
  if (members.empty()) throw ValidationError("empty distribution family");
  if (publics.empty()) throw ValidationError("no public functions to scan");
  SupResult best;
  bool first = true;
  for (std::size_t mi = 0; mi < members.size(); ++mi) {
    for (std::size_t wi = 0; wi < publics.size(); ++wi) {
      const auto moments =
          conditional_moments(members[mi], f, publics[wi], fw.n, fw.k, mc);
      const auto [value, se] = score(moments);
      if (first || value + 2.0 * se > best.raw + 2.0 * best.stderr_total) {
        best.raw = value;
        best.stderr_total = se;
        best.witness = "member=" + std::to_string(mi) +
                       ",public=" + std::to_string(wi);
        first = false;
      }
    }
  }
  return best;
}

inline CalibrationReport make_report(std::string method,
                                     NoiseSpec::Family family,
                                     const SupResult& sup,
                                     NoiseSpec extra = {}) {
  CalibrationReport r;
  r.method = std::move(method);
  r.bound_raw = std::max(sup.raw, 0.0);
  r.bound_inflated = std::max(sup.raw + 2.0 * sup.stderr_total, 0.0);
  r.estimator_stderr = sup.stderr_total;
  r.sup_witness = sup.witness;
  r.free_regime = r.bound_inflated == 0.0;
  r.noise = std::move(extra);
  r.noise.family = family;
  r.noise.param = r.bound_inflated;
  return r;
}

}  // namespace detail

// Laplace scale b = sup over the family and public functions of
// sum_j E[sqrt(Var(f_j | w))] / (d (e^{eps/d} - 1)).
inline CalibrationReport calibrate_laplace(const PPFramework& fw,
                                           const DataFunction& f, double eps,
                                           const McConfig& mc = {}) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  const double d = static_cast<double>(f.output_dim(fw.n, fw.k));
  const double denom = d * std::expm1(eps / d);
  const auto sup = detail::sup_over_family(
      fw, f, fw.graph.active_publics(), mc, [&](const ConditionalMoments& m) {
        return std::pair<double, double>(m.e_sqrt_var.sum() / denom,
                                         m.se_sqrt_var.sum() / denom);
      });
  auto r = detail::make_report("laplace-conditional-variance",
                               NoiseSpec::Family::kLaplace, sup);
  r.noise.dim = static_cast<Eigen::Index>(d);
  return r;
}

// Sensitivity fallback: b = delta1 / (sqrt(2) d (e^{eps/d} - 1)).
inline CalibrationReport calibrate_laplace_sensitivity(double delta1,
                                                       std::size_t d,
                                                       double eps) {
  if (delta1 < 0 || !std::isfinite(delta1) || d < 1 || !(eps > 0)) {
    throw ValidationError("need delta1 >= 0, d >= 1, eps > 0");
  }
  const double dd = static_cast<double>(d);
  detail::SupResult sup;
  sup.raw = delta1 / (std::numbers::sqrt2 * dd * std::expm1(eps / dd));
  sup.witness = "sensitivity";
  auto r = detail::make_report("laplace-l1-sensitivity",
                               NoiseSpec::Family::kLaplace, sup);
  r.noise.dim = static_cast<Eigen::Index>(d);
  return r;
}

// Gaussian variance sigma2 = sup of
// sum_j E[Var(f_j | w)] / (d (e^{2 eps/d} - 1)).
inline CalibrationReport calibrate_gaussian(const PPFramework& fw,
                                            const DataFunction& f, double eps,
                                            const McConfig& mc = {}) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  const double d = static_cast<double>(f.output_dim(fw.n, fw.k));
  const double denom = d * std::expm1(2.0 * eps / d);
  const auto sup = detail::sup_over_family(
      fw, f, fw.graph.active_publics(), mc, [&](const ConditionalMoments& m) {
        return std::pair<double, double>(m.e_var.sum() / denom,
                                         m.se_var.sum() / denom);
      });
  auto r = detail::make_report("gaussian-conditional-variance",
                               NoiseSpec::Family::kGaussian, sup);
  r.noise.dim = static_cast<Eigen::Index>(d);
  return r;
}

// sigma2 = delta2^2 / (2 d (e^{2 eps/d} - 1)); with compact_scalar (d = 1,
// bounded query range asserted by the caller) the variance cap
// delta2^2 / 4 sharpens it to delta2^2 / (4 (e^{2 eps} - 1)).
inline CalibrationReport calibrate_gaussian_sensitivity(
    double delta2, std::size_t d, double eps, bool compact_scalar = false) {
  if (delta2 < 0 || !std::isfinite(delta2) || d < 1 || !(eps > 0)) {
    throw ValidationError("need delta2 >= 0, d >= 1, eps > 0");
  }
  if (compact_scalar && d != 1) {
    throw ValidationError("compact_scalar applies to scalar queries only");
  }
  const double dd = static_cast<double>(d);
  detail::SupResult sup;
  if (compact_scalar) {
    sup.raw = delta2 * delta2 / (4.0 * std::expm1(2.0 * eps));
    sup.witness = "sensitivity-compact";
  } else {
    sup.raw = delta2 * delta2 / (2.0 * dd * std::expm1(2.0 * eps / dd));
    sup.witness = "sensitivity";
  }
  auto r = detail::make_report(compact_scalar ? "gaussian-l2-compact"
                                              : "gaussian-l2-sensitivity",
                               NoiseSpec::Family::kGaussian, sup);
  r.noise.dim = static_cast<Eigen::Index>(d);
  return r;
}

// Projected Gaussian mechanism A^T f(X) + Z in dimension ell:
//   deterministic columns: sigma2 = E[||Cov(f|w)||_op] max_j ||phi_j||^2
//                                   / (e^{2 eps/ell} - 1);
//   random columns (entries N(0, 1/d)): sigma2 =
//     E[||Cov(f|w)||_op + ||E[f|w]||^2] / (e^{2 eps/ell} - 1).
inline CalibrationReport calibrate_gaussian_projection(
    const PPFramework& fw, const DataFunction& f, double eps,
    const NoiseSpec& proj_spec, const McConfig& mc = {}) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  const Eigen::Index d = f.output_dim(fw.n, fw.k);
  const bool random = proj_spec.random_projection.has_value();
  if (!random && !proj_spec.projection) {
    throw ValidationError("projection calibration needs a projection form");
  }
  const Eigen::Index ell =
      random ? proj_spec.random_projection->ell : proj_spec.projection->cols();
  if (ell > d) throw ValidationError("projection must not increase dimension");
  const double denom = std::expm1(2.0 * eps / static_cast<double>(ell));
  double col_norm_sq = 1.0;
  if (!random) {
    if (proj_spec.projection->rows() != d) {
      throw ValidationError("projection row count must match query dim");
    }
    col_norm_sq = proj_spec.projection->colwise().squaredNorm().maxCoeff();
  }
  const auto sup = detail::sup_over_family(
      fw, f, fw.graph.active_publics(), mc, [&](const ConditionalMoments& m) {
        if (random) {
          return std::pair<double, double>(
              (m.e_op_norm + m.e_mean_sq) / denom,
              (m.se_op_norm + m.se_mean_sq) / denom);
        }
        return std::pair<double, double>(m.e_op_norm * col_norm_sq / denom,
                                         m.se_op_norm * col_norm_sq / denom);
      });
  NoiseSpec extra;
  extra.dim = ell;
  extra.projection = proj_spec.projection;
  extra.random_projection = proj_spec.random_projection;
  auto r = detail::make_report(
      random ? "gaussian-projection-random" : "gaussian-projection-fixed",
      NoiseSpec::Family::kGaussian, sup, std::move(extra));
  return r;
}

// Bound as a function of the projection dimension, for tuning.
inline std::vector<std::pair<Eigen::Index, double>>
calibrate_gaussian_projection_sweep(const PPFramework& fw,
                                    const DataFunction& f, double eps,
                                    std::uint64_t proj_seed,
                                    const McConfig& mc = {}) {
  const Eigen::Index d = f.output_dim(fw.n, fw.k);
  std::vector<std::pair<Eigen::Index, double>> out;
  for (Eigen::Index ell = 1; ell <= d; ++ell) {
    NoiseSpec spec;
    spec.random_projection = NoiseSpec::RandomProjection{proj_seed, ell};
    out.emplace_back(
        ell,
        calibrate_gaussian_projection(fw, f, eps, spec, mc).bound_inflated);
  }
  return out;
}

// Entropy route: sigma2 = sup (A - d e^{2 eps/d} B) / (d (e^{2 eps/d} - 1))
// floored at 0, with A = sum_j E[Var(f_j | w)] and
// B = (1/2 pi) exp((2/d) h - 1) for a caller-supplied lower bound h on the
// conditional differential entropy h(f | g, w).
inline CalibrationReport calibrate_gaussian_entropy_law(
    const PPFramework& fw, const DataFunction& f, double eps,
    double cond_entropy_lb, const McConfig& mc = {}) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  if (!std::isfinite(cond_entropy_lb)) {
    throw ValidationError("conditional entropy bound must be finite");
  }
  const double d = static_cast<double>(f.output_dim(fw.n, fw.k));
  const double growth = std::exp(2.0 * eps / d);
  const double denom = d * (growth - 1.0);
  const double b = std::exp((2.0 / d) * cond_entropy_lb - 1.0) /
                   (2.0 * std::numbers::pi);
  const auto sup = detail::sup_over_family(
      fw, f, fw.graph.active_publics(), mc, [&](const ConditionalMoments& m) {
        return std::pair<double, double>(
            (m.e_var.sum() - d * growth * b) / denom,
            m.se_var.sum() / denom);
      });
  auto r = detail::make_report("gaussian-entropy-law",
                               NoiseSpec::Family::kGaussian, sup);
  r.noise.dim = static_cast<Eigen::Index>(d);
  return r;
}

// Attribute-privacy route (empty public side, scalar query, constant
// conditional variance asserted by the caller):
// sigma2 = sup [ (Var(f) - e^{2 eps} Var(f | g)) / (e^{2 eps} - 1) ] or 0.
inline CalibrationReport calibrate_gaussian_ap(const PPFramework& fw,
                                               const DataFunction& f,
                                               double eps,
                                               const McConfig& mc = {}) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  if (f.output_dim(fw.n, fw.k) != 1) {
    throw ValidationError("attribute-privacy calibration needs a scalar query");
  }
  fw.validate();
  const auto members = fw.theta.worst_case_members();
  const auto& privates = fw.graph.privates;
  if (privates.empty()) throw ValidationError("graph has no private functions");
  const double growth = std::exp(2.0 * eps);
  const DataFunction unconditional = DataFunction::constant();
  detail::SupResult sup;
  bool first = true;
  for (std::size_t mi = 0; mi < members.size(); ++mi) {
    const auto total =
        conditional_moments(members[mi], f, unconditional, fw.n, fw.k, mc);
    for (std::size_t gi = 0; gi < privates.size(); ++gi) {
      const auto given_g =
          conditional_moments(members[mi], f, privates[gi], fw.n, fw.k, mc);
      const double value =
          (total.e_var[0] - growth * given_g.e_var[0]) / (growth - 1.0);
      const double se =
          (total.se_var[0] + growth * given_g.se_var[0]) / (growth - 1.0);
      if (first || value + 2.0 * se > sup.raw + 2.0 * sup.stderr_total) {
        sup.raw = value;
        sup.stderr_total = se;
        sup.witness =
            "member=" + std::to_string(mi) + ",private=" + std::to_string(gi);
        first = false;
      }
    }
  }
  auto r = detail::make_report("gaussian-attribute-privacy",
                               NoiseSpec::Family::kGaussian, sup);
  r.noise.dim = 1;
  return r;
}

// Executes M(x) = f(x) + Z (projection applied first when present).
// A zero noise parameter returns the (projected) query value exactly.
inline Vector run_mechanism(const DataFunction& f, const Database& x,
                            const NoiseSpec& noise, std::uint64_t seed) {
  Vector fx = f.evaluate(x);
  if (noise.projection || noise.random_projection) {
    const auto a = noise.projection_matrix(fx.size());
    fx = a->transpose() * fx;
  }
  if (noise.dim != fx.size()) {
    throw ValidationError("noise dimension does not match the query output");
  }
  if (noise.param == 0.0) return fx;
  noise.validate();
  Rng rng(seed, 0x4E015E);
  for (Eigen::Index j = 0; j < fx.size(); ++j) fx[j] += noise.sample(rng);
  return fx;
}

}  // namespace pufferkit

#endif  // PUFFERKIT_MECHANISMS_HPP
