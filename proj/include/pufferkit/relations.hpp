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
// Conversion calculators between privacy currencies: pointwise-ratio privacy
// levels, mutual-information levels, and the derived utility and
// conditional-mutual-information bounds. All entropies in nats.

#ifndef PUFFERKIT_RELATIONS_HPP
#define PUFFERKIT_RELATIONS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pufferkit/errors.hpp"
#include "pufferkit/infotheory.hpp"

namespace pufferkit {

struct ConversionResult {
  std::string input_notion;
  std::string output_notion;
  std::vector<double> params_in;
  std::vector<double> params_out;
  std::vector<std::string> assumptions;
};

// Per-secret-pair density bounds used by the density-based conversion.
struct DensityBoundSummary {
  struct PairBounds {
    double alpha = 1.0;  // min likelihood ratio over outputs, in (0, 1]
    double beta = 0.0;   // inf ratio, >= 0
  };
  struct CellBounds {
    double u = 1.0;  // sup joint density, u >= l > 0
    double l = 1.0;
  };
  std::vector<PairBounds> pairs;  // one per (a, b, c)
  std::vector<CellBounds> cells;  // one per (a, c)

  void validate() const {
    if (pairs.empty() && cells.empty()) {
      throw ValidationError("density bounds are empty");
    }
    for (const auto& p : pairs) {
      if (!(p.alpha > 0) || p.alpha > 1 || p.beta < 0) {
        throw ValidationError("need 0 < alpha <= 1 and beta >= 0");
      }
    }
    for (const auto& c : cells) {
      if (!(c.l > 0) || c.u < c.l) {
        throw ValidationError("need u >= l > 0");
      }
    }
  }
};

// Binary entropy in nats with 0 log 0 := 0.
inline double binary_entropy(double p) {
  if (p < 0 || p > 1) throw ValidationError("probability out of [0,1]");
  double h = 0;
  if (p > 0) h -= p * std::log(p);
  if (p < 1) h -= (1 - p) * std::log(1 - p);
  return h;
}

// Pointwise eps-privacy implies min(eps, eps^2/2)-MI privacy.
inline double pp_to_mipp(double eps) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  return std::min(eps, 0.5 * eps * eps);
}

// eps2-MI privacy over the class of all distributions implies
// (eps_prime, sqrt(2 eps2)) pointwise privacy.
inline ConversionResult mipp_to_approx_pp(double eps2, double eps_prime = 0) {
  if (eps2 < 0 || eps_prime < 0) throw ValidationError("negative level");
  ConversionResult r;
  r.input_notion = "mi-pp";
  r.output_notion = "approx-pp";
  r.params_in = {eps2};
  const double delta = std::sqrt(2.0 * eps2);
  r.params_out = {eps_prime, delta};
  r.assumptions = {"theta-all-distributions"};
  if (delta >= 1.0) r.assumptions.push_back("vacuous-delta");
  return r;
}

inline double delta_prime(double eps, double delta) {
  if (eps < 0 || delta < 0 || delta > 1) {
    throw ValidationError("need eps >= 0 and delta in [0,1]");
  }
  return std::clamp(1.0 - 2.0 * (1.0 - delta) / (std::exp(eps) + 1.0), 0.0,
                    1.0);
}

// (eps, delta) pointwise privacy with a finite output support or finite
// private image implies eps_star-MI privacy:
// eps_star = 2 h_b(d') + 2 d' log(min(|supp M|, max|Im g| + 1)).
inline double approx_pp_to_mipp_finite(double eps, double delta,
                                       std::optional<std::size_t> supp_m,
                                       std::optional<std::size_t> max_im_g) {
  if (!supp_m && !max_im_g) {
    throw CapabilityError(
        "needs a finite mechanism support or a finite private image");
  }
  std::size_t card = std::numeric_limits<std::size_t>::max();
  if (supp_m) card = std::min(card, *supp_m);
  if (max_im_g) card = std::min(card, *max_im_g + 1);
  if (card < 1) throw ValidationError("cardinality must be positive");
  const double dp = delta_prime(eps, delta);
  return 2.0 * binary_entropy(dp) +
         2.0 * dp * std::log(static_cast<double>(card));
}

// Density-bound route:
// eps_star = d' * min( max_(a,b,c) (log(1/alpha)/(1-alpha) - beta)/2,
//                      max_(a,c) log(u/l) ).
inline double approx_pp_to_mipp_density(double eps, double delta,
                                        const DensityBoundSummary& bounds) {
  bounds.validate();
  const double dp = delta_prime(eps, delta);
  double branch1 = -kInfNats;
  for (const auto& p : bounds.pairs) {
    // log(1/alpha)/(1-alpha) has a removable singularity at alpha = 1 with
    // limit 1.
    const double ratio =
        p.alpha == 1.0 ? 1.0 : -std::log(p.alpha) / (1.0 - p.alpha);
    branch1 = std::max(branch1, 0.5 * (ratio - p.beta));
  }
  double branch2 = -kInfNats;
  for (const auto& c : bounds.cells) {
    branch2 = std::max(branch2, std::log(c.u / c.l));
  }
  double body;
  if (bounds.pairs.empty()) {
    body = branch2;
  } else if (bounds.cells.empty()) {
    body = branch1;
  } else {
    body = std::min(branch1, branch2);
  }
  return dp * std::max(body, 0.0);
}

// eta <= sum_i log |supp(M_i)| over the later mechanisms in a non-adaptive
// composition.
inline double eta_cardinality_bound(const std::vector<std::size_t>& supports) {
  double total = 0;
  for (std::size_t s : supports) {
    if (s < 1) throw ValidationError("support size must be positive");
    total += std::log(static_cast<double>(s));
  }
  return total;
}

// eta <= 1/2 sum_i E[log(pi e Var(M_i | g, w) / (4 Var(M_i | X)))], floored
// at zero; the caller supplies the expectation terms.
inline double eta_logconcave_bound(const std::vector<double>& terms) {
  double total = 0;
  for (double t : terms) {
    if (!std::isfinite(t)) throw ValidationError("non-finite term");
    total += t;
  }
  return std::max(0.5 * total, 0.0);
}

inline double cmi_bound(double eps, std::size_t n) {
  if (eps < 0) throw ValidationError("eps must be >= 0");
  return eps * static_cast<double>(n);
}

inline double utility_upper_bound(double h_f_given_g, double eps) {
  if (h_f_given_g < 0 || eps < 0) throw ValidationError("negative input");
  return h_f_given_g + eps;
}

// max(L1, L2) with L1 = H(f|g) - H(g|f) + eps and
// L2 = H(f|g) - a H(g|f) + eps - (1-a)(log(I(g;f)+1) + 4), a = eps/H(g).
inline double utility_lower_bound(double h_f_given_g, double h_g_given_f,
                                  double i_gf, double h_g, double eps) {
  if (h_f_given_g < 0 || h_g_given_f < 0 || i_gf < 0 || eps < 0) {
    throw ValidationError("negative input");
  }
  if (!(eps < i_gf)) {
    throw ValidationError("lower bound requires eps < I(g; f)");
  }
  if (!(h_g > 0)) throw ValidationError("H(g) must be positive");
  const double l1 = h_f_given_g - h_g_given_f + eps;
  const double a = eps / h_g;
  const double l2 = h_f_given_g - a * h_g_given_f + eps -
                    (1.0 - a) * (std::log(i_gf + 1.0) + 4.0);
  return std::max(l1, l2);
}

// Correlation threshold below which the Gaussian mechanism needs no noise:
// sqrt((e^{2 eps} - 1) e^{-2 eps}).
inline double gaussian_free_privacy_threshold(double eps) {
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  return std::sqrt(-std::expm1(-2.0 * eps));
}

}  // namespace pufferkit

#endif  // PUFFERKIT_RELATIONS_HPP
