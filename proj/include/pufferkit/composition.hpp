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
// Privacy-budget accounting: adaptive and non-adaptive composition with the
// cross-mechanism overhead eta, the uniquely-characterizing (UC) shortcut,
// and kernel mixture / post-processing wrappers.

#ifndef PUFFERKIT_COMPOSITION_HPP
#define PUFFERKIT_COMPOSITION_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"
#include "pufferkit/infotheory.hpp"

namespace pufferkit {

enum class EtaProvenance {
  kNone,
  kExactZeroUC,
  kCardinalityBound,
  kLogconcaveBound,
  kUser,
};

enum class CompositionMode { kAdaptive, kNonAdaptive };

struct PrivacyBudget {
  std::vector<std::pair<std::string, double>> entries;  // (mechanism id, eps)
  double eta = 0.0;
  EtaProvenance eta_provenance = EtaProvenance::kNone;
  CompositionMode mode = CompositionMode::kAdaptive;

  void validate() const {
    for (const auto& [id, eps] : entries) {
      if (eps < 0 || !std::isfinite(eps)) {
        throw ValidationError("budget entry '" + id + "' has invalid eps");
      }
    }
    if (eta < 0 || !std::isfinite(eta)) {
      throw ValidationError("eta must be finite and >= 0");
    }
  }
};

// Adaptive: sum eps_i (no overhead term exists, so eta must be 0).
// Non-adaptive: sum eps_i + eta, with eta's provenance required.
inline double compose(const PrivacyBudget& budget) {
  budget.validate();
  double total = 0;
  for (const auto& [id, eps] : budget.entries) total += eps;
  if (budget.mode == CompositionMode::kAdaptive) {
    if (budget.eta > 0) {
      throw ValidationError(
          "adaptive composition admits no eta overhead; use non-adaptive "
          "mode with a provenance-tracked eta");
    }
    return total;
  }
  if (budget.eta_provenance == EtaProvenance::kNone) {
    throw ValidationError(
        "non-adaptive composition requires an eta with provenance");
  }
  return total + budget.eta;
}

// A member is uniquely characterizing when every positive-probability secret
// event (g = a, w = c) pins down the database exactly.
inline std::vector<bool> check_uc(const DistributionFamily& theta,
                                  const BipartiteSecretGraph& graph) {
  const auto& family = theta.discrete();
  const auto edges = graph.edge_functions();
  if (edges.empty()) throw ValidationError("graph has no secret pairs");
  std::vector<bool> out;
  for (const auto& member : family.members) {
    member.validate();
    bool uc = true;
    for (const auto& [g, w] : edges) {
      std::vector<Vector> keys;
      std::vector<const Database*> first_db(member.support.size(), nullptr);
      for (std::size_t s = 0; s < member.support.size() && uc; ++s) {
        if (member.probs[s] <= 0) continue;
        Vector gv = g.evaluate(member.support[s]);
        Vector wv = w.evaluate(member.support[s]);
        Vector key(gv.size() + wv.size());
        key << gv, wv;
        const std::size_t idx = detail::find_or_add(keys, key);
        if (idx >= first_db.size()) first_db.resize(idx + 1, nullptr);
        if (first_db[idx] == nullptr) {
          first_db[idx] = &member.support[s];
        } else if (!(*first_db[idx] == member.support[s])) {
          uc = false;
        }
      }
      if (!uc) break;
    }
    out.push_back(uc);
  }
  return out;
}

struct UCCompositionResult {
  double total = 0.0;
  std::string condition;  // which hypothesis justified eta = 0
};

// eta-free composition: either every family member is UC, or the family
// contains the UC distributions and the caller asserts each mechanism also
// satisfies standard pointwise privacy.
inline UCCompositionResult compose_uc(const PrivacyBudget& budget,
                                      const DistributionFamily& theta,
                                      const BipartiteSecretGraph& graph,
                                      bool each_satisfies_standard_pp) {
  budget.validate();
  double total = 0;
  for (const auto& [id, eps] : budget.entries) total += eps;
  const auto uc = check_uc(theta, graph);
  bool all_uc = true;
  for (bool b : uc) all_uc = all_uc && b;
  if (all_uc) {
    return {total, "all-members-uc"};
  }
  if (each_satisfies_standard_pp) {
    return {total, "standard-pp-asserted"};
  }
  throw ValidationError(
      "family has non-UC members and no standard-privacy assertion; use "
      "non-adaptive composition with an explicit eta bound instead");
}

// Pointwise convex combination of kernels over a common domain and output
// alphabet.
inline DiscreteKernel mixture(const std::vector<DiscreteKernel>& kernels,
                              const std::vector<double>& weights) {
  if (kernels.empty() || kernels.size() != weights.size()) {
    throw ValidationError("mixture needs matching kernels and weights");
  }
  double total = 0;
  for (double p : weights) {
    if (p < 0) throw ValidationError("negative mixture weight");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("mixture weights must sum to 1");
  }
  for (const auto& k : kernels) {
    k.validate();
    if (k.out_size != kernels.front().out_size ||
        k.table.size() != kernels.front().table.size()) {
      throw ValidationError("mixture kernels must share domain and alphabet");
    }
  }
  DiscreteKernel out;
  out.out_size = kernels.front().out_size;
  for (const auto& [key, base_row] : kernels.front().table) {
    std::vector<double> row(out.out_size, 0.0);
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      const auto& source = kernels[i].row_for(Database(
          Eigen::Map<const Matrix>(key.data(), 1, key.size())));
      for (std::size_t y = 0; y < out.out_size; ++y) {
        row[y] += weights[i] * source[y];
      }
    }
    out.table.emplace_back(key, std::move(row));
  }
  return out;
}

// Applies a (possibly randomized) output map: rows of `map` are PMFs over
// the processed alphabet, indexed by the original output symbol.
inline DiscreteKernel post_process(const DiscreteKernel& kernel,
                                   const std::vector<std::vector<double>>& map) {
  kernel.validate();
  if (map.size() != kernel.out_size) {
    throw ValidationError("output map must cover the kernel's alphabet");
  }
  const std::size_t out_size = map.front().size();
  for (const auto& row : map) {
    if (row.size() != out_size) {
      throw ValidationError("output map rows must share an alphabet");
    }
    double total = 0;
    for (double p : row) {
      if (p < 0) throw ValidationError("negative map probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ValidationError("output map rows must sum to 1");
    }
  }
  DiscreteKernel out;
  out.out_size = out_size;
  for (const auto& [key, row] : kernel.table) {
    std::vector<double> processed(out_size, 0.0);
    for (std::size_t y = 0; y < kernel.out_size; ++y) {
      for (std::size_t z = 0; z < out_size; ++z) {
        processed[z] += row[y] * map[y][z];
      }
    }
    out.table.emplace_back(key, std::move(processed));
  }
  return out;
}

// Kernel releasing all component outputs jointly, components independent
// given the database (the non-adaptive composition's output law).
inline DiscreteKernel tensor_kernel(const std::vector<DiscreteKernel>& kernels) {
  if (kernels.empty()) throw ValidationError("no kernels to combine");
  for (const auto& k : kernels) k.validate();
  DiscreteKernel out;
  out.out_size = 1;
  for (const auto& k : kernels) out.out_size *= k.out_size;
  for (std::size_t r = 0; r < kernels.front().table.size(); ++r) {
    const Vector& key = kernels.front().table[r].first;
    const Database x(Eigen::Map<const Matrix>(key.data(), 1, key.size()));
    std::vector<double> row(1, 1.0);
    for (const auto& k : kernels) {
      const auto& part = k.row_for(x);
      std::vector<double> next(row.size() * part.size());
      for (std::size_t i = 0; i < row.size(); ++i) {
        for (std::size_t y = 0; y < part.size(); ++y) {
          next[i * part.size() + y] = row[i] * part[y];
        }
      }
      row = std::move(next);
    }
    out.table.emplace_back(key, std::move(row));
  }
  return out;
}

// Exact cross-mechanism overhead for conditionally independent kernels:
// eta = sum_{i >= 2} I(M_i; M^{i-1} | g(X), w(X)) under one family member.
inline double exact_eta(const DiscreteMember& member, const DataFunction& g,
                        const DataFunction& w,
                        const std::vector<DiscreteKernel>& kernels) {
  member.validate();
  if (kernels.size() < 2) return 0.0;
  std::vector<Vector> classes;
  std::vector<std::size_t> ci(member.support.size());
  for (std::size_t s = 0; s < member.support.size(); ++s) {
    Vector gv = g.evaluate(member.support[s]);
    Vector wv = w.evaluate(member.support[s]);
    Vector key(gv.size() + wv.size());
    key << gv, wv;
    ci[s] = detail::find_or_add(classes, key);
  }
  double eta = 0;
  std::size_t prefix_size = kernels.front().out_size;
  for (std::size_t i = 1; i < kernels.size(); ++i) {
    const std::size_t mi_size = kernels[i].out_size;
    std::vector<double> probs(mi_size * prefix_size * classes.size(), 0.0);
    for (std::size_t s = 0; s < member.support.size(); ++s) {
      const Database& x = member.support[s];
      // Joint law of the first i outputs given x.
      std::vector<double> prefix(1, 1.0);
      for (std::size_t j = 0; j < i; ++j) {
        const auto& part = kernels[j].row_for(x);
        std::vector<double> next(prefix.size() * part.size());
        for (std::size_t a = 0; a < prefix.size(); ++a) {
          for (std::size_t y = 0; y < part.size(); ++y) {
            next[a * part.size() + y] = prefix[a] * part[y];
          }
        }
        prefix = std::move(next);
      }
      const auto& current = kernels[i].row_for(x);
      for (std::size_t y = 0; y < mi_size; ++y) {
        for (std::size_t a = 0; a < prefix.size(); ++a) {
          probs[(y * prefix_size + a) * classes.size() + ci[s]] +=
              member.probs[s] * current[y] * prefix[a];
        }
      }
    }
    eta += discrete_conditional_mi(
        JointPMF({mi_size, prefix_size, classes.size()}, std::move(probs)));
    prefix_size *= mi_size;
  }
  return eta;
}

}  // namespace pufferkit

#endif  // PUFFERKIT_COMPOSITION_HPP
