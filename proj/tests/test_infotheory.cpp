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

#include "pufferkit/infotheory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pufferkit/core.hpp"
#include "pufferkit/rng.hpp"

namespace pufferkit {
namespace {

constexpr double kLn2 = 0.69314718055994531;

std::vector<double> random_pmf(Rng& rng, std::size_t size) {
  std::vector<double> p(size);
  double total = 0;
  for (double& v : p) {
    v = -std::log(rng.uniform());
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

// All databases with n binary rows and one column, uniform-ish member from
// the given PMF over them.
DiscreteMember binary_member(Eigen::Index n, const std::vector<double>& pmf) {
  DiscreteMember m;
  const std::size_t count = std::size_t{1} << n;
  for (std::size_t b = 0; b < count; ++b) {
    Matrix values(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) values(i, 0) = (b >> i) & 1;
    m.support.emplace_back(std::move(values));
    m.probs.push_back(pmf[b]);
  }
  return m;
}

PPFramework binary_dp_framework(Eigen::Index n,
                                const std::vector<double>& pmf) {
  PPFramework fw;
  fw.n = n;
  fw.k = 1;
  fw.graph = dp_graph(n);
  DistributionFamily::DiscreteFinite fam;
  fam.members = {binary_member(n, pmf)};
  fw.theta = DistributionFamily{DistributionFamily::Value{fam}};
  return fw;
}

// Per-row randomized response: each bit flipped independently with the given
// probability; outputs enumerate {0,1}^n.
DiscreteKernel rr_kernel(const DiscreteMember& member, double flip) {
  DiscreteKernel k;
  const Eigen::Index n = member.support.front().n();
  k.out_size = std::size_t{1} << n;
  for (const auto& db : member.support) {
    std::vector<double> row(k.out_size, 0.0);
    for (std::size_t y = 0; y < k.out_size; ++y) {
      double p = 1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int bit = static_cast<int>(db.values(i, 0));
        const int out = static_cast<int>((y >> i) & 1);
        p *= bit == out ? 1.0 - flip : flip;
      }
      row[y] = p;
    }
    k.table.emplace_back(db.flatten(), std::move(row));
  }
  return k;
}

TEST(Entropy, KnownValues) {
  EXPECT_NEAR(discrete_entropy({0.5, 0.5}), kLn2, 1e-12);
  EXPECT_NEAR(discrete_entropy({1.0, 0.0}), 0.0, 1e-15);
  EXPECT_NEAR(discrete_entropy({0.25, 0.25, 0.25, 0.25}), 2 * kLn2, 1e-12);
}

TEST(KlTv, KnownValues) {
  EXPECT_NEAR(kl_divergence({0.5, 0.5}, {0.5, 0.5}), 0.0, 1e-15);
  EXPECT_NEAR(tv_distance({0.5, 0.5}, {0.5, 0.5}), 0.0, 1e-15);
  EXPECT_NEAR(kl_divergence({1.0, 0.0}, {0.5, 0.5}), kLn2, 1e-12);
  EXPECT_NEAR(tv_distance({1.0, 0.0}, {0.5, 0.5}), 0.5, 1e-15);
  EXPECT_TRUE(std::isinf(kl_divergence({0.5, 0.5}, {1.0, 0.0})));
}

TEST(KlTv, PinskerOnRandomPairs) {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t size = 2 + rng.below(6);
    const auto p = random_pmf(rng, size);
    const auto q = random_pmf(rng, size);
    const double kl = kl_divergence(p, q);
    if (std::isinf(kl)) continue;
    EXPECT_LE(tv_distance(p, q), std::sqrt(0.5 * kl) + 1e-12);
  }
}

TEST(ConditionalMi, IndependentGivenW) {
  // P(G) x P(M) for each W value.
  std::vector<double> probs;
  const std::vector<double> pg = {0.3, 0.7}, pm = {0.6, 0.4},
                            pw = {0.5, 0.5};
  for (double g : pg)
    for (double m : pm)
      for (double w : pw) probs.push_back(g * m * w);
  EXPECT_NEAR(discrete_conditional_mi(JointPMF({2, 2, 2}, probs)), 0.0, 1e-14);
}

TEST(ConditionalMi, PerfectCopy) {
  std::vector<double> probs = {0.5, 0, 0, 0.5};  // G = M uniform, W constant
  EXPECT_NEAR(discrete_conditional_mi(JointPMF({2, 2, 1}, probs)), kLn2,
              1e-12);
}

TEST(ConditionalMi, RandomizedResponseQuarterFlip) {
  // M = G flipped w.p. 0.25, G uniform, W constant: ln 2 - h_b(1/4).
  std::vector<double> probs = {0.5 * 0.75, 0.5 * 0.25, 0.5 * 0.25, 0.5 * 0.75};
  EXPECT_NEAR(discrete_conditional_mi(JointPMF({2, 2, 1}, probs)),
              0.130812035941137, 1e-12);
}

TEST(ConditionalMi, ChainRuleConsistency) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t ng = 2 + rng.below(3), nm = 2 + rng.below(3),
                      nw = 1 + rng.below(3);
    const auto probs = random_pmf(rng, ng * nm * nw);
    JointPMF joint({ng, nm, nw}, probs);
    const double direct = discrete_conditional_mi(joint);
    // H(G | W) - H(G | M, W) from the same joint.
    double h_g_w = 0, h_g_mw = 0;
    for (std::size_t w = 0; w < nw; ++w) {
      double pw = 0;
      std::vector<double> pg(ng, 0.0);
      for (std::size_t g = 0; g < ng; ++g)
        for (std::size_t m = 0; m < nm; ++m) {
          pw += joint.at({g, m, w});
          pg[g] += joint.at({g, m, w});
        }
      for (std::size_t g = 0; g < ng; ++g) {
        if (pg[g] > 0) h_g_w -= pg[g] * std::log(pg[g] / pw);
      }
      for (std::size_t m = 0; m < nm; ++m) {
        double pmw = 0;
        for (std::size_t g = 0; g < ng; ++g) pmw += joint.at({g, m, w});
        for (std::size_t g = 0; g < ng; ++g) {
          const double p = joint.at({g, m, w});
          if (p > 0) h_g_mw -= p * std::log(p / pmw);
        }
      }
    }
    EXPECT_NEAR(direct, h_g_w - h_g_mw, 1e-10);
  }
}

TEST(ExhaustiveOracle, KernelIndependentOfData) {
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  DiscreteKernel k;
  k.out_size = 3;
  for (const auto& db : fw.theta.discrete().members[0].support) {
    k.table.emplace_back(db.flatten(), std::vector<double>{0.2, 0.5, 0.3});
  }
  EXPECT_NEAR(exhaustive_mechanism_mi(fw, k).value, 0.0, 1e-14);
}

TEST(ExhaustiveOracle, IdentityKernelRevealsARow) {
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  const auto identity = rr_kernel(fw.theta.discrete().members[0], 0.0);
  EXPECT_NEAR(exhaustive_mechanism_mi(fw, identity).value, kLn2, 1e-12);
}

TEST(ExhaustiveOracle, DataProcessingInequality) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto fw = binary_dp_framework(2, random_pmf(rng, 4));
    const auto base =
        rr_kernel(fw.theta.discrete().members[0], 0.1 + 0.3 * rng.uniform());
    // Randomized post-processing map over the 4 outputs.
    DiscreteKernel processed = base;
    std::vector<std::vector<double>> map;
    for (std::size_t y = 0; y < base.out_size; ++y) {
      map.push_back(random_pmf(rng, base.out_size));
    }
    for (auto& [key, row] : processed.table) {
      std::vector<double> next(base.out_size, 0.0);
      for (std::size_t y = 0; y < base.out_size; ++y)
        for (std::size_t z = 0; z < base.out_size; ++z)
          next[z] += row[y] * map[y][z];
      row = next;
    }
    EXPECT_LE(exhaustive_mechanism_mi(fw, processed).value,
              exhaustive_mechanism_mi(fw, base).value + 1e-10);
  }
}

TEST(ExhaustiveOracle, MixturePreservesTheLevel) {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto fw = binary_dp_framework(2, random_pmf(rng, 4));
    const auto& member = fw.theta.discrete().members[0];
    const auto k1 = rr_kernel(member, 0.2 + 0.2 * rng.uniform());
    const auto k2 = rr_kernel(member, 0.2 + 0.2 * rng.uniform());
    const double level = std::max(exhaustive_mechanism_mi(fw, k1).value,
                                  exhaustive_mechanism_mi(fw, k2).value);
    const double lambda = rng.uniform();
    DiscreteKernel mix = k1;
    for (std::size_t r = 0; r < mix.table.size(); ++r) {
      for (std::size_t y = 0; y < mix.out_size; ++y) {
        mix.table[r].second[y] = lambda * k1.table[r].second[y] +
                                 (1 - lambda) * k2.table[r].second[y];
      }
    }
    EXPECT_LE(exhaustive_mechanism_mi(fw, mix).value, level + 1e-10);
  }
}

TEST(PpRatioCheck, IndependentKernelAlwaysPasses) {
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  DiscreteKernel k;
  k.out_size = 2;
  for (const auto& db : fw.theta.discrete().members[0].support) {
    k.table.emplace_back(db.flatten(), std::vector<double>{0.5, 0.5});
  }
  EXPECT_TRUE(pp_ratio_check(fw, k, 0.0, 0.0).holds);
}

TEST(PpRatioCheck, IdentityKernelFailsWithWitness) {
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  const auto identity = rr_kernel(fw.theta.discrete().members[0], 0.0);
  const auto result = pp_ratio_check(fw, identity, 1.0, 0.0);
  EXPECT_FALSE(result.holds);
  EXPECT_GE(result.member, 0);
  EXPECT_GE(result.edge, 0);
  EXPECT_GT(result.excess, 0.0);
  EXPECT_NE(result.a, result.b);
}

TEST(PpRatioCheck, RandomizedResponseIsExactlyTight) {
  const double eps = 0.8;
  const double flip = 1.0 / (1.0 + std::exp(eps));
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  const auto kernel = rr_kernel(fw.theta.discrete().members[0], flip);
  EXPECT_TRUE(pp_ratio_check(fw, kernel, eps, 0.0).holds);
  EXPECT_FALSE(pp_ratio_check(fw, kernel, eps - 1e-6, 0.0).holds);
}

TEST(GaussianMi, KnownValuesAndMonotonicity) {
  EXPECT_NEAR(gaussian_conditional_mi(0.0, 1.0), 0.0, 1e-15);
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(gaussian_conditional_mi(1.0, 1.0 / (e2 - 1.0)), 1.0, 1e-12);
  EXPECT_NEAR(gaussian_conditional_mi(1.0, 1.0), 0.5 * kLn2, 1e-12);
  EXPECT_TRUE(std::isinf(gaussian_conditional_mi(1.0, 0.0)));
  double prev = gaussian_conditional_mi(1.0, 0.1);
  for (double s2 : {0.2, 0.5, 1.0, 2.0}) {
    const double cur = gaussian_conditional_mi(1.0, s2);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_GT(gaussian_conditional_mi(2.0, 1.0), gaussian_conditional_mi(1.0, 1.0));
}

TEST(ConditionalMoments, ConstantQueryHasZeroVariance) {
  DistributionFamily::ProductGaussian pg;
  pg.var_bound = 1.0;
  pg.n = 3;
  pg.k = 1;
  DistributionFamily fam{DistributionFamily::Value{pg}};
  const auto member = fam.worst_case_members()[0];
  const auto m = conditional_moments(member, DataFunction::constant(),
                                     DataFunction::complement_rows(0), 3, 1);
  EXPECT_TRUE(m.exact);
  EXPECT_NEAR(m.e_var[0], 0.0, 1e-14);
  EXPECT_NEAR(m.se_var[0], 0.0, 1e-15);
}

TEST(ConditionalMoments, AverageOfHundredGaussianEntries) {
  DistributionFamily::ProductGaussian pg;
  pg.var_bound = 1.0;
  pg.n = 100;
  pg.k = 1;
  DistributionFamily fam{DistributionFamily::Value{pg}};
  const auto member = fam.worst_case_members()[0];
  const DataFunction avg =
      DataFunction::linear(Matrix::Constant(1, 100, 0.01));
  const auto m = conditional_moments(member, avg,
                                     DataFunction::complement_rows(7), 100, 1);
  EXPECT_TRUE(m.exact);
  EXPECT_NEAR(m.e_var[0], 1e-4, 1e-12);
  EXPECT_NEAR(m.e_sqrt_var[0], 0.01, 1e-12);
}

TEST(ConditionalMoments, DiscreteSumExact) {
  // Uniform binary rows, f = sum, w constant: Var = n/4.
  const Eigen::Index n = 3;
  std::vector<double> pmf(8, 0.125);
  const auto member = binary_member(n, pmf);
  const DataFunction sum = DataFunction::linear(Matrix::Constant(1, n, 1.0));
  const auto m = conditional_moments(ThetaMember{member}, sum,
                                     DataFunction::constant(), n, 1);
  EXPECT_TRUE(m.exact);
  EXPECT_NEAR(m.e_var[0], n / 4.0, 1e-12);
}

TEST(ConditionalMoments, SampleAccessMatchesClosedForm) {
  const Eigen::Index n = 10;
  SampleMember sm;
  sm.n = n;
  sm.k = 1;
  sm.rows_iid = true;
  sm.second_moment_bound = 1.0;
  sm.sampler = [n](Rng& rng) {
    Matrix values(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) values(i, 0) = rng.gaussian();
    return Database(values);
  };
  const DataFunction avg =
      DataFunction::linear(Matrix::Constant(1, n, 1.0 / n));
  McConfig mc;
  mc.n_outer = 100;
  mc.n_inner = 400;
  const auto m = conditional_moments(ThetaMember{sm}, avg,
                                     DataFunction::complement_rows(2), n, 1, mc);
  EXPECT_FALSE(m.exact);
  // Only row 2 varies given the rest: Var = 1/n^2.
  EXPECT_NEAR(m.e_var[0], 1.0 / (n * n), 3 * m.se_var[0] + 1e-6);
  EXPECT_GT(m.se_var[0], 0.0);
}

TEST(ConditionalMoments, UnsupportedConditioningIsCapabilityError) {
  SampleMember sm;
  sm.n = 2;
  sm.k = 1;
  sm.rows_iid = false;
  sm.sampler = [](Rng& rng) {
    Matrix values(2, 1);
    values << rng.gaussian(), rng.gaussian();
    return Database(values);
  };
  const DataFunction f = DataFunction::linear(Matrix::Constant(1, 2, 1.0));
  EXPECT_THROW(conditional_moments(ThetaMember{sm}, f,
                                   DataFunction::complement_rows(0), 2, 1),
               CapabilityError);
  EXPECT_THROW(conditional_moments(ThetaMember{sm}, f,
                                   DataFunction::row_selector(0), 2, 1),
               CapabilityError);
}

TEST(AdditiveNoiseOracle, NoiselessIdentityQuery) {
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  AdditiveNoise an;
  an.f = DataFunction::row_selector(0);
  an.noise.family = NoiseSpec::Family::kGaussian;
  an.noise.param = 0.0;
  an.noise.dim = 1;
  // Releasing row 0 exactly leaks ln 2 about that row.
  EXPECT_NEAR(exhaustive_mechanism_mi(fw, MechanismKernel{an}).value, kLn2,
              1e-12);
}

TEST(AdditiveNoiseOracle, DiscretizedGaussianBelowClosedForm) {
  // Scalar Gaussian channel on a binary secret: binning only loses
  // information, so the gridded oracle stays below the channel capacity
  // bound 0.5 log(1 + Var/sigma2) and close to the exact binary-input value.
  PPFramework fw = binary_dp_framework(1, {0.5, 0.5});
  AdditiveNoise an;
  an.f = DataFunction::row_selector(0);
  an.noise.family = NoiseSpec::Family::kGaussian;
  an.noise.param = 1.0;
  an.noise.dim = 1;
  const auto result = exhaustive_mechanism_mi(fw, MechanismKernel{an});
  EXPECT_LE(result.value, gaussian_conditional_mi(0.25, 1.0) + 1e-9);
  EXPECT_GT(result.value, 0.08);
  EXPECT_LT(result.grid_tolerance, 1e-10);
}

TEST(BlackBoxOracle, IsCapabilityError) {
  const auto fw = binary_dp_framework(2, {0.25, 0.25, 0.25, 0.25});
  BlackBox bb;
  bb.sampler = [](const Database& x, Rng&) { return x.flatten(); };
  EXPECT_THROW(exhaustive_mechanism_mi(fw, MechanismKernel{bb}),
               CapabilityError);
}

}  // namespace
}  // namespace pufferkit
