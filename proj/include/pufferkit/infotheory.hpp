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
// Exact discrete information measures, Gaussian closed forms, Monte Carlo
// conditional-moment estimation, and the brute-force conditional-MI oracle.
// All quantities are in nats.

#ifndef PUFFERKIT_INFOTHEORY_HPP
#define PUFFERKIT_INFOTHEORY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"
#include "pufferkit/noise.hpp"
#include "pufferkit/rng.hpp"

namespace pufferkit {

inline constexpr double kInfNats = std::numeric_limits<double>::infinity();

// --- JointPMF -------------------------------------------------------------

// Dense probability tensor over a product of finite alphabets; only the axis
// sizes matter for the measures below.
class JointPMF {
 public:
  JointPMF() = default;
  JointPMF(std::vector<std::size_t> shape, std::vector<double> probs)
      : shape_(std::move(shape)), probs_(std::move(probs)) {
    std::size_t cells = 1;
    for (std::size_t s : shape_) {
      if (s == 0) throw ValidationError("empty alphabet axis");
      cells *= s;
    }
    if (cells != probs_.size()) {
      throw ValidationError("probability tensor size does not match shape");
    }
    double total = 0;
    for (double p : probs_) {
      if (p < 0 || !std::isfinite(p)) {
        throw ValidationError("probabilities must be finite and >= 0");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ValidationError("probabilities must sum to 1");
    }
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t rank() const { return shape_.size(); }

  std::size_t flat_index(const std::vector<std::size_t>& idx) const {
    std::size_t pos = 0;
    for (std::size_t ax = 0; ax < shape_.size(); ++ax) {
      pos = pos * shape_[ax] + idx[ax];
    }
    return pos;
  }

  double at(const std::vector<std::size_t>& idx) const {
    return probs_[flat_index(idx)];
  }

  std::vector<double> marginal(std::size_t axis) const {
    std::vector<double> out(shape_[axis], 0.0);
    std::vector<std::size_t> idx(shape_.size(), 0);
    for (std::size_t pos = 0; pos < probs_.size(); ++pos) {
      out[idx[axis]] += probs_[pos];
      for (std::size_t ax = shape_.size(); ax-- > 0;) {
        if (++idx[ax] < shape_[ax]) break;
        idx[ax] = 0;
      }
    }
    return out;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> probs_;
};

// --- Scalar measures ------------------------------------------------------

inline double discrete_entropy(const std::vector<double>& p) {
  double total = 0, h = 0;
  for (double v : p) {
    if (v < 0) throw ValidationError("negative probability");
    total += v;
    if (v > 0) h -= v * std::log(v);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("PMF must sum to 1");
  }
  return std::max(h, 0.0);
}

// Returns the infinity sentinel when p puts mass where q does not.
inline double kl_divergence(const std::vector<double>& p,
                            const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw ValidationError("KL requires a common alphabet");
  }
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    if (q[i] == 0) return kInfNats;
    d += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(d, 0.0);
}

inline double tv_distance(const std::vector<double>& p,
                          const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw ValidationError("TV requires a common alphabet");
  }
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

// I(G; M | W) for a 3-axis PMF over (G, M, W).
inline double discrete_conditional_mi(const JointPMF& joint) {
  if (joint.rank() != 3) {
    throw ValidationError("conditional MI needs a 3-axis PMF");
  }
  const auto& shape = joint.shape();
  const std::size_t ng = shape[0], nm = shape[1], nw = shape[2];
  double mi = 0;
  for (std::size_t w = 0; w < nw; ++w) {
    double pw = 0;
    std::vector<double> pg(ng, 0.0), pm(nm, 0.0);
    for (std::size_t g = 0; g < ng; ++g) {
      for (std::size_t m = 0; m < nm; ++m) {
        const double p = joint.at({g, m, w});
        pw += p;
        pg[g] += p;
        pm[m] += p;
      }
    }
    if (pw == 0) continue;
    for (std::size_t g = 0; g < ng; ++g) {
      for (std::size_t m = 0; m < nm; ++m) {
        const double p = joint.at({g, m, w});
        if (p == 0) continue;
        mi += p * std::log(p * pw / (pg[g] * pm[m]));
      }
    }
  }
  return std::max(mi, 0.0);
}

// I(g; f + Z | w) for jointly Gaussian scalars where g explains all of
// Var(f | w): 1/2 log(1 + Var(f|w) / sigma2).
inline double gaussian_conditional_mi(double var_f_given_w, double sigma2) {
  if (var_f_given_w < 0 || !std::isfinite(var_f_given_w) ||
      sigma2 < 0 || !std::isfinite(sigma2)) {
    throw ValidationError("variance inputs must be finite and >= 0");
  }
  if (var_f_given_w == 0) return 0.0;
  if (sigma2 == 0) return kInfNats;
  return 0.5 * std::log1p(var_f_given_w / sigma2);
}

// --- Mechanism kernels ----------------------------------------------------

// Conditional output PMF tabulated over a finite database domain.
struct DiscreteKernel {
  std::vector<std::pair<Vector, std::vector<double>>> table;  // flat db -> PMF
  std::size_t out_size = 0;

  void validate() const {
    if (table.empty()) throw ValidationError("kernel table is empty");
    for (const auto& [key, row] : table) {
      if (row.size() != out_size) {
        throw ValidationError("kernel rows must share the output alphabet");
      }
      double total = 0;
      for (double p : row) {
        if (p < 0) throw ValidationError("negative kernel probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("kernel rows must sum to 1");
      }
    }
  }

  const std::vector<double>& row_for(const Database& x) const {
    const Vector key = x.flatten();
    for (const auto& [in, row] : table) {
      if (in.size() == key.size() && in == key) return row;
    }
    throw ValidationError("database not in the kernel's domain");
  }
};

struct AdditiveNoise {
  DataFunction f;
  NoiseSpec noise;
};

struct BlackBox {
  std::function<Vector(const Database&, Rng&)> sampler;
};

using MechanismKernel = std::variant<DiscreteKernel, AdditiveNoise, BlackBox>;

// Grid used when the exact oracle discretizes an additive-noise mechanism:
// `bins` cells spanning the query's value range extended by `span_scales`
// noise scales on each side, plus two overflow cells.
struct GridSpec {
  int bins = 512;
  double span_scales = 8.0;
};

namespace detail {

inline std::size_t find_or_add(std::vector<Vector>& values, const Vector& v) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() == v.size() && values[i] == v) return i;
  }
  values.push_back(v);
  return values.size() - 1;
}

// Per-support-point output PMFs over a common finite alphabet, with a
// diagnostic for mass truncated into the overflow cells.
struct PreparedOutputs {
  std::vector<std::vector<double>> rows;  // one per support database
  std::size_t out_size = 0;
  double overflow_mass = 0.0;
};

inline PreparedOutputs prepare_outputs(const MechanismKernel& kernel,
                                       const std::vector<Database>& support,
                                       const GridSpec& grid) {
  PreparedOutputs out;
  if (const auto* dk = std::get_if<DiscreteKernel>(&kernel)) {
    dk->validate();
    out.out_size = dk->out_size;
    for (const auto& x : support) out.rows.push_back(dk->row_for(x));
    return out;
  }
  if (std::holds_alternative<BlackBox>(kernel)) {
    throw CapabilityError(
        "exact oracle requires a tabulated or additive-noise kernel");
  }
  const auto& an = std::get<AdditiveNoise>(kernel);
  an.noise.validate();
  std::vector<double> values;
  for (const auto& x : support) {
    Vector fx = an.f.evaluate(x);
    if (an.noise.projection || an.noise.random_projection) {
      const auto a = an.noise.projection_matrix(fx.size());
      fx = a->transpose() * fx;
    }
    if (fx.size() != 1) {
      throw CapabilityError(
          "exact discretization supports scalar query outputs only");
    }
    values.push_back(fx[0]);
  }
  const double scale = an.noise.scale();
  if (scale == 0) {
    // Noiseless: outputs are point masses on the distinct query values.
    std::vector<Vector> labels;
    std::vector<std::size_t> idx;
    for (double v : values) {
      Vector lv(1);
      lv[0] = v;
      idx.push_back(find_or_add(labels, lv));
    }
    out.out_size = labels.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::vector<double> row(out.out_size, 0.0);
      row[idx[i]] = 1.0;
      out.rows.push_back(std::move(row));
    }
    return out;
  }
  const auto [vmin, vmax] = std::minmax_element(values.begin(), values.end());
  const double lo = *vmin - grid.span_scales * scale;
  const double hi = *vmax + grid.span_scales * scale;
  const double width = (hi - lo) / grid.bins;
  out.out_size = static_cast<std::size_t>(grid.bins) + 2;
  for (double v : values) {
    std::vector<double> row(out.out_size, 0.0);
    row[0] = an.noise.cdf(lo - v);
    double prev = row[0];
    for (int b = 0; b < grid.bins; ++b) {
      const double edge = an.noise.cdf(lo + (b + 1) * width - v);
      row[1 + b] = std::max(edge - prev, 0.0);
      prev = edge;
    }
    row[out.out_size - 1] = std::max(1.0 - prev, 0.0);
    out.overflow_mass =
        std::max(out.overflow_mass, row[0] + row[out.out_size - 1]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

// --- Exact oracle and PP check --------------------------------------------

struct MechanismMIResult {
  double value = 0.0;
  // Overflow-mass diagnostic from additive-noise discretization. Binning is
  // post-processing, so the discretized MI never exceeds the continuous one;
  // this field quantifies how coarse the grid was, not an upward error bar.
  double grid_tolerance = 0.0;
  int witness_member = -1;
  int witness_edge = -1;
};

// Ground-truth MI level: max over family members and graph edges of
// I(g(X); M(X) | w(X)) computed by exhaustive enumeration.
inline MechanismMIResult exhaustive_mechanism_mi(const PPFramework& fw,
                                                 const MechanismKernel& kernel,
                                                 const GridSpec& grid = {}) {
  fw.validate();
  const auto& family = fw.theta.discrete();
  const auto edges = fw.graph.edge_functions();
  if (edges.empty()) throw ValidationError("framework has no secret pairs");
  MechanismMIResult result;
  for (std::size_t mi_idx = 0; mi_idx < family.members.size(); ++mi_idx) {
    const auto& member = family.members[mi_idx];
    member.validate();
    const auto prepared = detail::prepare_outputs(kernel, member.support, grid);
    result.grid_tolerance =
        std::max(result.grid_tolerance, prepared.overflow_mass);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& [g, w] = edges[e];
      std::vector<Vector> gvals, wvals;
      std::vector<std::size_t> gi(member.support.size());
      std::vector<std::size_t> wi(member.support.size());
      for (std::size_t s = 0; s < member.support.size(); ++s) {
        gi[s] = detail::find_or_add(gvals, g.evaluate(member.support[s]));
        wi[s] = detail::find_or_add(wvals, w.evaluate(member.support[s]));
      }
      std::vector<double> probs(
          gvals.size() * prepared.out_size * wvals.size(), 0.0);
      for (std::size_t s = 0; s < member.support.size(); ++s) {
        for (std::size_t y = 0; y < prepared.out_size; ++y) {
          probs[(gi[s] * prepared.out_size + y) * wvals.size() + wi[s]] +=
              member.probs[s] * prepared.rows[s][y];
        }
      }
      const double v = discrete_conditional_mi(
          JointPMF({gvals.size(), prepared.out_size, wvals.size()},
                   std::move(probs)));
      if (v > result.value || result.witness_member < 0) {
        result.value = v;
        result.witness_member = static_cast<int>(mi_idx);
        result.witness_edge = static_cast<int>(e);
      }
    }
  }
  return result;
}

struct PPCheckResult {
  bool holds = true;
  // Worst witness: member index, edge index, secret values a/b with shared
  // conditioning value c, and the excess sup_A [P(A|a,c) - e^eps P(A|b,c)].
  int member = -1, edge = -1;
  Vector a, b, c;
  double excess = 0.0;
};

// Exact (eps, delta) check over all positive-probability secret pairs of a
// discrete framework. Uses the one-sided tight form
// sup_A [P(A|R) - e^eps P(A|T)] = sum_y max(0, p(y|R) - e^eps p(y|T)).
inline PPCheckResult pp_ratio_check(const PPFramework& fw,
                                    const MechanismKernel& kernel, double eps,
                                    double delta, const GridSpec& grid = {}) {
  if (eps < 0 || delta < 0) throw ValidationError("eps and delta must be >= 0");
  fw.validate();
  const auto& family = fw.theta.discrete();
  const auto edges = fw.graph.edge_functions();
  if (edges.empty()) throw ValidationError("framework has no secret pairs");
  const double ratio = std::exp(eps);
  PPCheckResult result;
  for (std::size_t mi_idx = 0; mi_idx < family.members.size(); ++mi_idx) {
    const auto& member = family.members[mi_idx];
    member.validate();
    const auto prepared = detail::prepare_outputs(kernel, member.support, grid);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& [g, w] = edges[e];
      std::vector<Vector> gvals, wvals;
      // mass[(a, c)] and aggregated output law given the secret event.
      std::vector<std::size_t> gi(member.support.size());
      std::vector<std::size_t> wi(member.support.size());
      for (std::size_t s = 0; s < member.support.size(); ++s) {
        gi[s] = detail::find_or_add(gvals, g.evaluate(member.support[s]));
        wi[s] = detail::find_or_add(wvals, w.evaluate(member.support[s]));
      }
      std::vector<double> mass(gvals.size() * wvals.size(), 0.0);
      std::vector<std::vector<double>> law(
          gvals.size() * wvals.size(),
          std::vector<double>(prepared.out_size, 0.0));
      for (std::size_t s = 0; s < member.support.size(); ++s) {
        const std::size_t cell = gi[s] * wvals.size() + wi[s];
        mass[cell] += member.probs[s];
        for (std::size_t y = 0; y < prepared.out_size; ++y) {
          law[cell][y] += member.probs[s] * prepared.rows[s][y];
        }
      }
      for (std::size_t cell = 0; cell < law.size(); ++cell) {
        if (mass[cell] > 0) {
          for (double& p : law[cell]) p /= mass[cell];
        }
      }
      for (std::size_t c = 0; c < wvals.size(); ++c) {
        for (std::size_t a = 0; a < gvals.size(); ++a) {
          if (mass[a * wvals.size() + c] <= 0) continue;
          for (std::size_t b = 0; b < gvals.size(); ++b) {
            if (b == a || mass[b * wvals.size() + c] <= 0) continue;
            const auto& pa = law[a * wvals.size() + c];
            const auto& pb = law[b * wvals.size() + c];
            double excess = 0;
            for (std::size_t y = 0; y < prepared.out_size; ++y) {
              excess += std::max(0.0, pa[y] - ratio * pb[y]);
            }
            if (excess > delta + 1e-15 && excess > result.excess) {
              result.holds = false;
              result.member = static_cast<int>(mi_idx);
              result.edge = static_cast<int>(e);
              result.a = gvals[a];
              result.b = gvals[b];
              result.c = wvals[c];
              result.excess = excess;
            }
          }
        }
      }
    }
  }
  return result;
}

// --- Conditional moments --------------------------------------------------

struct McConfig {
  int n_outer = 200;
  int n_inner = 200;
  std::uint64_t seed = 1;
};

// Per-coordinate conditional-variance functionals of a query f given a
// public function w, under one family member. Closed form for Gaussian
// members with linearizable (f, w); exact enumeration for discrete members;
// nested Monte Carlo otherwise.
struct ConditionalMoments {
  Vector e_var;       // E[Var(f_j(X) | w(X))]
  Vector e_sqrt_var;  // E[sqrt(Var(f_j(X) | w(X)))]
  Vector se_var;      // standard errors (zero when exact)
  Vector se_sqrt_var;
  double e_op_norm = 0.0;  // E[||Cov(f|w)||_op]
  double se_op_norm = 0.0;
  double e_mean_sq = 0.0;  // E[||E[f|w]||_2^2] (upper bound under mean boxes)
  double se_mean_sq = 0.0;
  bool exact = false;
};

namespace detail {

inline Matrix psd_pinv(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const double tol =
      1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Vector inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    inv[i] = inv[i] > tol ? 1.0 / inv[i] : 0.0;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline double op_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

inline ConditionalMoments gaussian_closed_form(const Matrix& joint_cov,
                                               const Vector& joint_mean,
                                               double mean_bound,
                                               const Matrix& lf,
                                               const Matrix& lw) {
  const Matrix sff = lf * joint_cov * lf.transpose();
  const Matrix sfw = lf * joint_cov * lw.transpose();
  const Matrix sww = lw * joint_cov * lw.transpose();
  const Matrix explained = sfw * psd_pinv(sww) * sfw.transpose();
  const Matrix cond = sff - explained;
  ConditionalMoments out;
  out.exact = true;
  out.e_var = cond.diagonal().cwiseMax(0.0);
  out.e_sqrt_var = out.e_var.cwiseSqrt();
  out.se_var = Vector::Zero(out.e_var.size());
  out.se_sqrt_var = out.se_var;
  out.e_op_norm = op_norm(cond);
  double mean_sq;
  if (mean_bound > 0) {
    // Supremum of ||L mu||^2 over the mean box, coordinatewise: the per-row
    // l1 norm bound is exact for scalar outputs and an upper bound otherwise.
    mean_sq = 0;
    for (Eigen::Index j = 0; j < lf.rows(); ++j) {
      const double l1 = lf.row(j).cwiseAbs().sum() * mean_bound;
      mean_sq += l1 * l1;
    }
  } else {
    mean_sq = (lf * joint_mean).squaredNorm();
  }
  out.e_mean_sq = mean_sq + explained.trace();
  return out;
}

inline Database sample_member(const ThetaMember& member, Rng& rng) {
  if (const auto* g = std::get_if<GaussianEntriesMember>(&member)) {
    Matrix x(g->means.rows(), g->means.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        x(i, j) = rng.gaussian(g->means(i, j), std::sqrt(g->vars(i, j)));
    return Database(std::move(x));
  }
  if (const auto* g = std::get_if<GaussianRowsMember>(&member)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g->cov);
    const Matrix root = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Matrix x(g->n, g->mean.size());
    Vector z(g->mean.size());
    for (Eigen::Index i = 0; i < g->n; ++i) {
      for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.gaussian();
      x.row(i) = (g->mean + root * z).transpose();
    }
    return Database(std::move(x));
  }
  if (const auto* s = std::get_if<SampleMember>(&member)) {
    return s->sampler(rng);
  }
  const auto& d = std::get<DiscreteMember>(member);
  double u = rng.uniform();
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    u -= d.probs[i];
    if (u <= 0) return d.support[i];
  }
  return d.support.back();
}

inline ConditionalMoments discrete_exact(const DiscreteMember& member,
                                         const DataFunction& f,
                                         const DataFunction& w) {
  std::vector<Vector> wvals;
  std::vector<std::size_t> wi(member.support.size());
  std::vector<Vector> fvals(member.support.size());
  for (std::size_t s = 0; s < member.support.size(); ++s) {
    wi[s] = find_or_add(wvals, w.evaluate(member.support[s]));
    fvals[s] = f.evaluate(member.support[s]);
  }
  const Eigen::Index d = fvals.front().size();
  ConditionalMoments out;
  out.exact = true;
  out.e_var = Vector::Zero(d);
  out.e_sqrt_var = Vector::Zero(d);
  out.se_var = Vector::Zero(d);
  out.se_sqrt_var = Vector::Zero(d);
  for (std::size_t c = 0; c < wvals.size(); ++c) {
    double mass = 0;
    Vector mean = Vector::Zero(d);
    Matrix second = Matrix::Zero(d, d);
    for (std::size_t s = 0; s < member.support.size(); ++s) {
      if (wi[s] != c) continue;
      mass += member.probs[s];
      mean += member.probs[s] * fvals[s];
      second += member.probs[s] * fvals[s] * fvals[s].transpose();
    }
    if (mass <= 0) continue;
    mean /= mass;
    const Matrix cov = second / mass - mean * mean.transpose();
    const Vector var = cov.diagonal().cwiseMax(0.0);
    out.e_var += mass * var;
    out.e_sqrt_var += mass * var.cwiseSqrt();
    out.e_op_norm += mass * op_norm(cov);
    out.e_mean_sq += mass * mean.squaredNorm();
  }
  return out;
}

}  // namespace detail

inline ConditionalMoments conditional_moments(const ThetaMember& member,
                                              const DataFunction& f,
                                              const DataFunction& w,
                                              Eigen::Index n, Eigen::Index k,
                                              const McConfig& mc = {}) {
  if (const auto* d = std::get_if<DiscreteMember>(&member)) {
    return detail::discrete_exact(*d, f, w);
  }
  const auto lf = f.as_linear(n, k);
  const auto lw = w.as_linear(n, k);
  if (const auto* g = std::get_if<GaussianEntriesMember>(&member)) {
    if (lf && lw) {
      Matrix cov = Matrix::Zero(n * k, n * k);
      Vector mean(n * k);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          cov(i * k + j, i * k + j) = g->vars(i, j);
          mean[i * k + j] = g->means(i, j);
        }
      }
      return detail::gaussian_closed_form(cov, mean, g->mean_bound, *lf, *lw);
    }
  }
  if (const auto* g = std::get_if<GaussianRowsMember>(&member)) {
    if (lf && lw) {
      const Eigen::Index kk = g->mean.size();
      Matrix cov = Matrix::Zero(g->n * kk, g->n * kk);
      Vector mean(g->n * kk);
      for (Eigen::Index i = 0; i < g->n; ++i) {
        cov.block(i * kk, i * kk, kk, kk) = g->cov;
        mean.segment(i * kk, kk) = g->mean;
      }
      return detail::gaussian_closed_form(cov, mean, 0.0, *lf, *lw);
    }
  }
  // Nested Monte Carlo: conditioning must reduce to fixing rows.
  const bool w_const = w.kind() == DataFunction::Kind::kConstant;
  const bool w_rows = w.kind() == DataFunction::Kind::kComplementRows;
  if (!w_const && !w_rows) {
    throw CapabilityError(
        "conditional moments need linearizable inputs on a Gaussian family, "
        "a discrete family, or a complement-rows/constant public function");
  }
  if (const auto* s = std::get_if<SampleMember>(&member)) {
    if (w_rows && !s->rows_iid) {
      throw CapabilityError(
          "row conditioning on a sampled family requires i.i.d. rows");
    }
  }
  Rng base(mc.seed, 0xC04D);
  const Eigen::Index d = f.output_dim(n, k);
  Vector sum_var = Vector::Zero(d), sum_var2 = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d), sum_sq2 = Vector::Zero(d);
  double sum_op = 0, sum_op2 = 0, sum_ms = 0, sum_ms2 = 0;
  for (int outer = 0; outer < mc.n_outer; ++outer) {
    Rng rng = base.substream(outer);
    Database context = detail::sample_member(member, rng);
    Vector mean = Vector::Zero(d);
    Matrix second = Matrix::Zero(d, d);
    for (int inner = 0; inner < mc.n_inner; ++inner) {
      Database draw = detail::sample_member(member, rng);
      Database x = context;
      if (w_rows) {
        x.values.row(w.index()) = draw.values.row(w.index());
      } else {
        x = draw;
      }
      const Vector fx = f.evaluate(x);
      mean += fx;
      second += fx * fx.transpose();
    }
    mean /= mc.n_inner;
    Matrix cov = (second - mc.n_inner * mean * mean.transpose()) /
                 std::max(mc.n_inner - 1, 1);
    const Vector var = cov.diagonal().cwiseMax(0.0);
    const Vector sq = var.cwiseSqrt();
    const double op = detail::op_norm(cov);
    const double ms = mean.squaredNorm();
    sum_var += var;
    sum_var2 += var.cwiseProduct(var);
    sum_sq += sq;
    sum_sq2 += sq.cwiseProduct(sq);
    sum_op += op;
    sum_op2 += op * op;
    sum_ms += ms;
    sum_ms2 += ms * ms;
  }
  const double no = mc.n_outer;
  auto stderr_of = [&](double s1, double s2) {
    const double var = std::max(s2 / no - (s1 / no) * (s1 / no), 0.0);
    return std::sqrt(var / no);
  };
  ConditionalMoments out;
  out.exact = false;
  out.e_var = sum_var / no;
  out.e_sqrt_var = sum_sq / no;
  out.se_var = Vector(d);
  out.se_sqrt_var = Vector(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.se_var[j] = stderr_of(sum_var[j], sum_var2[j]);
    out.se_sqrt_var[j] = stderr_of(sum_sq[j], sum_sq2[j]);
  }
  out.e_op_norm = sum_op / no;
  out.se_op_norm = stderr_of(sum_op, sum_op2);
  out.e_mean_sq = sum_ms / no;
  out.se_mean_sq = stderr_of(sum_ms, sum_ms2);
  return out;
}

}  // namespace pufferkit

#endif  // PUFFERKIT_INFOTHEORY_HPP
