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
// Sliced mutual information: random one-dimensional projections of both
// arguments, a scalar MI estimator on the projected pairs, and the average
// over projections. The default scalar estimator is a constrained-class
// ReLU network trained on the Donsker-Varadhan variational objective.

#ifndef PUFFERKIT_SMI_HPP
#define PUFFERKIT_SMI_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"
#include "pufferkit/infotheory.hpp"
#include "pufferkit/rng.hpp"

namespace pufferkit {

// Per record index i: m sampled triples (X_i, Y, Z_i) where Y is the
// mechanism output and Z_i the remaining rows.
struct SliceSampleSet {
  Eigen::Index n = 0, k = 0, d = 0, m = 0;
  std::vector<Matrix> x;  // n entries, each m x k
  std::vector<Matrix> y;  // n entries, each m x d
  std::vector<Matrix> z;  // n entries, each m x k(n-1)

  void validate() const {
    if (n < 1 || k < 1 || d < 1 || m < 2) {
      throw ValidationError("sample set needs n,k,d >= 1 and m >= 2");
    }
    if (x.size() != static_cast<std::size_t>(n) || y.size() != x.size() ||
        z.size() != x.size()) {
      throw ValidationError("sample set needs one block per record");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i].rows() != m || x[i].cols() != k || y[i].rows() != m ||
          y[i].cols() != d || z[i].rows() != m ||
          z[i].cols() != k * (n - 1)) {
        throw ValidationError("sample block dimensions are inconsistent");
      }
      if (!x[i].allFinite() || !y[i].allFinite() || !z[i].allFinite()) {
        throw ValidationError("sample entries must be finite");
      }
    }
  }
};

// Draws m databases and mechanism outputs and splits them into per-record
// triples.
inline SliceSampleSet build_slice_samples(
    const std::function<Database(Rng&)>& data_sampler,
    const std::function<Vector(const Database&, Rng&)>& mechanism,
    Eigen::Index n, Eigen::Index k, Eigen::Index m, std::uint64_t seed) {
  SliceSampleSet set;
  set.n = n;
  set.k = k;
  set.m = m;
  Rng base(seed, 0x5A11CE);
  std::vector<Database> dbs;
  std::vector<Vector> outs;
  for (Eigen::Index j = 0; j < m; ++j) {
    Rng rng = base.substream(j);
    Database db = data_sampler(rng);
    if (db.n() != n || db.k() != k) {
      throw ValidationError("sampler shape does not match (n, k)");
    }
    outs.push_back(mechanism(db, rng));
    dbs.push_back(std::move(db));
  }
  set.d = outs.front().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix xi(m, k), yi(m, set.d), zi(m, k * (n - 1));
    for (Eigen::Index j = 0; j < m; ++j) {
      xi.row(j) = dbs[j].values.row(i);
      yi.row(j) = outs[j].transpose();
      Eigen::Index pos = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r == i) continue;
        zi.block(j, pos, 1, k) = dbs[j].values.row(r);
        pos += k;
      }
    }
    set.x.push_back(std::move(xi));
    set.y.push_back(std::move(yi));
    set.z.push_back(std::move(zi));
  }
  set.validate();
  return set;
}

// --- Neural Donsker-Varadhan scalar estimator ------------------------------

struct NeuralDVConfig {
  Eigen::Index neurons = 64;
  int steps = 500;
  double step_size = 0.05;
  // Inputs are standardized and then multiplied by this factor; the function
  // class's l1 weight caps otherwise leave unit-scale data nearly inside the
  // linear region of every neuron.
  double input_scale = 20.0;
  std::uint64_t init_seed = 0;

  double a() const {
    return std::max(std::log(std::log(static_cast<double>(neurons))), 1.0);
  }

  void validate() const {
    if (neurons < 1 || steps < 0 || !(step_size > 0) || !(input_scale > 0)) {
      throw ValidationError("invalid neural estimator configuration");
    }
  }
};

struct DVEstimate {
  double value = 0.0;
  bool degenerate = false;  // constant inputs: estimate pinned to 0
};

namespace detail {

inline Vector l1_project(Vector v, double radius) {
  const double norm = v.cwiseAbs().sum();
  if (norm <= radius) return v;
  Vector u = v.cwiseAbs();
  std::sort(u.data(), u.data() + u.size(), std::greater<double>());
  double css = 0, theta = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - radius) / (i + 1.0);
    if (u[i] - t > 0) theta = t;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    v[i] = std::copysign(mag, v[i]);
  }
  return v;
}

}  // namespace detail

// Trains g(u, v) = sum_i beta_i relu(w_i . z + b_i) + w0 . z + b0 over
// z = (u, v) in R^3 with the constraint box ||w_i||_1, |b_i| <= 1,
// |beta_i| <= a/(2 ell), ||w0||_1, |b0| <= a, maximizing the empirical DV
// objective mean g(pos) - log mean exp(g(neg)). Negative pairs use the
// cyclic derangement sigma(i) = (i mod m) + 1. Optimization is projected
// gradient ascent with diagonal (Adam-style) preconditioning and cosine
// step decay; constraints re-imposed after every step.
inline DVEstimate dv_neural_mi(const Vector& u, const Matrix& v,
                               const NeuralDVConfig& cfg = {}) {
  cfg.validate();
  const Eigen::Index m = u.size();
  if (m < 2 || v.rows() != m || v.cols() != 2) {
    throw ValidationError("need m >= 2 samples of (u) and (v1, v2)");
  }
  Matrix z(m, 3);
  z.col(0) = u;
  z.col(1) = v.col(0);
  z.col(2) = v.col(1);
  // Standardize each coordinate; constant coordinates collapse to zero.
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double mean = z.col(c).mean();
    const double sd =
        std::sqrt((z.col(c).array() - mean).square().sum() / (m - 1));
    if (sd > 0) {
      z.col(c) = (z.col(c).array() - mean) / sd * cfg.input_scale;
    } else {
      z.col(c).setZero();
    }
  }
  if (z.col(0).isZero() || (z.col(1).isZero() && z.col(2).isZero())) {
    return {0.0, true};
  }
  // Positive pairs in the top block, derangement pairs in the bottom block,
  // so each step needs a single pass through the network.
  Matrix z2(2 * m, 3);
  z2.topRows(m) = z;
  z2.block(m, 0, m, 1) = z.col(0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = (i + 1) % m;  // sigma(i) = (i mod m) + 1
    z2(m + i, 1) = z(j, 1);
    z2(m + i, 2) = z(j, 2);
  }

  const Eigen::Index ell = cfg.neurons;
  const double a = cfg.a();
  const double beta_cap = a / (2.0 * ell);
  Rng rng(cfg.init_seed, 0xD0);
  Matrix w(ell, 3);
  Vector b(ell), beta(ell);
  for (Eigen::Index i = 0; i < ell; ++i) {
    for (Eigen::Index c = 0; c < 3; ++c) w(i, c) = rng.gaussian(0.0, 0.5);
    w.row(i) = detail::l1_project(w.row(i).transpose(), 1.0).transpose();
    b[i] = std::clamp(rng.gaussian(0.0, 0.5), -1.0, 1.0);
    beta[i] = rng.uniform() < 0.5 ? -beta_cap : beta_cap;
  }
  Eigen::RowVectorXd w0 = Eigen::RowVectorXd::Zero(3);
  double b0 = 0.0;

  Matrix mw = Matrix::Zero(ell, 3), vw = Matrix::Zero(ell, 3);
  Vector mb = Vector::Zero(ell), vb = Vector::Zero(ell);
  Vector mbeta = Vector::Zero(ell), vbeta = Vector::Zero(ell);
  Eigen::RowVectorXd mw0 = Eigen::RowVectorXd::Zero(3);
  Eigen::RowVectorXd vw0 = Eigen::RowVectorXd::Zero(3);
  double mb0 = 0, vb0 = 0;

  // Preallocated per-step buffers; the loop itself performs no heap work
  // beyond the l1 projections.
  Matrix h2(2 * m, ell), c2(2 * m, ell);
  Vector g2(2 * m), d2(2 * m), en(m);
  Matrix gw(ell, 3);
  Vector gb(ell), gbeta(ell);
  Eigen::RowVectorXd gw0(3);
  auto forward = [&]() {
    h2.noalias() = z2 * w.transpose();
    h2 = (h2.rowwise() + b.transpose()).cwiseMax(0.0);
    g2.noalias() = h2 * beta;
    g2.noalias() += z2 * w0.transpose();
    g2.array() += b0;
  };
  auto objective = [&]() {
    forward();
    const double shift = g2.tail(m).maxCoeff();
    return g2.head(m).mean() - shift -
           std::log((g2.tail(m).array() - shift).exp().mean());
  };

  for (int t = 0; t < cfg.steps; ++t) {
    const double lr =
        cfg.step_size * 0.5 * (1.0 + std::cos(std::numbers::pi * t / cfg.steps));
    forward();
    const double shift = g2.tail(m).maxCoeff();
    en = (g2.tail(m).array() - shift).exp();
    const double s = en.mean();
    d2.head(m).setConstant(1.0 / m);
    d2.tail(m) = -en / (m * s);
    // Gradients of the objective w.r.t. each parameter block.
    gbeta.noalias() = h2.transpose() * d2;
    c2 = ((h2.array() > 0).cast<double>() *
          (d2 * beta.transpose()).array())
             .matrix();
    gw.noalias() = c2.transpose() * z2;
    gb = c2.colwise().sum();
    gw0.noalias() = d2.transpose() * z2;
    const double gb0 = d2.sum();
    auto adam = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
      mom = 0.9 * mom + 0.1 * grad;
      vel = (vel.array() * 0.999 + 0.001 * grad.array().square()).matrix();
      param =
          (param.array() + lr * mom.array() / (vel.array().sqrt() + 1e-8))
              .matrix();
    };
    adam(w, mw, vw, gw);
    adam(b, mb, vb, gb);
    adam(beta, mbeta, vbeta, gbeta);
    adam(w0, mw0, vw0, gw0);
    mb0 = 0.9 * mb0 + 0.1 * gb0;
    vb0 = 0.999 * vb0 + 0.001 * gb0 * gb0;
    b0 += lr * mb0 / (std::sqrt(vb0) + 1e-8);
    for (Eigen::Index i = 0; i < ell; ++i) {
      w.row(i) = detail::l1_project(w.row(i).transpose(), 1.0).transpose();
      b[i] = std::clamp(b[i], -1.0, 1.0);
      beta[i] = std::clamp(beta[i], -beta_cap, beta_cap);
    }
    w0 = detail::l1_project(w0.transpose(), a).transpose();
    b0 = std::clamp(b0, -a, a);
  }
  return {std::max(objective(), 0.0), false};
}

// Cheap plug-in alternative: quantize each coordinate into equal-width bins
// and compute the discrete MI between the scalar and the pair.
inline DVEstimate quantized_plugin_mi(const Vector& u, const Matrix& v,
                                      int bins = 16) {
  const Eigen::Index m = u.size();
  if (m < 2 || v.rows() != m || v.cols() != 2) {
    throw ValidationError("need m >= 2 samples of (u) and (v1, v2)");
  }
  auto quantize = [&](const Vector& col) {
    std::vector<int> idx(m);
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    if (hi <= lo) return idx;  // constant: all zeros
    for (Eigen::Index i = 0; i < m; ++i) {
      idx[i] = std::min(static_cast<int>((col[i] - lo) / (hi - lo) * bins),
                        bins - 1);
    }
    return idx;
  };
  const auto qu = quantize(u);
  const auto qv1 = quantize(v.col(0));
  const auto qv2 = quantize(v.col(1));
  const std::size_t nb = static_cast<std::size_t>(bins);
  std::vector<double> probs(nb * nb * nb, 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    probs[(qu[i] * nb + qv1[i]) * nb + qv2[i]] += 1.0 / m;
  }
  // I(U; V1, V2) = I(U; V1 | V2) + I(U; V2): evaluate as I(U; (V1,V2)) via a
  // constant third axis.
  std::vector<double> flat(nb * (nb * nb) * 1, 0.0);
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t c = 0; c < nb; ++c)
        flat[(a * (nb * nb) + b * nb + c)] = probs[(a * nb + b) * nb + c];
  return {discrete_conditional_mi(JointPMF({nb, nb * nb, 1}, flat)), false};
}

// --- Sliced estimator -------------------------------------------------------

using ScalarMIEstimator = std::function<double(const Vector&, const Matrix&)>;

inline ScalarMIEstimator neural_dv_estimator(NeuralDVConfig cfg) {
  return [cfg](const Vector& u, const Matrix& v) {
    return dv_neural_mi(u, v, cfg).value;
  };
}

struct SMIEstimate {
  double value = 0.0;  // arithmetic mean of per-projection estimates
  std::vector<double> per_projection;
  std::size_t p = 0;
  double stderr_across_projections = 0.0;
};

namespace detail {

inline Vector sphere_draw(Rng& rng, Eigen::Index dim) {
  Vector v(dim);
  while (true) {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.gaussian();
    const double norm = v.norm();
    if (norm > 0) return v / norm;
  }
}

}  // namespace detail

// Monte Carlo sliced MI between the rows of `x` and the rows of `(y, z)`:
// p uniform unit-sphere projection triples, inner scalar estimator per
// projection, arithmetic mean. Deterministic for a fixed seed regardless of
// the thread count.
inline SMIEstimate smi_mc(const Matrix& x, const Matrix& y, const Matrix& z,
                          std::size_t p, const ScalarMIEstimator& inner,
                          std::uint64_t seed, int threads = 1) {
  if (p < 1) throw ValidationError("need at least one projection");
  if (x.rows() != y.rows() || (z.cols() > 0 && z.rows() != x.rows())) {
    throw ValidationError("sample counts must agree");
  }
  const Eigen::Index m = x.rows();
  Rng base(seed, 0x911);
  SMIEstimate out;
  out.p = p;
  out.per_projection.assign(p, 0.0);
  auto run_one = [&](std::size_t j) {
    Rng rng = base.substream(j);
    const Vector theta = detail::sphere_draw(rng, x.cols());
    const Vector phi = detail::sphere_draw(rng, y.cols());
    Matrix v(m, 2);
    v.col(0) = y * phi;
    if (z.cols() > 0) {
      const Vector psi = detail::sphere_draw(rng, z.cols());
      v.col(1) = z * psi;
    } else {
      v.col(1).setZero();
    }
    out.per_projection[j] = inner(x * theta, v);
  };
  const int workers = std::max(1, threads);
  if (workers == 1 || p == 1) {
    for (std::size_t j = 0; j < p; ++j) run_one(j);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        for (std::size_t j = next.fetch_add(1); j < p; j = next.fetch_add(1)) {
          run_one(j);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  double sum = 0, sum2 = 0;
  for (double v : out.per_projection) {
    sum += v;
    sum2 += v * v;
  }
  out.value = sum / p;
  if (p > 1) {
    const double var =
        std::max(sum2 / p - out.value * out.value, 0.0) / (p - 1);
    out.stderr_across_projections = std::sqrt(var);
  }
  return out;
}

struct SMIDPStatistic {
  double value = 0.0;
  Eigen::Index argmax_row = 0;
  std::vector<double> per_row;
};

// Test statistic: max over records i of the sliced MI between X_i and
// (Y, Z_i); the per-row quantity equals the record's leakage through the
// released output given the rest of the database.
inline SMIDPStatistic smi_dp_statistic(const SliceSampleSet& samples,
                                       std::size_t p,
                                       const NeuralDVConfig& cfg,
                                       std::uint64_t seed, int threads = 1) {
  samples.validate();
  const auto inner = neural_dv_estimator(cfg);
  SMIDPStatistic out;
  Rng base(seed, 0x57A7);
  bool first = true;
  for (Eigen::Index i = 0; i < samples.n; ++i) {
    const auto est =
        smi_mc(samples.x[i], samples.y[i], samples.z[i], p, inner,
               base.substream(i).next_u64(), threads);
    out.per_row.push_back(est.value);
    if (first || est.value > out.value) {
      out.value = est.value;
      out.argmax_row = i;
      first = false;
    }
  }
  return out;
}

struct GaussianSMIOracle {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo average of the exact scalar Gaussian MI -1/2 log(1 - r^2)
// between theta^T X and (phi^T Y, psi^T Z) under a joint Gaussian law with
// the given covariance (axes: first kx coords X, next dy coords Y, rest Z).
inline GaussianSMIOracle smi_gaussian_oracle(const Matrix& cov,
                                             Eigen::Index kx, Eigen::Index dy,
                                             std::size_t n_proj,
                                             std::uint64_t seed) {
  if (cov.rows() != cov.cols() || kx < 1 || dy < 1 || kx + dy > cov.rows()) {
    throw ValidationError("covariance axes do not match (kx, dy)");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff()) {
    throw ValidationError("covariance must be positive definite");
  }
  const Eigen::Index dz = cov.rows() - kx - dy;
  Rng base(seed, 0x06AC);
  double sum = 0, sum2 = 0;
  for (std::size_t j = 0; j < n_proj; ++j) {
    Rng rng = base.substream(j);
    const Vector theta = detail::sphere_draw(rng, kx);
    const Vector phi = detail::sphere_draw(rng, dy);
    Vector a = Vector::Zero(cov.rows());
    a.segment(0, kx) = theta;
    Matrix bmat = Matrix::Zero(cov.rows(), 2);
    bmat.block(kx, 0, dy, 1) = phi;
    if (dz > 0) {
      const Vector psi = detail::sphere_draw(rng, dz);
      bmat.block(kx + dy, 1, dz, 1) = psi;
    }
    const double va = a.transpose() * cov * a;
    const Matrix vb = bmat.transpose() * cov * bmat;
    const Vector cab = bmat.transpose() * cov * a;
    const double explained =
        cab.transpose() * detail::psd_pinv(vb) * cab;
    const double r2 = std::clamp(explained / va, 0.0, 1.0 - 1e-15);
    const double mi = -0.5 * std::log1p(-r2);
    sum += mi;
    sum2 += mi * mi;
  }
  GaussianSMIOracle out;
  out.value = sum / n_proj;
  if (n_proj > 1) {
    const double var =
        std::max(sum2 / n_proj - out.value * out.value, 0.0) / (n_proj - 1);
    out.std_error = std::sqrt(var);
  }
  return out;
}

}  // namespace pufferkit

#endif  // PUFFERKIT_SMI_HPP
