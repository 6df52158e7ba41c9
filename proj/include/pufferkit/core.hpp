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
// Domain types for databases, query/private/public functions, distribution
// families, and the bipartite secret framework they plug into. All types are
// immutable after construction and safe to share across threads.

#ifndef PUFFERKIT_CORE_HPP
#define PUFFERKIT_CORE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pufferkit/errors.hpp"
#include "pufferkit/rng.hpp"

namespace pufferkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// An n x k real matrix: rows are individuals, columns are attributes.
struct Database {
  Matrix values;

  Database() = default;
  explicit Database(Matrix v) : values(std::move(v)) {
    if (values.rows() < 1 || values.cols() < 1) {
      throw ValidationError("database must have at least one row and column");
    }
    if (!values.allFinite()) {
      throw ValidationError("database entries must be finite");
    }
  }

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index k() const { return values.cols(); }

  // Row-major flattening; cell (i, j) lands at position i*k + j.
  Vector flatten() const {
    Vector out(n() * k());
    for (Eigen::Index i = 0; i < n(); ++i)
      for (Eigen::Index j = 0; j < k(); ++j) out[i * k() + j] = values(i, j);
    return out;
  }

  bool operator==(const Database& other) const {
    return values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && values == other.values;
  }
};

// A function on databases; only the enumerated kinds are representable so
// that exact oracles can reason about them.
class DataFunction {
 public:
  enum class Kind {
    kRowSelector,
    kComplementRows,
    kColumnSelector,
    kComplementColumns,
    kLinear,
    kCustom,
    kConstant,
  };

  static DataFunction row_selector(int i) {
    DataFunction f;
    f.kind_ = Kind::kRowSelector;
    f.index_ = i;
    return f;
  }
  static DataFunction complement_rows(int i) {
    DataFunction f;
    f.kind_ = Kind::kComplementRows;
    f.index_ = i;
    return f;
  }
  static DataFunction column_selector(int j) {
    DataFunction f;
    f.kind_ = Kind::kColumnSelector;
    f.index_ = j;
    return f;
  }
  static DataFunction complement_columns(int j) {
    DataFunction f;
    f.kind_ = Kind::kComplementColumns;
    f.index_ = j;
    return f;
  }
  // weights: d x (n*k), applied to the row-major flattening.
  static DataFunction linear(Matrix weights) {
    if (weights.rows() < 1 || weights.cols() < 1) {
      throw ValidationError("linear weights must be non-empty");
    }
    DataFunction f;
    f.kind_ = Kind::kLinear;
    f.weights_ = std::move(weights);
    return f;
  }
  // Tabulated map for finite domains: exact-match lookup on the flattened
  // database.
  static DataFunction custom(
      std::vector<std::pair<Vector, Vector>> table) {
    if (table.empty()) throw ValidationError("custom table must be non-empty");
    const Eigen::Index out_dim = table.front().second.size();
    for (const auto& [in, out] : table) {
      if (out.size() != out_dim) {
        throw ValidationError("custom table outputs must share a dimension");
      }
    }
    DataFunction f;
    f.kind_ = Kind::kCustom;
    f.table_ = std::move(table);
    return f;
  }
  // The constant function; stands in for the public side when the graph has
  // no public functions.
  static DataFunction constant() {
    DataFunction f;
    f.kind_ = Kind::kConstant;
    return f;
  }

  Kind kind() const { return kind_; }
  int index() const { return index_; }
  const Matrix& weights() const { return weights_; }

  // Optional declared finite image, required by operations that need
  // |Im(g)| < infinity on non-tabulated kinds.
  void declare_image(std::vector<Vector> image) {
    declared_image_ = std::move(image);
  }
  const std::optional<std::vector<Vector>>& declared_image() const {
    return declared_image_;
  }

  Eigen::Index output_dim(Eigen::Index n, Eigen::Index k) const {
    switch (kind_) {
      case Kind::kRowSelector:
        return k;
      case Kind::kComplementRows:
        return (n - 1) * k;
      case Kind::kColumnSelector:
        return n;
      case Kind::kComplementColumns:
        return n * (k - 1);
      case Kind::kLinear:
        return weights_.rows();
      case Kind::kCustom:
        return table_.front().second.size();
      case Kind::kConstant:
        return 1;
    }
    return 0;
  }

  void check_compatible(Eigen::Index n, Eigen::Index k) const {
    switch (kind_) {
      case Kind::kRowSelector:
      case Kind::kComplementRows:
        if (index_ < 0 || index_ >= n) {
          throw ValidationError("row index out of range");
        }
        break;
      case Kind::kColumnSelector:
      case Kind::kComplementColumns:
        if (index_ < 0 || index_ >= k) {
          throw ValidationError("column index out of range");
        }
        break;
      case Kind::kLinear:
        if (weights_.cols() != n * k) {
          throw ValidationError("linear weights expect " +
                                std::to_string(weights_.cols()) +
                                " inputs, database has " +
                                std::to_string(n * k));
        }
        break;
      case Kind::kCustom:
        if (table_.front().first.size() != n * k) {
          throw ValidationError("custom table domain does not match database");
        }
        break;
      case Kind::kConstant:
        break;
    }
  }

  Vector evaluate(const Database& x) const {
    const Eigen::Index n = x.n(), k = x.k();
    check_compatible(n, k);
    switch (kind_) {
      case Kind::kRowSelector:
        return x.values.row(index_).transpose();
      case Kind::kComplementRows: {
        Vector out((n - 1) * k);
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (i == index_) continue;
          for (Eigen::Index j = 0; j < k; ++j) out[pos++] = x.values(i, j);
        }
        return out;
      }
      case Kind::kColumnSelector:
        return x.values.col(index_);
      case Kind::kComplementColumns: {
        Vector out(n * (k - 1));
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < k; ++j) {
            if (j == index_) continue;
            out[pos++] = x.values(i, j);
          }
        }
        return out;
      }
      case Kind::kLinear:
        return weights_ * x.flatten();
      case Kind::kCustom: {
        const Vector key = x.flatten();
        for (const auto& [in, out] : table_) {
          if (in.size() == key.size() && in == key) return out;
        }
        throw ValidationError("database not in the custom function's domain");
      }
      case Kind::kConstant: {
        Vector out(1);
        out[0] = 0.0;
        return out;
      }
    }
    throw ValidationError("unreachable data-function kind");
  }

  // Selector and linear kinds all admit a d x (n*k) weight matrix; custom
  // tables do not.
  std::optional<Matrix> as_linear(Eigen::Index n, Eigen::Index k) const {
    check_compatible(n, k);
    const Eigen::Index cells = n * k;
    switch (kind_) {
      case Kind::kLinear:
        return weights_;
      case Kind::kRowSelector: {
        Matrix w = Matrix::Zero(k, cells);
        for (Eigen::Index j = 0; j < k; ++j) w(j, index_ * k + j) = 1.0;
        return w;
      }
      case Kind::kComplementRows: {
        Matrix w = Matrix::Zero((n - 1) * k, cells);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (i == index_) continue;
          for (Eigen::Index j = 0; j < k; ++j) w(row++, i * k + j) = 1.0;
        }
        return w;
      }
      case Kind::kColumnSelector: {
        Matrix w = Matrix::Zero(n, cells);
        for (Eigen::Index i = 0; i < n; ++i) w(i, i * k + index_) = 1.0;
        return w;
      }
      case Kind::kComplementColumns: {
        Matrix w = Matrix::Zero(n * (k - 1), cells);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < k; ++j) {
            if (j == index_) continue;
            w(row++, i * k + j) = 1.0;
          }
        }
        return w;
      }
      case Kind::kConstant:
        return Matrix::Zero(1, cells);
      case Kind::kCustom:
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  Kind kind_ = Kind::kConstant;
  int index_ = 0;
  Matrix weights_;
  std::vector<std::pair<Vector, Vector>> table_;
  std::optional<std::vector<Vector>> declared_image_;
};

inline Vector evaluate_query(const DataFunction& f, const Database& x) {
  return f.evaluate(x);
}

// The (G, W, E) part of the framework.
struct BipartiteSecretGraph {
  std::vector<DataFunction> privates;
  std::vector<DataFunction> publics;
  std::vector<std::pair<int, int>> edges;  // (private index, public index)
  bool allow_empty_public = false;

  void validate(Eigen::Index n, Eigen::Index k) const {
    for (const auto& g : privates) g.check_compatible(n, k);
    for (const auto& w : publics) w.check_compatible(n, k);
    if (publics.empty() || edges.empty()) {
      if (!allow_empty_public && (!publics.empty() || !edges.empty())) {
        throw ValidationError(
            "publics and edges must both be present or both empty");
      }
      if (!allow_empty_public && privates.empty()) {
        throw ValidationError("graph has no private functions");
      }
    }
    std::vector<std::pair<int, int>> seen;
    for (const auto& [gi, wi] : edges) {
      if (gi < 0 || gi >= static_cast<int>(privates.size())) {
        throw ValidationError("edge refers to missing private function " +
                              std::to_string(gi));
      }
      if (wi < 0 || wi >= static_cast<int>(publics.size())) {
        throw ValidationError("edge refers to missing public function " +
                              std::to_string(wi));
      }
      for (const auto& s : seen) {
        if (s.first == gi && s.second == wi) {
          throw ValidationError("duplicate edge");
        }
      }
      seen.emplace_back(gi, wi);
    }
  }

  // Edges as function pairs; with an empty public side every private is
  // paired with the constant function.
  std::vector<std::pair<DataFunction, DataFunction>> edge_functions() const {
    std::vector<std::pair<DataFunction, DataFunction>> out;
    if (publics.empty() && allow_empty_public) {
      for (const auto& g : privates) {
        out.emplace_back(g, DataFunction::constant());
      }
      return out;
    }
    for (const auto& [gi, wi] : edges) {
      out.emplace_back(privates[gi], publics[wi]);
    }
    return out;
  }

  // W* = publics that participate in at least one edge; the constant
  // function when the public side is empty.
  std::vector<DataFunction> active_publics() const {
    if (publics.empty() && allow_empty_public) {
      return {DataFunction::constant()};
    }
    std::vector<DataFunction> out;
    std::vector<bool> used(publics.size(), false);
    for (const auto& [gi, wi] : edges) used[wi] = true;
    for (std::size_t i = 0; i < publics.size(); ++i) {
      if (used[i]) out.push_back(publics[i]);
    }
    return out;
  }
};

// --- Distribution families (Theta) ---------------------------------------

// One explicit PMF over a finite set of databases.
struct DiscreteMember {
  std::vector<Database> support;
  std::vector<double> probs;

  void validate() const {
    if (support.empty() || support.size() != probs.size()) {
      throw ValidationError("discrete member needs matching support/probs");
    }
    double total = 0;
    for (double p : probs) {
      if (p < 0) throw ValidationError("negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ValidationError("discrete member probabilities must sum to 1");
    }
  }
};

// Independent Gaussian entries; per-entry means/vars. mean_bound > 0 marks a
// whole box [-m, m]^{n x k} of admissible mean configurations.
struct GaussianEntriesMember {
  Matrix means;  // n x k
  Matrix vars;   // n x k
  double mean_bound = 0.0;
};

// i.i.d. rows, each N(mean, cov).
struct GaussianRowsMember {
  Vector mean;  // k
  Matrix cov;   // k x k
  Eigen::Index n = 1;
};

struct SampleMember {
  std::function<Database(Rng&)> sampler;
  double second_moment_bound = 0.0;
  bool rows_iid = false;
  Eigen::Index n = 1, k = 1;
};

using ThetaMember = std::variant<DiscreteMember, GaussianEntriesMember,
                                 GaussianRowsMember, SampleMember>;

class DistributionFamily {
 public:
  struct DiscreteFinite {
    std::vector<DiscreteMember> members;
  };
  struct ProductGaussian {
    double mean_bound = 0.0;  // |mu_i| <= m
    double var_bound = 1.0;   // sigma_i^2 <= s
    Eigen::Index n = 1, k = 1;
  };
  struct MultivariateGaussian {
    Vector mean;
    Matrix cov;
    Eigen::Index n = 1;
  };
  struct SampleAccess {
    std::function<Database(Rng&)> sampler;
    double second_moment_bound = 0.0;
    bool rows_iid = false;
    Eigen::Index n = 1, k = 1;
  };

  using Value =
      std::variant<DiscreteFinite, ProductGaussian, MultivariateGaussian,
                   SampleAccess>;

  DistributionFamily() : value_(DiscreteFinite{}) {}
  explicit DistributionFamily(Value v) : value_(std::move(v)) { validate(); }

  const Value& value() const { return value_; }

  bool is_discrete() const {
    return std::holds_alternative<DiscreteFinite>(value_);
  }
  const DiscreteFinite& discrete() const {
    if (!is_discrete()) {
      throw CapabilityError("operation requires a DiscreteFinite family");
    }
    return std::get<DiscreteFinite>(value_);
  }

  // Members attaining the family's extremes for variance-type functionals.
  // Conditional variances under a product Gaussian family are maximized at
  // the variance bound and do not depend on the means.
  std::vector<ThetaMember> worst_case_members() const {
    std::vector<ThetaMember> out;
    if (const auto* d = std::get_if<DiscreteFinite>(&value_)) {
      for (const auto& m : d->members) out.emplace_back(m);
    } else if (const auto* p = std::get_if<ProductGaussian>(&value_)) {
      GaussianEntriesMember m;
      m.means = Matrix::Zero(p->n, p->k);
      m.vars = Matrix::Constant(p->n, p->k, p->var_bound);
      m.mean_bound = p->mean_bound;
      out.emplace_back(std::move(m));
    } else if (const auto* g = std::get_if<MultivariateGaussian>(&value_)) {
      out.emplace_back(GaussianRowsMember{g->mean, g->cov, g->n});
    } else if (const auto* s = std::get_if<SampleAccess>(&value_)) {
      out.emplace_back(SampleMember{s->sampler, s->second_moment_bound,
                                    s->rows_iid, s->n, s->k});
    }
    return out;
  }

  void validate() const {
    if (const auto* d = std::get_if<DiscreteFinite>(&value_)) {
      for (const auto& m : d->members) m.validate();
    } else if (const auto* g = std::get_if<MultivariateGaussian>(&value_)) {
      if (g->cov.rows() != g->cov.cols() ||
          g->cov.rows() != g->mean.size()) {
        throw ValidationError("covariance/mean dimensions disagree");
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(g->cov);
      if (es.eigenvalues().minCoeff() < -1e-10) {
        throw ValidationError("covariance must be positive semidefinite");
      }
    } else if (const auto* s = std::get_if<SampleAccess>(&value_)) {
      if (!std::isfinite(s->second_moment_bound)) {
        throw ValidationError("sample-access family needs a finite "
                              "second-moment bound");
      }
    }
  }

 private:
  Value value_;
};

// The full (G, W, E, Theta) tuple.
struct PPFramework {
  BipartiteSecretGraph graph;
  DistributionFamily theta;
  Eigen::Index n = 1, k = 1;

  void validate() const { graph.validate(n, k); }
};

// The reduction to row-level privacy: g_i selects row i, w_i the rest,
// edges pair them up.
inline BipartiteSecretGraph dp_graph(Eigen::Index n) {
  BipartiteSecretGraph g;
  for (Eigen::Index i = 0; i < n; ++i) {
    g.privates.push_back(DataFunction::row_selector(static_cast<int>(i)));
    g.publics.push_back(DataFunction::complement_rows(static_cast<int>(i)));
    g.edges.emplace_back(static_cast<int>(i), static_cast<int>(i));
  }
  return g;
}

// Attribute-level privacy: column selectors as privates, no public side.
inline BipartiteSecretGraph ap_graph(Eigen::Index k) {
  BipartiteSecretGraph g;
  for (Eigen::Index j = 0; j < k; ++j) {
    g.privates.push_back(DataFunction::column_selector(static_cast<int>(j)));
  }
  g.allow_empty_public = true;
  return g;
}

}  // namespace pufferkit

#endif  // PUFFERKIT_CORE_HPP
