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

#include "pufferkit/core.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <vector>

#include "pufferkit/rng.hpp"

namespace pufferkit {
namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

TEST(Database, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Database(Matrix(0, 1)), ValidationError);
  Matrix bad = mat({{1.0, std::numeric_limits<double>::quiet_NaN()}});
  EXPECT_THROW(Database{bad}, ValidationError);
}

TEST(Database, FlattenIsRowMajor) {
  Database db(mat({{1, 2}, {3, 4}}));
  Vector flat = db.flatten();
  ASSERT_EQ(flat.size(), 4);
  EXPECT_EQ(flat[0], 1);
  EXPECT_EQ(flat[1], 2);
  EXPECT_EQ(flat[2], 3);
  EXPECT_EQ(flat[3], 4);
}

TEST(EvaluateQuery, AverageQuery) {
  Database db(mat({{1}, {2}, {3}}));
  DataFunction avg = DataFunction::linear(Matrix::Constant(1, 3, 1.0 / 3));
  Vector out = evaluate_query(avg, db);
  ASSERT_EQ(out.size(), 1);
  EXPECT_NEAR(out[0], 2.0, 1e-15);
}

TEST(EvaluateQuery, Selectors) {
  Database db(mat({{1, 2}, {3, 4}}));
  Vector row = DataFunction::row_selector(1).evaluate(db);
  ASSERT_EQ(row.size(), 2);
  EXPECT_EQ(row[0], 3);
  EXPECT_EQ(row[1], 4);
  Vector col = DataFunction::column_selector(0).evaluate(db);
  ASSERT_EQ(col.size(), 2);
  EXPECT_EQ(col[0], 1);
  EXPECT_EQ(col[1], 3);
  Vector rest = DataFunction::complement_rows(0).evaluate(db);
  ASSERT_EQ(rest.size(), 2);
  EXPECT_EQ(rest[0], 3);
  EXPECT_EQ(rest[1], 4);
  Vector cols = DataFunction::complement_columns(1).evaluate(db);
  ASSERT_EQ(cols.size(), 2);
  EXPECT_EQ(cols[0], 1);
  EXPECT_EQ(cols[1], 3);
}

TEST(EvaluateQuery, DimensionMismatchThrows) {
  Database db(mat({{1, 2}, {3, 4}}));
  EXPECT_THROW(DataFunction::row_selector(5).evaluate(db), ValidationError);
  EXPECT_THROW(DataFunction::linear(Matrix::Ones(1, 3)).evaluate(db),
               ValidationError);
}

TEST(DataFunction, LinearEvaluationIsAdditive) {
  Rng rng(7);
  Matrix w(2, 6);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.gaussian();
  DataFunction f = DataFunction::linear(w);
  Matrix a(2, 3), b(2, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = rng.gaussian();
    b(i) = rng.gaussian();
  }
  Vector sum = f.evaluate(Database(a + b));
  Vector parts = f.evaluate(Database(a)) + f.evaluate(Database(b));
  EXPECT_LT((sum - parts).norm(), 1e-12);
}

TEST(DataFunction, AsLinearMatchesEvaluation) {
  Rng rng(3);
  Matrix values(3, 2);
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = rng.gaussian();
  Database db(values);
  std::vector<DataFunction> fns = {
      DataFunction::row_selector(1),    DataFunction::complement_rows(0),
      DataFunction::column_selector(1), DataFunction::complement_columns(0),
      DataFunction::constant(),
  };
  for (const auto& f : fns) {
    const auto w = f.as_linear(3, 2);
    ASSERT_TRUE(w.has_value());
    EXPECT_LT((f.evaluate(db) - *w * db.flatten()).norm(), 1e-14);
  }
}

TEST(DataFunction, CustomTableLookup) {
  Vector in(2), out(1);
  in << 0, 1;
  out << 5;
  DataFunction f = DataFunction::custom({{in, out}});
  Database db(mat({{0, 1}}));
  EXPECT_EQ(f.evaluate(db)[0], 5);
  Database other(mat({{1, 1}}));
  EXPECT_THROW(f.evaluate(other), ValidationError);
  EXPECT_FALSE(f.as_linear(1, 2).has_value());
}

TEST(Graph, DpShorthand) {
  BipartiteSecretGraph g = dp_graph(3);
  EXPECT_EQ(g.privates.size(), 3u);
  EXPECT_EQ(g.publics.size(), 3u);
  EXPECT_EQ(g.edges.size(), 3u);
  g.validate(3, 2);

  // g_i with w_i together carry every database cell exactly once.
  Rng rng(11);
  Matrix values(3, 2);
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = rng.gaussian();
  Database db(values);
  for (const auto& [gf, wf] : g.edge_functions()) {
    Vector gv = gf.evaluate(db);
    Vector wv = wf.evaluate(db);
    std::vector<double> combined(gv.data(), gv.data() + gv.size());
    combined.insert(combined.end(), wv.data(), wv.data() + wv.size());
    Vector flat = db.flatten();
    std::vector<double> all(flat.data(), flat.data() + flat.size());
    std::sort(combined.begin(), combined.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(combined, all);
  }
}

TEST(Graph, ApShorthand) {
  BipartiteSecretGraph g = ap_graph(2);
  EXPECT_EQ(g.privates.size(), 2u);
  EXPECT_TRUE(g.publics.empty());
  EXPECT_TRUE(g.edges.empty());
  g.validate(4, 2);
  const auto pairs = g.edge_functions();
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].second.kind(), DataFunction::Kind::kConstant);
  const auto publics = g.active_publics();
  ASSERT_EQ(publics.size(), 1u);
  EXPECT_EQ(publics[0].kind(), DataFunction::Kind::kConstant);
}

TEST(Graph, DanglingEdgeRejected) {
  BipartiteSecretGraph g;
  g.privates = {DataFunction::row_selector(0), DataFunction::row_selector(1),
                DataFunction::row_selector(2)};
  g.publics = {DataFunction::complement_rows(0)};
  g.edges = {{5, 0}};
  EXPECT_THROW(g.validate(3, 1), ValidationError);
  g.edges = {{0, 0}, {0, 0}};
  EXPECT_THROW(g.validate(3, 1), ValidationError);
}

TEST(DistributionFamily, ValidatesMembers) {
  DiscreteMember bad;
  bad.support = {Database(mat({{0}}))};
  bad.probs = {0.7};
  DistributionFamily::DiscreteFinite fam;
  fam.members = {bad};
  EXPECT_THROW(DistributionFamily{DistributionFamily::Value{fam}},
               ValidationError);
}

TEST(DistributionFamily, WorstCaseProductGaussian) {
  DistributionFamily::ProductGaussian pg;
  pg.mean_bound = 2.0;
  pg.var_bound = 3.0;
  pg.n = 4;
  pg.k = 1;
  DistributionFamily fam{DistributionFamily::Value{pg}};
  const auto worst = fam.worst_case_members();
  ASSERT_EQ(worst.size(), 1u);
  const auto& m = std::get<GaussianEntriesMember>(worst[0]);
  EXPECT_EQ(m.vars.minCoeff(), 3.0);
  EXPECT_EQ(m.mean_bound, 2.0);
}

TEST(DistributionFamily, CovarianceMustBePsd) {
  DistributionFamily::MultivariateGaussian g;
  g.mean = Vector::Zero(2);
  g.cov = mat({{1, 2}, {2, 1}});  // eigenvalues 3 and -1
  g.n = 1;
  EXPECT_THROW(DistributionFamily{DistributionFamily::Value{g}},
               ValidationError);
}

}  // namespace
}  // namespace pufferkit
