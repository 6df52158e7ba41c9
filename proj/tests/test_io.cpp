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

#include "pufferkit/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "pufferkit/rng.hpp"

namespace pufferkit {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(DatabaseCsv, RoundTripIsExact) {
  Matrix values(2, 3);
  values << 1.0, -2.5, 0.1234567890123456789, 3e-300, 7.0, 1.0 / 3.0;
  const Database db(values);
  const std::string path = temp_path("pufferkit_db.csv");
  save_database_csv(db, path);
  const Database loaded = load_database_csv(path);
  EXPECT_TRUE((loaded.values.array() == db.values.array()).all());
  std::filesystem::remove(path);
}

TEST(DatabaseCsv, RejectsMalformedFiles) {
  const std::string path = temp_path("pufferkit_bad.csv");
  {
    std::ofstream out(path);
    out << "c0,c1\n1.0\n";
  }
  EXPECT_THROW(load_database_csv(path), ValidationError);
  {
    std::ofstream out(path);
    out << "c0\nnot_a_number\n";
  }
  EXPECT_THROW(load_database_csv(path), ValidationError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_database_csv(path), ValidationError);
}

TEST(PmfCsv, RoundTripPreservesShapeAndMass) {
  const JointPMF pmf({2, 3, 2}, {0.1, 0.05, 0.05, 0.1, 0.1, 0.1, 0.05, 0.05,
                                 0.1, 0.1, 0.1, 0.1});
  const std::string path = temp_path("pufferkit_pmf.csv");
  save_pmf_csv(pmf, path);
  const JointPMF loaded = load_pmf_csv(path);
  ASSERT_EQ(loaded.shape(), pmf.shape());
  for (std::size_t i = 0; i < pmf.probs().size(); ++i) {
    EXPECT_EQ(loaded.probs()[i], pmf.probs()[i]);
  }
  EXPECT_NEAR(discrete_conditional_mi(loaded),
              discrete_conditional_mi(pmf), 0.0);
  std::filesystem::remove(path);
}

TEST(FrameworkConfig, DpPresetWithProductGaussian) {
  const nlohmann::json config = {
      {"n", 4},
      {"k", 1},
      {"preset", "dp"},
      {"theta", {{"type", "product_gaussian"}, {"var_bound", 2.0}}},
  };
  const auto fw = build_framework(config);
  EXPECT_EQ(fw.n, 4);
  EXPECT_EQ(fw.graph.privates.size(), 4u);
  EXPECT_EQ(fw.graph.edges.size(), 4u);
  const auto members = fw.theta.worst_case_members();
  ASSERT_EQ(members.size(), 1u);
  EXPECT_EQ(std::get<GaussianEntriesMember>(members[0]).vars(0, 0), 2.0);
}

TEST(FrameworkConfig, ExplicitGraphAndDiscreteTheta) {
  const nlohmann::json config = {
      {"n", 1},
      {"k", 2},
      {"privates", {{{"kind", "column_selector"}, {"index", 0}}}},
      {"publics", nlohmann::json::array()},
      {"allow_empty_public", true},
      {"theta",
       {{"type", "discrete"},
        {"members",
         {{{"support", {{{0.0, 0.0}}, {{1.0, 1.0}}}},
           {"probs", {0.5, 0.5}}}}}}},
  };
  const auto fw = build_framework(config);
  EXPECT_TRUE(fw.theta.is_discrete());
  EXPECT_EQ(fw.theta.discrete().members[0].support.size(), 2u);
  EXPECT_EQ(fw.graph.privates[0].kind(),
            DataFunction::Kind::kColumnSelector);
}

TEST(FrameworkConfig, RejectsUnknownPresetAndShorthand) {
  EXPECT_THROW(build_framework({{"n", 2}, {"k", 1}, {"preset", "nope"}}),
               ValidationError);
  EXPECT_THROW(
      build_framework(
          {{"n", 2}, {"k", 1}, {"privates", {"mystery"}},
           {"allow_empty_public", true}}),
      ValidationError);
  EXPECT_THROW(build_framework({{"k", 1}}), ValidationError);
}

TEST(FrameworkConfig, ShorthandQueriesEvaluate) {
  const nlohmann::json config = {
      {"n", 2}, {"k", 1}, {"privates", {"avg", "sum"}},
      {"allow_empty_public", true}};
  const auto fw = build_framework(config);
  Matrix values(2, 1);
  values << 1, 3;
  const Database db(values);
  EXPECT_EQ(fw.graph.privates[0].evaluate(db)[0], 2.0);
  EXPECT_EQ(fw.graph.privates[1].evaluate(db)[0], 4.0);
}

TEST(SliceSampleDir, RoundTripBitExact) {
  auto sampler = [](Rng& rng) {
    Matrix values(2, 1);
    values << rng.gaussian(), rng.gaussian();
    return Database(values);
  };
  auto mechanism = [](const Database& db, Rng& rng) {
    Vector out(1);
    out[0] = db.values.sum() + rng.gaussian();
    return out;
  };
  const auto set = build_slice_samples(sampler, mechanism, 2, 1, 6, 3);
  const std::string dir = temp_path("pufferkit_samples");
  save_slice_samples(set, dir);
  const auto loaded = load_slice_samples(dir);
  EXPECT_EQ(loaded.n, set.n);
  EXPECT_EQ(loaded.m, set.m);
  for (Eigen::Index i = 0; i < set.n; ++i) {
    EXPECT_TRUE((loaded.x[i].array() == set.x[i].array()).all());
    EXPECT_TRUE((loaded.y[i].array() == set.y[i].array()).all());
    EXPECT_TRUE((loaded.z[i].array() == set.z[i].array()).all());
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_slice_samples(dir), ValidationError);
}

TEST(JsonWriterTest, ExactOutputAndEscaping) {
  JsonWriter w;
  w.begin_object()
      .field("name", std::string("a\"b"))
      .field("level", 0.5)
      .field("count", static_cast<long long>(3))
      .field("flag", true)
      .begin_array("values")
      .value(1.0)
      .value(2.5)
      .end_array()
      .field("infinite", kInfNats)
      .end_object();
  EXPECT_EQ(w.str(),
            "{\"name\":\"a\\\"b\",\"level\":0.5,\"count\":3,\"flag\":true,"
            "\"values\":[1,2.5],\"infinite\":\"inf\"}");
}

TEST(JsonWriterTest, SeventeenDigitFloats) {
  JsonWriter w;
  w.begin_object().field("v", 1.0 / 3.0).end_object();
  EXPECT_EQ(w.str(), "{\"v\":0.33333333333333331}");
}

TEST(Manifest, DigestAndSerialization) {
  EXPECT_EQ(fnv1a_digest(""), 0xcbf29ce484222325ULL);
  EXPECT_NE(fnv1a_digest("a"), fnv1a_digest("b"));
  RunManifest m;
  m.command = "calibrate";
  m.config_digest = fnv1a_digest("cfg");
  m.seed = 42;
  m.tool_version = "0.1.0";
  m.wall_seconds = 0.25;
  const std::string json = m.to_json();
  EXPECT_EQ(json.find("{\"command\":\"calibrate\""), 0u);
  EXPECT_NE(json.find("\"seed\":42"), std::string::npos);
  EXPECT_NE(json.find("\"tool_version\":\"0.1.0\""), std::string::npos);
  EXPECT_NE(json.find("\"wall_seconds\":0.25"), std::string::npos);
  // Deterministic: same inputs, identical bytes.
  EXPECT_EQ(json, m.to_json());
}

}  // namespace
}  // namespace pufferkit
