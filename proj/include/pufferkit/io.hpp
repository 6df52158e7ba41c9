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
// File formats: database CSV, probability-table CSV, framework JSON config,
// sliced-sample directories, and deterministic JSON report emission (fixed
// field order, 17-significant-digit floats).

#ifndef PUFFERKIT_IO_HPP
#define PUFFERKIT_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pufferkit/core.hpp"
#include "pufferkit/errors.hpp"
#include "pufferkit/infotheory.hpp"
#include "pufferkit/smi.hpp"

namespace pufferkit {

// --- CSV -------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ValidationError("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number '" + s + "'");
  }
}

}  // namespace detail

// Header row c0,...,c{k-1}; one row per individual.
inline Database load_database_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open database file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty database file");
  const std::size_t k = detail::split_csv_line(line).size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != k) {
      throw ValidationError("inconsistent column count in " + path);
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(detail::parse_double(f));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("database has no rows");
  Matrix values(rows.size(), k);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < k; ++j) values(i, j) = rows[i][j];
  return Database(std::move(values));
}

inline void save_database_csv(const Database& db, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (Eigen::Index j = 0; j < db.k(); ++j) {
    out << (j ? ",c" : "c") << j;
  }
  out << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < db.n(); ++i) {
    for (Eigen::Index j = 0; j < db.k(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", db.values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

// One (index..., prob) tuple per line; shape recovered from the indices.
inline void save_pmf_csv(const JointPMF& pmf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  const auto& shape = pmf.shape();
  std::vector<std::size_t> idx(shape.size(), 0);
  char buf[40];
  for (double p : pmf.probs()) {
    for (std::size_t ax = 0; ax < shape.size(); ++ax) out << idx[ax] << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out << buf << '\n';
    for (std::size_t ax = shape.size(); ax-- > 0;) {
      if (++idx[ax] < shape[ax]) break;
      idx[ax] = 0;
    }
  }
}

inline JointPMF load_pmf_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open probability file " + path);
  std::string line;
  std::vector<std::vector<std::size_t>> indices;
  std::vector<double> values;
  std::size_t rank = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < 2) throw ValidationError("malformed tuple line");
    if (rank == 0) rank = fields.size() - 1;
    if (fields.size() != rank + 1) {
      throw ValidationError("inconsistent tuple arity in " + path);
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rank; ++i) {
      idx.push_back(
          static_cast<std::size_t>(detail::parse_double(fields[i])));
    }
    indices.push_back(std::move(idx));
    values.push_back(detail::parse_double(fields.back()));
  }
  if (indices.empty()) throw ValidationError("empty probability file");
  std::vector<std::size_t> shape(rank, 0);
  for (const auto& idx : indices) {
    for (std::size_t ax = 0; ax < rank; ++ax) {
      shape[ax] = std::max(shape[ax], idx[ax] + 1);
    }
  }
  std::size_t cells = 1;
  for (std::size_t s : shape) cells *= s;
  std::vector<double> probs(cells, 0.0);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::size_t pos = 0;
    for (std::size_t ax = 0; ax < rank; ++ax) {
      pos = pos * shape[ax] + indices[r][ax];
    }
    probs[pos] = values[r];
  }
  return JointPMF(shape, probs);
}

// --- Framework config -------------------------------------------------------

namespace detail {

inline DataFunction parse_data_function(const nlohmann::json& j,
                                        Eigen::Index n, Eigen::Index k) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "avg" || name == "average") {
      Matrix w = Matrix::Constant(1, n * k, 1.0 / static_cast<double>(n * k));
      return DataFunction::linear(std::move(w));
    }
    if (name == "sum") {
      return DataFunction::linear(Matrix::Constant(1, n * k, 1.0));
    }
    if (name == "identity") {
      return DataFunction::linear(Matrix::Identity(n * k, n * k));
    }
    if (name == "constant") return DataFunction::constant();
    throw ValidationError("unknown function shorthand '" + name + "'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "row_selector") {
    return DataFunction::row_selector(j.at("index").get<int>());
  }
  if (kind == "complement_rows") {
    return DataFunction::complement_rows(j.at("index").get<int>());
  }
  if (kind == "column_selector") {
    return DataFunction::column_selector(j.at("index").get<int>());
  }
  if (kind == "complement_columns") {
    return DataFunction::complement_columns(j.at("index").get<int>());
  }
  if (kind == "linear") {
    const auto& rows = j.at("weights");
    Matrix w(rows.size(), rows.at(0).size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < rows.at(r).size(); ++c) {
        w(r, c) = rows.at(r).at(c).get<double>();
      }
    }
    return DataFunction::linear(std::move(w));
  }
  if (kind == "constant") return DataFunction::constant();
  throw ValidationError("unknown function kind '" + kind + "'");
}

inline DistributionFamily parse_theta(const nlohmann::json& j,
                                      Eigen::Index n, Eigen::Index k) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "discrete") {
    DistributionFamily::DiscreteFinite fam;
    for (const auto& mj : j.at("members")) {
      DiscreteMember member;
      for (const auto& dbj : mj.at("support")) {
        Matrix values(n, k);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index c = 0; c < k; ++c)
            values(i, c) = dbj.at(i).at(c).get<double>();
        member.support.emplace_back(std::move(values));
      }
      for (const auto& p : mj.at("probs")) {
        member.probs.push_back(p.get<double>());
      }
      fam.members.push_back(std::move(member));
    }
    return DistributionFamily(std::move(fam));
  }
  if (type == "product_gaussian") {
    DistributionFamily::ProductGaussian fam;
    fam.mean_bound = j.value("mean_bound", 0.0);
    fam.var_bound = j.at("var_bound").get<double>();
    fam.n = n;
    fam.k = k;
    return DistributionFamily(fam);
  }
  if (type == "multivariate_gaussian") {
    DistributionFamily::MultivariateGaussian fam;
    const auto& mean = j.at("mean");
    fam.mean.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      fam.mean[i] = mean.at(i).get<double>();
    }
    const auto& cov = j.at("cov");
    fam.cov.resize(cov.size(), cov.size());
    for (std::size_t r = 0; r < cov.size(); ++r)
      for (std::size_t c = 0; c < cov.size(); ++c)
        fam.cov(r, c) = cov.at(r).at(c).get<double>();
    fam.n = n;
    return DistributionFamily(std::move(fam));
  }
  throw ValidationError("unknown theta type '" + type + "'");
}

}  // namespace detail

inline PPFramework build_framework(const nlohmann::json& config) {
  PPFramework fw;
  try {
    fw.n = config.at("n").get<Eigen::Index>();
    fw.k = config.at("k").get<Eigen::Index>();
    const std::string preset = config.value("preset", std::string());
    if (preset == "dp") {
      fw.graph = dp_graph(fw.n);
    } else if (preset == "ap") {
      fw.graph = ap_graph(fw.k);
    } else if (!preset.empty()) {
      throw ValidationError("unknown preset '" + preset + "'");
    } else {
      for (const auto& j : config.value("privates", nlohmann::json::array())) {
        fw.graph.privates.push_back(
            detail::parse_data_function(j, fw.n, fw.k));
      }
      for (const auto& j : config.value("publics", nlohmann::json::array())) {
        fw.graph.publics.push_back(detail::parse_data_function(j, fw.n, fw.k));
      }
      for (const auto& e : config.value("edges", nlohmann::json::array())) {
        fw.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      }
      fw.graph.allow_empty_public = config.value("allow_empty_public", false);
    }
    if (config.contains("theta")) {
      fw.theta = detail::parse_theta(config.at("theta"), fw.n, fw.k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed framework config: ") +
                          e.what());
  }
  fw.validate();
  return fw;
}

inline PPFramework load_framework(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open framework config " + path);
  nlohmann::json config;
  try {
    in >> config;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return build_framework(config);
}

// --- Sliced sample directories ----------------------------------------------

// One file per record index: row_<i>.csv with header
// x0..x{k-1},y0..y{d-1},z0..z{k(n-1)-1} and m data lines.
inline void save_slice_samples(const SliceSampleSet& set,
                               const std::string& dir) {
  set.validate();
  std::filesystem::create_directories(dir);
  char buf[40];
  for (Eigen::Index i = 0; i < set.n; ++i) {
    std::ofstream out(dir + "/row_" + std::to_string(i) + ".csv");
    if (!out) throw ValidationError("cannot write sample files in " + dir);
    bool first = true;
    for (Eigen::Index c = 0; c < set.k; ++c, first = false) {
      out << (first ? "x" : ",x") << c;
    }
    for (Eigen::Index c = 0; c < set.d; ++c) out << ",y" << c;
    for (Eigen::Index c = 0; c < set.k * (set.n - 1); ++c) out << ",z" << c;
    out << '\n';
    for (Eigen::Index j = 0; j < set.m; ++j) {
      bool lead = true;
      auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << (lead ? "" : ",") << buf;
        lead = false;
      };
      for (Eigen::Index c = 0; c < set.k; ++c) emit(set.x[i](j, c));
      for (Eigen::Index c = 0; c < set.d; ++c) emit(set.y[i](j, c));
      for (Eigen::Index c = 0; c < set.z[i].cols(); ++c) emit(set.z[i](j, c));
      out << '\n';
    }
  }
}

inline SliceSampleSet load_slice_samples(const std::string& dir) {
  std::vector<std::string> files;
  for (Eigen::Index i = 0;; ++i) {
    const std::string path = dir + "/row_" + std::to_string(i) + ".csv";
    if (!std::filesystem::exists(path)) break;
    files.push_back(path);
  }
  if (files.empty()) {
    throw ValidationError("no row_<i>.csv files found in " + dir);
  }
  SliceSampleSet set;
  set.n = static_cast<Eigen::Index>(files.size());
  for (Eigen::Index i = 0; i < set.n; ++i) {
    std::ifstream in(files[i]);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty sample file");
    Eigen::Index k = 0, d = 0, z = 0;
    for (const auto& name : detail::split_csv_line(line)) {
      if (name.starts_with("x")) ++k;
      else if (name.starts_with("y")) ++d;
      else if (name.starts_with("z")) ++z;
      else throw ValidationError("unknown sample column '" + name + "'");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = detail::split_csv_line(line);
      if (static_cast<Eigen::Index>(fields.size()) != k + d + z) {
        throw ValidationError("inconsistent sample line in " + files[i]);
      }
      std::vector<double> row;
      for (const auto& f : fields) row.push_back(detail::parse_double(f));
      rows.push_back(std::move(row));
    }
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    if (i == 0) {
      set.k = k;
      set.d = d;
      set.m = m;
    }
    Matrix xi(m, k), yi(m, d), zi(m, z);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index c = 0; c < k; ++c) xi(j, c) = rows[j][c];
      for (Eigen::Index c = 0; c < d; ++c) yi(j, c) = rows[j][k + c];
      for (Eigen::Index c = 0; c < z; ++c) zi(j, c) = rows[j][k + d + c];
    }
    set.x.push_back(std::move(xi));
    set.y.push_back(std::move(yi));
    set.z.push_back(std::move(zi));
  }
  set.validate();
  return set;
}

// --- Deterministic JSON reports ----------------------------------------------

// Minimal writer preserving insertion order; floats rendered with
// %.17g so reports diff cleanly across runs and platforms.
class JsonWriter {
 public:
  JsonWriter& begin_object() {
    separator();
    out_ += '{';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_object() {
    out_ += '}';
    fresh_ = false;
    return *this;
  }
  JsonWriter& begin_array(const std::string& key) {
    this->key(key);
    out_ += '[';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_array() {
    out_ += ']';
    fresh_ = false;
    return *this;
  }
  JsonWriter& key(const std::string& k) {
    separator();
    append_string(k);
    out_ += ':';
    fresh_ = true;
    return *this;
  }
  JsonWriter& value(double v) {
    separator();
    char buf[40];
    if (std::isfinite(v)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out_ += buf;
    } else {
      append_string(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan"));
    }
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(long long v) {
    separator();
    out_ += std::to_string(v);
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(std::uint64_t v) {
    separator();
    out_ += std::to_string(v);
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(bool v) {
    separator();
    out_ += v ? "true" : "false";
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(const std::string& v) {
    separator();
    append_string(v);
    fresh_ = false;
    return *this;
  }
  JsonWriter& field(const std::string& k, double v) {
    return key(k).value(v);
  }
  JsonWriter& field(const std::string& k, long long v) {
    return key(k).value(v);
  }
  JsonWriter& field(const std::string& k, std::uint64_t v) {
    return key(k).value(v);
  }
  JsonWriter& field(const std::string& k, bool v) { return key(k).value(v); }
  JsonWriter& field(const std::string& k, const std::string& v) {
    return key(k).value(v);
  }

  const std::string& str() const { return out_; }

 private:
  void separator() {
    if (!fresh_ && !out_.empty()) {
      const char last = out_.back();
      if (last != '{' && last != '[' && last != ':') out_ += ',';
    }
    fresh_ = false;
  }
  void append_string(const std::string& s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        default: out_ += c;
      }
    }
    out_ += '"';
  }
  std::string out_;
  bool fresh_ = true;
};

// --- Run manifest ------------------------------------------------------------

inline std::uint64_t fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct RunManifest {
  std::string command;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  std::string tool_version;
  double wall_seconds = 0.0;

  std::string to_json() const {
    JsonWriter w;
    w.begin_object()
        .field("command", command)
        .field("config_digest", config_digest)
        .field("seed", seed)
        .field("tool_version", tool_version)
        .field("wall_seconds", wall_seconds)
        .end_object();
    return w.str();
  }
};

}  // namespace pufferkit

#endif  // PUFFERKIT_IO_HPP
