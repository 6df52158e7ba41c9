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
// Command-line surface. Exit codes: 0 success, 1 usage error, 2 capability
// error, 3 audit decision = violation.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pufferkit/audit.hpp"
#include "pufferkit/composition.hpp"
#include "pufferkit/core.hpp"
#include "pufferkit/infotheory.hpp"
#include "pufferkit/io.hpp"
#include "pufferkit/meanest.hpp"
#include "pufferkit/mechanisms.hpp"
#include "pufferkit/relations.hpp"
#include "pufferkit/smi.hpp"

namespace pk = pufferkit;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("PUFFERKIT_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pk::ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Output {
  std::string report_path;    // empty: stdout
  std::string manifest_path;  // empty: stdout after the report
};

void emit(const Output& out, const std::string& report,
          pk::RunManifest manifest,
          std::chrono::steady_clock::time_point start) {
  manifest.tool_version = kVersion;
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (out.report_path.empty()) {
    std::cout << report << '\n';
  } else {
    std::ofstream f(out.report_path);
    if (!f) throw pk::ValidationError("cannot write " + out.report_path);
    f << report << '\n';
  }
  std::string manifest_path = out.manifest_path;
  if (manifest_path.empty() && !out.report_path.empty()) {
    manifest_path = out.report_path + ".manifest.json";
  }
  if (manifest_path.empty()) {
    std::cout << manifest.to_json() << '\n';
  } else {
    std::ofstream f(manifest_path);
    if (!f) throw pk::ValidationError("cannot write " + manifest_path);
    f << manifest.to_json() << '\n';
  }
}

pk::MechanismKernel parse_kernel(const nlohmann::json& j, Eigen::Index n,
                                 Eigen::Index k) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "discrete") {
    pk::DiscreteKernel kernel;
    kernel.out_size = j.at("out_size").get<std::size_t>();
    for (const auto& row : j.at("table")) {
      pk::Matrix values(n, k);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < k; ++c)
          values(i, c) = row.at("db").at(i).at(c).get<double>();
      std::vector<double> probs;
      for (const auto& p : row.at("probs")) probs.push_back(p.get<double>());
      kernel.table.emplace_back(pk::Database(values).flatten(),
                                std::move(probs));
    }
    kernel.validate();
    return kernel;
  }
  if (type == "additive") {
    pk::AdditiveNoise an;
    an.f = pk::detail::parse_data_function(j.at("query"), n, k);
    const std::string family = j.at("family").get<std::string>();
    an.noise.family = family == "laplace" ? pk::NoiseSpec::Family::kLaplace
                                          : pk::NoiseSpec::Family::kGaussian;
    an.noise.param = j.at("param").get<double>();
    an.noise.dim = an.f.output_dim(n, k);
    an.noise.validate();
    return an;
  }
  throw pk::ValidationError("unknown kernel type '" + type + "'");
}

std::string calibration_json(const pk::CalibrationReport& r) {
  pk::JsonWriter w;
  w.begin_object()
      .field("method", r.method)
      .field("family", std::string(r.noise.family ==
                                           pk::NoiseSpec::Family::kLaplace
                                       ? "laplace"
                                       : "gaussian"))
      .field("b_or_sigma2", r.noise.param)
      .field("bound_raw", r.bound_raw)
      .field("bound_inflated", r.bound_inflated)
      .field("stderr", r.estimator_stderr)
      .field("witness", r.sup_witness)
      .field("free_regime", r.free_regime)
      .end_object();
  return w.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pufferfish-privacy toolkit: mechanism calibration, privacy "
               "conversions, composition, auditing, and private mean "
               "estimation"};
  app.require_subcommand(1);

  Output out;
  app.add_option("--output", out.report_path, "Write the report here");
  app.add_option("--manifest", out.manifest_path, "Write the manifest here");
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--seed", seed_flag,
                 "RNG seed (fallback: PUFFERKIT_SEED, then 0)");
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  app.add_option("--threads", threads,
                 "Worker threads; results do not depend on this");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate noise");
  std::string fw_path, query = "avg", mechanism = "gaussian";
  double eps = 0.5, sensitivity = 0.0, entropy_lb = 0.0;
  std::size_t sens_dim = 1, proj_ell = 1;
  bool compact = false;
  int mc_outer = 200, mc_inner = 200;
  calibrate->add_option("--framework", fw_path, "Framework config JSON")
      ->required();
  calibrate->add_option("--query", query, "Query: avg, sum, or JSON");
  calibrate->add_option("--eps", eps, "Target privacy level")->required();
  calibrate->add_option("--mechanism", mechanism,
                        "laplace | gaussian | laplace-sensitivity | "
                        "gaussian-sensitivity | gaussian-projection | "
                        "gaussian-entropy | gaussian-ap");
  calibrate->add_option("--sensitivity", sensitivity,
                        "Query sensitivity for sensitivity routes");
  calibrate->add_option("--dim", sens_dim, "Output dimension (sensitivity)");
  calibrate->add_flag("--compact", compact,
                      "Scalar query on a compact range (sharper bound)");
  calibrate->add_option("--ell", proj_ell, "Projection dimension");
  calibrate->add_option("--entropy-lb", entropy_lb,
                        "Lower bound on h(f | g, w) in nats");
  calibrate->add_option("--mc-outer", mc_outer, "Outer Monte Carlo samples");
  calibrate->add_option("--mc-inner", mc_inner, "Inner Monte Carlo samples");

  // convert
  auto* convert = app.add_subcommand("convert", "Convert privacy levels");
  std::string from = "pp", to = "mipp";
  double cv_eps = 1.0, cv_delta = 0.0;
  std::optional<std::size_t> supp_m, max_im_g;
  convert->add_option("--from", from, "pp | mipp | approx-pp");
  convert->add_option("--to", to, "mipp | approx-pp");
  convert->add_option("--eps", cv_eps, "Input level");
  convert->add_option("--delta", cv_delta, "Input delta");
  convert->add_option("--supp-m", supp_m, "Mechanism support size");
  convert->add_option("--max-im-g", max_im_g, "Largest private image size");

  // compose
  auto* compose_cmd = app.add_subcommand("compose", "Compose a budget");
  std::string budget_path;
  compose_cmd->add_option("--budget", budget_path, "Budget JSON file")
      ->required();

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Audit a mechanism");
  std::string samples_dir, reference_dir, mode = "fixed";
  double audit_eps = 0.1, alpha = 0.05, margin = 0.0;
  std::size_t audit_p = 8;
  Eigen::Index neurons = 64;
  int dv_steps = 500;
  audit_cmd->add_option("--samples", samples_dir, "Sample directory")
      ->required();
  audit_cmd->add_option("--eps", audit_eps, "Audited privacy level")
      ->required();
  audit_cmd->add_option("--alpha", alpha, "Type-I budget");
  audit_cmd->add_option("--mode", mode, "fixed | bootstrap");
  audit_cmd->add_option("--margin", margin, "Fixed margin r");
  audit_cmd->add_option("--reference", reference_dir,
                        "Null-calibrated reference samples (bootstrap mode)");
  audit_cmd->add_option("--p", audit_p, "Projections per record");
  audit_cmd->add_option("--neurons", neurons, "DV network width");
  audit_cmd->add_option("--steps", dv_steps, "DV training steps");

  // mean-estimate
  auto* mean_cmd = app.add_subcommand("mean-estimate", "Private mean");
  std::string mean_input, median = "geometric";
  double m_eps = 1.0, m_beta = 0.05, m_c = 1.0, m_mult = 200.0;
  mean_cmd->add_option("--input", mean_input, "Samples CSV")->required();
  mean_cmd->add_option("--eps", m_eps, "Privacy level")->required();
  mean_cmd->add_option("--beta", m_beta, "Failure probability");
  mean_cmd->add_option("--c", m_c, "Second-moment bound");
  mean_cmd->add_option("--m-multiplier", m_mult, "Chunk-count multiplier");
  mean_cmd->add_option("--median", median, "geometric | coordinatewise");

  // oracle-mi
  auto* oracle_cmd = app.add_subcommand("oracle-mi", "Exact MI oracle");
  std::string oracle_fw, kernel_path;
  int grid_bins = 512;
  oracle_cmd->add_option("--framework", oracle_fw, "Framework config JSON")
      ->required();
  oracle_cmd->add_option("--kernel", kernel_path, "Kernel JSON")->required();
  oracle_cmd->add_option("--grid-bins", grid_bins, "Discretization bins");

  // smi-estimate
  auto* smi_cmd = app.add_subcommand("smi-estimate", "Sliced MI estimate");
  std::string smi_dir, inner_kind = "dv";
  std::size_t smi_p = 8;
  Eigen::Index smi_neurons = 64;
  int smi_steps = 500;
  smi_cmd->add_option("--samples", smi_dir, "Sample directory")->required();
  smi_cmd->add_option("--p", smi_p, "Projections per record");
  smi_cmd->add_option("--inner", inner_kind, "dv | plugin");
  smi_cmd->add_option("--neurons", smi_neurons, "DV network width");
  smi_cmd->add_option("--steps", smi_steps, "DV training steps");

  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = resolve_seed(seed_flag);

  try {
    if (*calibrate) {
      const std::string config_bytes = read_file(fw_path);
      pk::PPFramework fw =
          pk::build_framework(nlohmann::json::parse(config_bytes));
      pk::DataFunction f =
          pk::detail::parse_data_function(nlohmann::json(query), fw.n, fw.k);
      pk::McConfig mc{mc_outer, mc_inner, seed};
      pk::CalibrationReport report;
      if (mechanism == "laplace") {
        report = pk::calibrate_laplace(fw, f, eps, mc);
      } else if (mechanism == "gaussian") {
        report = pk::calibrate_gaussian(fw, f, eps, mc);
      } else if (mechanism == "laplace-sensitivity") {
        report = pk::calibrate_laplace_sensitivity(sensitivity, sens_dim, eps);
      } else if (mechanism == "gaussian-sensitivity") {
        report = pk::calibrate_gaussian_sensitivity(sensitivity, sens_dim, eps,
                                                    compact);
      } else if (mechanism == "gaussian-projection") {
        pk::NoiseSpec spec;
        spec.random_projection = pk::NoiseSpec::RandomProjection{
            seed, static_cast<Eigen::Index>(proj_ell)};
        report = pk::calibrate_gaussian_projection(fw, f, eps, spec, mc);
      } else if (mechanism == "gaussian-entropy") {
        report = pk::calibrate_gaussian_entropy_law(fw, f, eps, entropy_lb, mc);
      } else if (mechanism == "gaussian-ap") {
        report = pk::calibrate_gaussian_ap(fw, f, eps, mc);
      } else {
        throw pk::ValidationError("unknown mechanism '" + mechanism + "'");
      }
      pk::RunManifest manifest{"calibrate",
                               pk::fnv1a_digest(config_bytes + query +
                                                mechanism +
                                                std::to_string(eps)),
                               seed};
      emit(out, calibration_json(report), manifest, start);
    } else if (*convert) {
      double value;
      if (from == "pp" && to == "mipp") {
        value = pk::pp_to_mipp(cv_eps);
      } else if (from == "mipp" && to == "approx-pp") {
        value = pk::mipp_to_approx_pp(cv_eps).params_out[1];
      } else if (from == "approx-pp" && to == "mipp") {
        value = pk::approx_pp_to_mipp_finite(cv_eps, cv_delta, supp_m,
                                             max_im_g);
      } else {
        throw pk::ValidationError("unsupported conversion " + from + " -> " +
                                  to);
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", value);
      pk::RunManifest manifest{
          "convert", pk::fnv1a_digest(from + to + std::to_string(cv_eps)),
          seed};
      emit(out, buf, manifest, start);
    } else if (*compose_cmd) {
      const std::string bytes = read_file(budget_path);
      const auto j = nlohmann::json::parse(bytes);
      pk::PrivacyBudget budget;
      for (const auto& e : j.at("entries")) {
        budget.entries.emplace_back(e.at("id").get<std::string>(),
                                    e.at("eps").get<double>());
      }
      budget.eta = j.value("eta", 0.0);
      const std::string mode_str = j.value("mode", "adaptive");
      budget.mode = mode_str == "adaptive"
                        ? pk::CompositionMode::kAdaptive
                        : pk::CompositionMode::kNonAdaptive;
      const std::string prov = j.value("eta_provenance", "none");
      budget.eta_provenance =
          prov == "exact-zero-uc" ? pk::EtaProvenance::kExactZeroUC
          : prov == "cardinality-bound" ? pk::EtaProvenance::kCardinalityBound
          : prov == "logconcave-bound" ? pk::EtaProvenance::kLogconcaveBound
          : prov == "user" ? pk::EtaProvenance::kUser
                           : pk::EtaProvenance::kNone;
      const double total = pk::compose(budget);
      pk::JsonWriter w;
      w.begin_object()
          .field("total", total)
          .field("mode", mode_str)
          .field("eta", budget.eta)
          .field("eta_provenance", prov);
      w.begin_array("entries");
      for (const auto& [id, e] : budget.entries) {
        w.begin_object().field("id", id).field("eps", e).end_object();
      }
      w.end_array().end_object();
      pk::RunManifest manifest{"compose", pk::fnv1a_digest(bytes), seed};
      emit(out, w.str(), manifest, start);
    } else if (*audit_cmd) {
      pk::AuditConfig cfg;
      cfg.eps = audit_eps;
      cfg.level_alpha = alpha;
      cfg.margin = margin;
      cfg.threshold_method = mode == "bootstrap"
                                 ? pk::ThresholdMethod::kBootstrapNull
                                 : pk::ThresholdMethod::kFixedMargin;
      cfg.estimator.neurons = neurons;
      cfg.estimator.steps = dv_steps;
      cfg.p = audit_p;
      cfg.seed = seed;
      cfg.threads = threads;
      if (!reference_dir.empty()) {
        cfg.reference = pk::load_slice_samples(reference_dir);
      }
      const auto samples = pk::load_slice_samples(samples_dir);
      const auto report = pk::audit_dp(samples, cfg);
      pk::JsonWriter w;
      w.begin_object()
          .field("statistic", report.statistic)
          .field("threshold", report.threshold)
          .field("decision", std::string(report.violation
                                             ? "violation"
                                             : "no-violation-detected"))
          .field("argmax_row", static_cast<long long>(report.argmax_row));
      w.begin_array("per_row");
      for (double v : report.per_row) w.value(v);
      w.end_array()
          .field("seeds", report.seed)
          .field("mode", report.mode)
          .end_object();
      pk::RunManifest manifest{
          "audit", pk::fnv1a_digest(samples_dir + std::to_string(audit_eps)),
          seed};
      emit(out, w.str(), manifest, start);
      return report.violation ? 3 : 0;
    } else if (*mean_cmd) {
      const pk::Database db = pk::load_database_csv(mean_input);
      pk::MeanEstConfig cfg;
      cfg.eps = m_eps;
      cfg.beta = m_beta;
      cfg.c = m_c;
      cfg.m_multiplier = m_mult;
      cfg.median = median == "coordinatewise" ? pk::MedianKind::kCoordinatewise
                                              : pk::MedianKind::kGeometric;
      cfg.seed = seed;
      const auto report = pk::private_mean(db.values, cfg);
      pk::JsonWriter w;
      w.begin_object();
      w.begin_array("estimate");
      for (Eigen::Index j = 0; j < report.estimate.size(); ++j) {
        w.value(report.estimate[j]);
      }
      w.end_array()
          .field("m", static_cast<long long>(report.m))
          .field("k", static_cast<long long>(report.chunk_size))
          .field("sigma2", report.sigma2)
          .field("iterations", static_cast<long long>(report.median_iterations))
          .field("median_converged", report.median_converged)
          .field("effective_beta", report.effective_beta)
          .end_object();
      pk::RunManifest manifest{
          "mean-estimate",
          pk::fnv1a_digest(read_file(mean_input) + std::to_string(m_eps)),
          seed};
      emit(out, w.str(), manifest, start);
    } else if (*oracle_cmd) {
      const std::string fw_bytes = read_file(oracle_fw);
      const std::string kernel_bytes = read_file(kernel_path);
      pk::PPFramework fw =
          pk::build_framework(nlohmann::json::parse(fw_bytes));
      const auto kernel =
          parse_kernel(nlohmann::json::parse(kernel_bytes), fw.n, fw.k);
      pk::GridSpec grid;
      grid.bins = grid_bins;
      const auto result = pk::exhaustive_mechanism_mi(fw, kernel, grid);
      pk::JsonWriter w;
      w.begin_object()
          .field("mi_nats", result.value)
          .field("grid_tolerance", result.grid_tolerance)
          .field("witness_member", static_cast<long long>(result.witness_member))
          .field("witness_edge", static_cast<long long>(result.witness_edge))
          .end_object();
      pk::RunManifest manifest{"oracle-mi",
                               pk::fnv1a_digest(fw_bytes + kernel_bytes), seed};
      emit(out, w.str(), manifest, start);
    } else if (*smi_cmd) {
      const auto samples = pk::load_slice_samples(smi_dir);
      pk::NeuralDVConfig cfg;
      cfg.neurons = smi_neurons;
      cfg.steps = smi_steps;
      pk::ScalarMIEstimator inner =
          inner_kind == "plugin"
              ? pk::ScalarMIEstimator([](const pk::Vector& u,
                                         const pk::Matrix& v) {
                  return pk::quantized_plugin_mi(u, v).value;
                })
              : pk::neural_dv_estimator(cfg);
      pk::JsonWriter w;
      w.begin_object();
      w.begin_array("per_row");
      double best = 0;
      long long argmax = 0;
      pk::Rng base(seed, 0x57A7);
      for (Eigen::Index i = 0; i < samples.n; ++i) {
        const auto est =
            pk::smi_mc(samples.x[i], samples.y[i], samples.z[i], smi_p, inner,
                       base.substream(i).next_u64(), threads);
        w.value(est.value);
        if (i == 0 || est.value > best) {
          best = est.value;
          argmax = i;
        }
      }
      w.end_array()
          .field("statistic", best)
          .field("argmax_row", argmax)
          .field("inner", inner_kind)
          .end_object();
      pk::RunManifest manifest{"smi-estimate", pk::fnv1a_digest(smi_dir),
                               seed};
      emit(out, w.str(), manifest, start);
    }
  } catch (const pk::CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << '\n';
    return 2;
  } catch (const pk::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
