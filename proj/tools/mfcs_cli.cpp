// mfcs: run feedback-loop conformal experiments and weight checks.
//
//   mfcs design --config run.ini --out results/
//   mfcs active-learning --config al.ini --out results/ --bounded
//   mfcs verify-weights --n 3 --t 2 --depths 1,2 --trials 100

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "mfcs/io.hpp"
#include "mfcs/sim.hpp"
#include "mfcs/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFailure = 3;

struct RunArgs {
  std::string config;
  std::string out;
  int parallelism = 0;
  std::string seeds;
  bool bounded = false;
};

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("MFCS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return omp_get_num_procs();
}

int run_experiment_command(const RunArgs& args, mfcs::ExperimentMode expected) {
  mfcs::ExperimentConfig config = mfcs::load_config(args.config);
  if (config.mode != expected) {
    throw mfcs::ConfigError(fmt::format(
        "config: mode is '{}' but the command runs '{}'",
        config.mode == mfcs::ExperimentMode::kDesign ? "design" : "active-learning",
        expected == mfcs::ExperimentMode::kDesign ? "design" : "active-learning"));
  }
  if (!args.seeds.empty()) {
    std::tie(config.seed_begin, config.seed_end) = mfcs::parse_seed_range(args.seeds);
  }
  if (args.bounded) config.bounded = true;
  config.validate();

  const int threads = resolve_threads(args.parallelism);
  const std::string started = mfcs::utc_now();
  const auto results = mfcs::run_seeds(config, threads);

  std::vector<mfcs::StepRecord> records;
  mfcs::RunManifest manifest;
  for (const auto& r : results) {
    if (r.error) {
      std::cerr << fmt::format("seed {}: error: {}\n", r.seed, *r.error);
      manifest.seed_errors.emplace_back(r.seed, *r.error);
      continue;
    }
    std::cerr << fmt::format("seed {}: ok ({} records)\n", r.seed, r.records.size());
    records.insert(records.end(), r.records.begin(), r.records.end());
  }

  fs::create_directories(args.out);
  const fs::path dir(args.out);
  {
    std::ofstream f(dir / "records.csv");
    mfcs::write_records_csv(f, records);
  }
  {
    std::ofstream f(dir / "summary.csv");
    if (records.empty()) {
      mfcs::write_summary_csv(f, {});
    } else {
      mfcs::write_summary_csv(f, mfcs::aggregate(records));
    }
  }
  manifest.config_hash = mfcs::config_hash(config);
  manifest.tool_version = mfcs::kToolVersion;
  manifest.seed_begin = config.seed_begin;
  manifest.seed_end = config.seed_end;
  manifest.started_at = started;
  manifest.finished_at = mfcs::utc_now();
  manifest.outputs = {(dir / "records.csv").string(), (dir / "summary.csv").string(),
                      (dir / "manifest.json").string()};
  {
    std::ofstream f(dir / "manifest.json");
    mfcs::write_manifest_json(f, manifest);
  }
  return manifest.seed_errors.empty() ? kExitOk : kExitFailure;
}

struct VerifyArgs {
  std::size_t n = 3;
  std::size_t t = 2;
  std::vector<std::size_t> depths;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string out;
};

int run_verify(const VerifyArgs& args) {
  const auto report = mfcs::verify_weights(args.n, args.t, args.depths, args.trials, args.seed);
  std::cout << fmt::format("n={} t={} trials={}\n", report.n, report.t, report.trials);
  std::cout << fmt::format("max |brute - exact|      {:.3e}\n", report.max_brute_vs_exact);
  std::cout << fmt::format("max |exact - d-step(t)|  {:.3e}\n", report.max_exact_vs_full_depth);
  std::cout << "depth  max|d-step - exact|  requests  expected  mean_ms\n";
  for (const auto& d : report.depths) {
    std::cout << fmt::format("{:5}  {:19.3e}  {:8}  {:8.0f}  {:7.3f}\n", d.depth,
                             d.max_deviation_from_exact, d.factor_requests, d.expected_requests,
                             d.mean_ms);
  }
  if (!args.out.empty()) {
    nlohmann::ordered_json j;
    j["n"] = report.n;
    j["t"] = report.t;
    j["trials"] = report.trials;
    j["max_brute_vs_exact"] = report.max_brute_vs_exact;
    j["max_exact_vs_full_depth"] = report.max_exact_vs_full_depth;
    j["passed"] = report.passed;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& d : report.depths) {
      rows.push_back({{"depth", d.depth},
                      {"max_deviation_from_exact", d.max_deviation_from_exact},
                      {"factor_requests", d.factor_requests},
                      {"expected_requests", d.expected_requests},
                      {"mean_ms", d.mean_ms}});
    }
    j["depths"] = rows;
    std::ofstream f(args.out);
    f << j.dump(2) << '\n';
  }
  std::cout << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted conformal prediction under multistep feedback covariate shift"};
  app.require_subcommand(1);

  RunArgs design_args;
  auto* design = app.add_subcommand("design", "Black-box design loop");
  RunArgs al_args;
  auto* al = app.add_subcommand("active-learning", "Active-learning loop");
  for (auto [cmd, a] : {std::pair{design, &design_args}, std::pair{al, &al_args}}) {
    cmd->add_option("--config", a->config, "INI configuration file")->required();
    cmd->add_option("--out", a->out, "Output directory")->required();
    cmd->add_option("--parallelism", a->parallelism, "Worker threads (default: cores)");
    cmd->add_option("--seeds", a->seeds, "Seed range A..B, overrides the config");
    cmd->add_flag("--bounded", a->bounded, "Use the bounded query proposal");
  }

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify-weights", "Compare brute-force, exact and d-step weights");
  verify->add_option("--n", verify_args.n, "IID-initialized points");
  verify->add_option("--t", verify_args.t, "Feedback steps");
  verify->add_option("--depths", verify_args.depths, "Depths to report")->delimiter(',');
  verify->add_option("--trials", verify_args.trials, "Random instances");
  verify->add_option("--seed", verify_args.seed, "First instance seed");
  verify->add_option("--out", verify_args.out, "Optional JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*design) return run_experiment_command(design_args, mfcs::ExperimentMode::kDesign);
    if (*al) return run_experiment_command(al_args, mfcs::ExperimentMode::kActiveLearning);
    if (verify_args.depths.empty()) verify_args.depths = {verify_args.t};
    return run_verify(verify_args);
  } catch (const mfcs::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const mfcs::ParameterError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const mfcs::ComplexityError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
