// Copyright 2026 The diffsub Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end:
//
//   diffsub algo-compare | qualitative | quantitative | grad-check [options]
//   diffsub gen instance | dataset [options]
//
// Exit status: 0 success, 1 an experiment's built-in check failed, 2 bad
// configuration or arguments. Results go to --out, else $DIFFSUB_OUT_DIR/<name>,
// else results/<name>.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "diffsub/diffsub.hpp"

namespace {

using diffsub::ConfigError;
using diffsub::ExperimentConfig;

constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> trials;
  std::optional<int> jobs;
  std::optional<double> tau;
  std::optional<double> lambda;
  std::optional<int> n;
  std::optional<int> k;
  std::vector<std::size_t> sizes;
};

void AddCommonOptions(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--trials", o.trials, "trials / seeds per cell");
  cmd->add_option("--jobs", o.jobs, "worker threads");
  cmd->add_option("--tau", o.tau, "softmax temperature (all D-CSG uses)");
  cmd->add_option("--lambda", o.lambda, "cost weight");
  cmd->add_option("--n", o.n, "ground set size");
  cmd->add_option("--k", o.k, "cardinality bound");
  cmd->add_option("--sizes", o.sizes, "training sample sizes")->delimiter(',');
}

std::string DefaultOut(const std::string& name) {
  const char* env = std::getenv("DIFFSUB_OUT_DIR");
  const std::filesystem::path root = env && *env ? env : "results";
  return (root / name).string();
}

ExperimentConfig BuildConfig(const std::string& name, const Overrides& o) {
  ExperimentConfig cfg;
  cfg.experiment = name;
  if (name == "qualitative") cfg.trials = 10;
  if (name == "quantitative") {
    cfg.trials = 10;
    cfg.n = 15;
    cfg.k = 5;
  }
  if (name == "grad-check") {
    cfg.n = 6;
    cfg.k = 3;
  }
  if (!o.config_path.empty()) {
    diffsub::Json j;
    try {
      j = diffsub::ReadJsonFile(o.config_path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    // A summary.json carries its config under "config".
    if (j.is_object() && j.contains("config") && j.at("config").is_object()) {
      j = j.at("config");
    }
    diffsub::ConfigFromJson(j, cfg);
    if (cfg.experiment != name) {
      throw ConfigError("config is for '" + cfg.experiment + "', not '" + name + "'");
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.n) cfg.n = *o.n;
  if (o.k) cfg.k = *o.k;
  if (o.tau) {
    cfg.dcsg.tau = *o.tau;
    cfg.qual_train.dcsg.tau = *o.tau;
    cfg.quant_train.dcsg.tau = *o.tau;
  }
  if (!o.sizes.empty()) cfg.sample_sizes = o.sizes;
  cfg.jobs = o.jobs ? *o.jobs
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  cfg.out_dir = o.out.empty() ? DefaultOut(name) : o.out;
  cfg.Validate();
  return cfg;
}

int RunExperiment(const ExperimentConfig& cfg) {
  bool passed = true;
  if (cfg.experiment == "algo-compare") {
    const auto r = diffsub::RunAlgoCompare(cfg);
    std::cout << "NG/CSG    mean " << r.ng.mean << " std " << r.ng.std << "\n"
              << "D-CSG/CSG mean " << r.dcsg.mean << " std " << r.dcsg.std << "\n"
              << "D-CSG/CSG runtime ratio " << r.runtime_ratio << "\n";
    passed = r.passed;
  } else if (cfg.experiment == "qualitative") {
    const auto r = diffsub::RunQualitative(cfg);
    for (const auto& s : r.seeds) {
      std::cout << "seed " << s.seed;
      if (!s.error.empty()) {
        std::cout << " error: " << s.error << "\n";
        continue;
      }
      std::cout << " mse " << (s.mse_boundary ? *s.mse_boundary : -1.0)
                << " dol " << (s.dol_boundary ? *s.dol_boundary : -1.0) << "\n";
    }
    std::cout << "optimal " << r.optimal_boundary << "; dol at least as close in "
              << r.dol_wins << "/" << cfg.trials << " seeds\n";
    passed = r.passed;
  } else if (cfg.experiment == "quantitative") {
    const auto r = diffsub::RunQuantitative(cfg);
    for (const auto& c : r.cells) {
      std::cout << c.sample_size << " " << c.method << " mean " << c.stats.mean
                << " std " << c.stats.std << " signed mean " << c.signed_stats.mean
                << " (" << c.stats.count << " seeds)\n";
    }
  } else {
    const auto r = diffsub::RunGradCheck(cfg);
    for (const auto& s : r.suites) {
      std::cout << s.name << " max error " << s.max_error << " (tol "
                << s.tolerance << ") " << (s.passed ? "ok" : "FAILED") << "\n";
    }
    passed = r.passed;
  }
  std::cout << "results in " << cfg.out_dir << "\n";
  return passed ? 0 : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable cost-scaled greedy and decision-oriented learning"};
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::pair<std::string, CLI::App*>> experiments;
  for (const char* name : {"algo-compare", "qualitative", "quantitative", "grad-check"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    AddCommonOptions(cmd, o);
    experiments.emplace_back(name, cmd);
  }

  CLI::App* gen = app.add_subcommand("gen", "write a random instance or dataset");
  gen->require_subcommand(1);
  int gen_n = 15, gen_k = 5, gen_dim = 6;
  double gen_lambda = 1.0, gen_noise = 0.25, gen_scale = 3.0;
  std::uint64_t gen_seed = 0;
  std::size_t gen_m = 100;
  std::string gen_out, gen_world = "random-nonlinear";
  CLI::App* gen_instance = gen->add_subcommand("instance", "coverage instance as JSON");
  gen_instance->add_option("--n", gen_n);
  gen_instance->add_option("--k", gen_k);
  gen_instance->add_option("--lambda", gen_lambda);
  gen_instance->add_option("--seed", gen_seed);
  gen_instance->add_option("--out", gen_out, "file (default stdout)");
  CLI::App* gen_dataset = gen->add_subcommand("dataset", "dataset as JSON lines");
  gen_dataset->add_option("--world", gen_world)
      ->check(CLI::IsMember({"random-nonlinear", "qualitative-linear"}));
  gen_dataset->add_option("--n", gen_n);
  gen_dataset->add_option("--dim", gen_dim, "context dimension");
  gen_dataset->add_option("--m", gen_m, "sample count");
  gen_dataset->add_option("--noise", gen_noise);
  gen_dataset->add_option("--cost-scale", gen_scale);
  gen_dataset->add_option("--seed", gen_seed);
  gen_dataset->add_option("--out", gen_out, "file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& [name, cmd] : experiments) {
      if (cmd->parsed()) return RunExperiment(BuildConfig(name, o));
    }
    std::ostringstream text;
    if (gen_instance->parsed()) {
      text << diffsub::InstanceToJson(
                  diffsub::GenRandomInstance(gen_n, gen_k, gen_lambda, gen_seed))
                  .dump(2)
           << "\n";
    } else {
      diffsub::WorldOptions opts;
      opts.noise_std = gen_noise;
      opts.cost_scale = gen_scale;
      const auto kind = diffsub::ParseWorldKind(gen_world);
      if (kind == diffsub::WorldKind::kQualitativeLinear) {
        gen_n = 3;
        gen_dim = 1;
      }
      const auto world = diffsub::GenWorld(kind, gen_n, gen_dim, gen_seed, opts);
      diffsub::WriteDataset(text, diffsub::GenDataset(world, gen_m, gen_seed));
    }
    if (gen_out.empty()) {
      std::cout << text.str();
    } else {
      diffsub::WriteTextFile(gen_out, text.str());
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}
