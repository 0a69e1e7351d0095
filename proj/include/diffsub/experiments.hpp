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

//
// Experiment drivers behind the command line tool. Every driver is a pure
// function of its config: trials are spread over a worker pool but results
// are stored by trial index, so output does not depend on scheduling.
//
// Files written to the output directory (all carry the config inline):
//
//   algo-compare  trials.csv   trial,seed,n,k,csg_g,ng_ratio,dcsg_ratio
//                 summary.json ratio statistics and the pass flag
//                 timing.json  wall-clock per method (not reproducible)
//   qualitative   seeds.csv    seed,mse_boundary,dol_boundary,
//                              mse_switch,dol_switch,mse_region,dol_region
//                 summary.json
//   quantitative  runs.csv     sample_size,method,seed,regret
//                 sweep.csv    sample_size,method,mean,std,seeds
//                 summary.json
//   grad-check    grad_check.json
//

#ifndef DIFFSUB_EXPERIMENTS_HPP_
#define DIFFSUB_EXPERIMENTS_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "diffsub/autodiff.hpp"
#include "diffsub/datagen.hpp"
#include "diffsub/dcsg.hpp"
#include "diffsub/dol.hpp"
#include "diffsub/io.hpp"
#include "diffsub/maximize.hpp"
#include "diffsub/mlp.hpp"
#include "diffsub/multilinear.hpp"
#include "diffsub/setfn.hpp"

namespace diffsub {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string experiment = "algo-compare";
  std::uint64_t seed = 0;
  int trials = 50;
  int jobs = 1;
  std::string out_dir;

  // Instance family.
  int n = 12;
  int k = 4;
  double lambda = 1.0;
  double cost_lo = 0.0;
  double cost_hi = 2.0;

  DcsgConfig dcsg;

  // qualitative
  std::size_t qual_samples = 100;
  double qual_noise_std = 0.25;
  TrainConfig qual_train;  // dol_* fields drive the fine-tuning phase

  // quantitative
  std::vector<std::size_t> sample_sizes = {50, 100, 200, 400, 600, 1000};
  std::vector<std::string> methods = {"DOL-NN1", "DOL-NN2", "2S-NN1", "2S-NN2"};
  int context_dim = 6;
  int world_hidden = 10;
  double world_cost_scale = 3.0;
  double world_noise_std = 0.25;
  std::size_t test_samples = 500;
  int hidden_units = 40;
  TrainConfig quant_train;

  // grad-check
  double fd_step = 1e-6;

  ExperimentConfig() {
    dcsg.tau = 0.5;
    qual_train.epochs = 500;
    qual_train.warm_start_epochs = 300;
    qual_train.learning_rate = 0.01;
    qual_train.optimizer = Optimizer::kMomentum;
    qual_train.dol_learning_rate = 2e-4;
    qual_train.dol_optimizer = Optimizer::kGradientDescent;
    qual_train.dcsg.tau = 0.05;
    quant_train.epochs = 100;
    quant_train.warm_start_epochs = 50;
    quant_train.learning_rate = 0.01;
    quant_train.optimizer = Optimizer::kMomentum;
    quant_train.dol_learning_rate = 3e-3;
    quant_train.dol_optimizer = Optimizer::kGradientDescent;
    quant_train.dcsg.tau = 0.25;
  }

  void Validate() const {
    static const char* kNames[] = {"algo-compare", "qualitative",
                                   "quantitative", "grad-check"};
    if (std::find(std::begin(kNames), std::end(kNames), experiment) ==
        std::end(kNames)) {
      throw ConfigError("unknown experiment '" + experiment + "'");
    }
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (n < 1 || n > kMaxGroundSetSize || k < 1 || k > n) {
      throw ConfigError("need 1 <= k <= n <= 64");
    }
    if (!(lambda >= 0.0) || !(cost_lo >= 0.0) || !(cost_hi >= cost_lo)) {
      throw ConfigError("need lambda >= 0 and 0 <= cost_lo <= cost_hi");
    }
    if (qual_samples < 1 || qual_noise_std < 0.0) {
      throw ConfigError("invalid qualitative settings");
    }
    if (sample_sizes.empty() || methods.empty() || context_dim < 1 ||
        world_hidden < 1 || hidden_units < 1 || test_samples < 1 ||
        !(world_cost_scale > 0.0) || world_noise_std < 0.0) {
      throw ConfigError("invalid quantitative settings");
    }
    for (std::size_t s : sample_sizes) {
      if (s < 1) throw ConfigError("sample sizes must be >= 1");
    }
    for (const std::string& m : methods) {
      if (m != "DOL-NN1" && m != "DOL-NN2" && m != "2S-NN1" && m != "2S-NN2") {
        throw ConfigError("unknown method '" + m + "'");
      }
    }
    if (!(fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
    try {
      dcsg.Validate();
      qual_train.Validate();
      quant_train.Validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace internal {

inline const char* OptimizerName(Optimizer o) {
  return o == Optimizer::kMomentum ? "momentum" : "gd";
}
inline Optimizer ParseOptimizer(const std::string& s) {
  if (s == "momentum") return Optimizer::kMomentum;
  if (s == "gd") return Optimizer::kGradientDescent;
  throw ConfigError("unknown optimizer '" + s + "'");
}
inline const char* RoundingName(Rounding r) {
  switch (r) {
    case Rounding::kTopK: return "top-k";
    case Rounding::kThreshold: return "threshold";
    case Rounding::kPerStepHard: return "per-step-hard";
  }
  return "";
}
inline Rounding ParseRounding(const std::string& s) {
  if (s == "top-k") return Rounding::kTopK;
  if (s == "threshold") return Rounding::kThreshold;
  if (s == "per-step-hard") return Rounding::kPerStepHard;
  throw ConfigError("unknown rounding '" + s + "'");
}

inline Json DcsgToJson(const DcsgConfig& c) {
  return {{"tau", c.tau},
          {"gumbel_noise", c.use_gumbel_noise},
          {"extension",
           c.extension.mode == ExtensionMode::kExact ? "exact" : "monte-carlo"},
          {"mc_samples", c.extension.mc_samples},
          {"extension_seed", c.extension.rng_seed},
          {"rounding", RoundingName(c.rounding)},
          {"marginals",
           c.marginal_mode == MarginalMode::kSharedBase ? "shared" : "pairwise"}};
}

inline void DcsgFromJson(const Json& j, DcsgConfig& c) {
  c.tau = j.value("tau", c.tau);
  c.use_gumbel_noise = j.value("gumbel_noise", c.use_gumbel_noise);
  if (j.contains("extension")) {
    const std::string m = j.at("extension").get<std::string>();
    if (m == "exact") {
      c.extension.mode = ExtensionMode::kExact;
    } else if (m == "monte-carlo") {
      c.extension.mode = ExtensionMode::kMonteCarlo;
    } else {
      throw ConfigError("unknown extension mode '" + m + "'");
    }
  }
  c.extension.mc_samples = j.value("mc_samples", c.extension.mc_samples);
  c.extension.rng_seed = j.value("extension_seed", c.extension.rng_seed);
  if (j.contains("rounding")) {
    c.rounding = ParseRounding(j.at("rounding").get<std::string>());
  }
  if (j.contains("marginals")) {
    const std::string m = j.at("marginals").get<std::string>();
    if (m == "shared") {
      c.marginal_mode = MarginalMode::kSharedBase;
    } else if (m == "pairwise") {
      c.marginal_mode = MarginalMode::kPairwise;
    } else {
      throw ConfigError("unknown marginal mode '" + m + "'");
    }
  }
}

inline Json TrainToJson(const TrainConfig& c) {
  Json j = {{"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"optimizer", OptimizerName(c.optimizer)},
            {"momentum", c.momentum},
            {"warm_start_epochs", c.warm_start_epochs},
            {"dcsg", DcsgToJson(c.dcsg)}};
  if (c.dol_learning_rate) j["dol_learning_rate"] = *c.dol_learning_rate;
  if (c.dol_optimizer) j["dol_optimizer"] = OptimizerName(*c.dol_optimizer);
  return j;
}

inline void TrainFromJson(const Json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("optimizer")) {
    c.optimizer = ParseOptimizer(j.at("optimizer").get<std::string>());
  }
  c.momentum = j.value("momentum", c.momentum);
  c.warm_start_epochs = j.value("warm_start_epochs", c.warm_start_epochs);
  if (j.contains("dol_learning_rate")) {
    c.dol_learning_rate = j.at("dol_learning_rate").get<double>();
  }
  if (j.contains("dol_optimizer")) {
    c.dol_optimizer = ParseOptimizer(j.at("dol_optimizer").get<std::string>());
  }
  if (j.contains("dcsg")) DcsgFromJson(j.at("dcsg"), c.dcsg);
}

// Runs body(i) for i in [0, count) on up to `jobs` threads.
inline void ParallelFor(std::size_t count, int jobs,
                        const std::function<void(std::size_t)>& body) {
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

inline Stats Summarize(const std::vector<double>& v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

inline Json StatsToJson(const Stats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"min", s.min},
          {"max", s.max}, {"count", s.count}};
}

inline std::string Num(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::uint64_t Mix(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b = 0) {
  std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (a + 1)) ^
                    (0xC2B2AE3D27D4EB4FULL * (b + 1));
  x ^= x >> 31;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 29;
  return x;
}

inline void WriteOutput(const std::string& dir, const std::string& name,
                        const std::string& text) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  WriteTextFile((std::filesystem::path(dir) / name).string(), text);
}

}  // namespace internal

inline Json ConfigToJson(const ExperimentConfig& c) {
  Json sizes = Json::array();
  for (std::size_t s : c.sample_sizes) sizes.push_back(s);
  return {{"experiment", c.experiment},
          {"seed", c.seed},
          {"trials", c.trials},
          {"n", c.n},
          {"k", c.k},
          {"lambda", c.lambda},
          {"cost_lo", c.cost_lo},
          {"cost_hi", c.cost_hi},
          {"dcsg", internal::DcsgToJson(c.dcsg)},
          {"qualitative",
           {{"samples", c.qual_samples},
            {"noise_std", c.qual_noise_std},
            {"train", internal::TrainToJson(c.qual_train)}}},
          {"quantitative",
           {{"sample_sizes", sizes},
            {"methods", c.methods},
            {"context_dim", c.context_dim},
            {"world_hidden", c.world_hidden},
            {"world_cost_scale", c.world_cost_scale},
            {"world_noise_std", c.world_noise_std},
            {"test_samples", c.test_samples},
            {"hidden_units", c.hidden_units},
            {"train", internal::TrainToJson(c.quant_train)}}},
          {"fd_step", c.fd_step}};
}

// Keys absent from `j` keep their current value. Thread count and output
// directory are runtime settings and are not read from files.
inline void ConfigFromJson(const Json& j, ExperimentConfig& c) {
  try {
    c.experiment = j.value("experiment", c.experiment);
    c.seed = j.value("seed", c.seed);
    c.trials = j.value("trials", c.trials);
    c.n = j.value("n", c.n);
    c.k = j.value("k", c.k);
    c.lambda = j.value("lambda", c.lambda);
    c.cost_lo = j.value("cost_lo", c.cost_lo);
    c.cost_hi = j.value("cost_hi", c.cost_hi);
    if (j.contains("dcsg")) internal::DcsgFromJson(j.at("dcsg"), c.dcsg);
    if (j.contains("qualitative")) {
      const Json& q = j.at("qualitative");
      c.qual_samples = q.value("samples", c.qual_samples);
      c.qual_noise_std = q.value("noise_std", c.qual_noise_std);
      if (q.contains("train")) internal::TrainFromJson(q.at("train"), c.qual_train);
    }
    if (j.contains("quantitative")) {
      const Json& q = j.at("quantitative");
      if (q.contains("sample_sizes")) {
        c.sample_sizes = q.at("sample_sizes").get<std::vector<std::size_t>>();
      }
      if (q.contains("methods")) {
        c.methods = q.at("methods").get<std::vector<std::string>>();
      }
      c.context_dim = q.value("context_dim", c.context_dim);
      c.world_hidden = q.value("world_hidden", c.world_hidden);
      c.world_cost_scale = q.value("world_cost_scale", c.world_cost_scale);
      c.world_noise_std = q.value("world_noise_std", c.world_noise_std);
      c.test_samples = q.value("test_samples", c.test_samples);
      c.hidden_units = q.value("hidden_units", c.hidden_units);
      if (q.contains("train")) internal::TrainFromJson(q.at("train"), c.quant_train);
    }
    c.fd_step = j.value("fd_step", c.fd_step);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// algo-compare

struct AlgoTrial {
  std::uint64_t seed = 0;
  double csg_g = 0.0;
  std::optional<double> ng_ratio;  // empty when g(CSG) <= 0
  std::optional<double> dcsg_ratio;
  double csg_seconds = 0.0;
  double ng_seconds = 0.0;
  double dcsg_seconds = 0.0;
};

struct AlgoCompareReport {
  std::vector<AlgoTrial> trials;
  internal::Stats ng;
  internal::Stats dcsg;
  double runtime_ratio = 0.0;  // total D-CSG time / total CSG time
  bool passed = false;         // mean D-CSG ratio >= 0.9 and >= mean NG ratio
};

inline CostVector UniformCosts(int n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> w(n);
  for (double& v : w) v = u(rng);
  return CostVector(std::move(w));
}

inline AlgoCompareReport RunAlgoCompare(const ExperimentConfig& cfg) {
  cfg.Validate();
  using Clock = std::chrono::steady_clock;
  AlgoCompareReport report;
  report.trials.resize(cfg.trials);
  internal::ParallelFor(cfg.trials, cfg.jobs, [&](std::size_t t) {
    AlgoTrial& trial = report.trials[t];
    trial.seed = internal::Mix(cfg.seed, t);
    const GroundSetInstance instance =
        GenRandomInstance(cfg.n, cfg.k, cfg.lambda, trial.seed);
    const CostVector w =
        UniformCosts(cfg.n, cfg.cost_lo, cfg.cost_hi, trial.seed + 1);
    auto t0 = Clock::now();
    const MaximizerResult csg = Csg(instance, w);
    auto t1 = Clock::now();
    const MaximizerResult ng = NaiveGreedy(instance, w);
    auto t2 = Clock::now();
    const DcsgOutput soft = DcsgSolve(instance, w, cfg.dcsg);
    auto t3 = Clock::now();
    trial.csg_g = csg.objective_g;
    trial.csg_seconds = std::chrono::duration<double>(t1 - t0).count();
    trial.ng_seconds = std::chrono::duration<double>(t2 - t1).count();
    trial.dcsg_seconds = std::chrono::duration<double>(t3 - t2).count();
    if (csg.objective_g > 0.0) {
      trial.ng_ratio = ng.objective_g / csg.objective_g;
      trial.dcsg_ratio = EvalG(instance, w, soft.subset) / csg.objective_g;
    }
  });
  std::vector<double> ng, dc;
  double csg_time = 0.0, dcsg_time = 0.0;
  for (const AlgoTrial& t : report.trials) {
    csg_time += t.csg_seconds;
    dcsg_time += t.dcsg_seconds;
    if (t.ng_ratio) ng.push_back(*t.ng_ratio);
    if (t.dcsg_ratio) dc.push_back(*t.dcsg_ratio);
  }
  report.ng = internal::Summarize(ng);
  report.dcsg = internal::Summarize(dc);
  report.runtime_ratio = csg_time > 0.0 ? dcsg_time / csg_time : 0.0;
  report.passed = !dc.empty() && report.dcsg.mean >= 0.9 &&
                  report.dcsg.mean >= report.ng.mean;

  std::ostringstream csv;
  csv << "trial,seed,n,k,csg_g,ng_ratio,dcsg_ratio\n";
  for (std::size_t i = 0; i < report.trials.size(); ++i) {
    const AlgoTrial& t = report.trials[i];
    csv << i << ',' << t.seed << ',' << cfg.n << ',' << cfg.k << ','
        << internal::Num(t.csg_g) << ','
        << (t.ng_ratio ? internal::Num(*t.ng_ratio) : "") << ','
        << (t.dcsg_ratio ? internal::Num(*t.dcsg_ratio) : "") << '\n';
  }
  Json summary = {{"config", ConfigToJson(cfg)},
                  {"csg_ratio", 1.0},
                  {"ng_ratio", internal::StatsToJson(report.ng)},
                  {"dcsg_ratio", internal::StatsToJson(report.dcsg)},
                  {"excluded_trials", cfg.trials - dc.size()},
                  {"passed", report.passed}};
  Json timing = {{"config", ConfigToJson(cfg)},
                 {"csg_seconds", csg_time},
                 {"dcsg_seconds", dcsg_time},
                 {"dcsg_over_csg", report.runtime_ratio}};
  internal::WriteOutput(cfg.out_dir, "trials.csv", csv.str());
  internal::WriteOutput(cfg.out_dir, "summary.json", summary.dump(2) + "\n");
  internal::WriteOutput(cfg.out_dir, "timing.json", timing.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// qualitative

inline constexpr double kQualitativeSweepStep = 1e-3;

// Smallest z on the sweep grid where predicted w2 - w1 reaches 1; nullopt if
// it never does on the context box.
inline std::optional<double> PredictedBoundary(const MlpModel& model,
                                               const WorldModel& world) {
  const int steps = static_cast<int>(
      std::lround((world.context_hi - world.context_lo) / kQualitativeSweepStep));
  for (int i = 0; i <= steps; ++i) {
    const double z = world.context_lo + i * kQualitativeSweepStep;
    const std::vector<double> w = model.Predict(std::vector<double>{z});
    if (w[1] - w[0] >= 1.0) return z;
  }
  return std::nullopt;
}

struct QualitativeSweep {
  std::optional<double> decision_switch;  // first z where CSG stops picking s2
  double suboptimal_length = 0.0;  // length of z where CSG(w_hat) is suboptimal
};

// Greedy decisions on predicted costs compared with the optimal decision
// under the noise-free costs ({s2, s3} iff w2 - w1 <= 1).
inline QualitativeSweep SweepDecisions(const MlpModel& model,
                                       const GroundSetInstance& instance,
                                       const WorldModel& world) {
  QualitativeSweep out;
  const int steps = static_cast<int>(
      std::lround((world.context_hi - world.context_lo) / kQualitativeSweepStep));
  int wrong = 0;
  for (int i = 0; i <= steps; ++i) {
    const double z = world.context_lo + i * kQualitativeSweepStep;
    const std::vector<double> truth = world.Cost(std::vector<double>{z});
    const CostVector w_true(truth);
    const Subset chosen =
        Csg(instance, model.PredictCost(std::vector<double>{z})).subset;
    if (!out.decision_switch && !chosen.Contains(1)) out.decision_switch = z;
    const Subset best = truth[1] - truth[0] <= 1.0
                            ? Subset::FromIndices({1, 2}, 3)
                            : Subset::FromIndices({0, 2}, 3);
    if (EvalG(instance, w_true, chosen) < EvalG(instance, w_true, best) - 1e-12) {
      ++wrong;
    }
  }
  out.suboptimal_length = wrong * kQualitativeSweepStep;
  return out;
}

struct QualitativeSeed {
  std::uint64_t seed = 0;
  std::optional<double> mse_boundary;
  std::optional<double> dol_boundary;
  QualitativeSweep mse;
  QualitativeSweep dol;
  std::string error;  // training divergence, if any
  bool dol_at_least_as_close = false;
};

struct QualitativeReport {
  double optimal_boundary = kQualitativeBoundary;
  std::vector<QualitativeSeed> seeds;
  int dol_wins = 0;
  bool passed = false;  // strict majority of seeds
};

inline double BoundaryDistance(const std::optional<double>& b) {
  return b ? std::abs(*b - kQualitativeBoundary)
           : std::numeric_limits<double>::infinity();
}

// Per seed: a linear model z -> (w1, w2, w3) is fit by MSE for
// warm_start_epochs; the dol model continues from that fit on the decision
// loss for the remaining epochs.
inline QualitativeReport RunQualitative(const ExperimentConfig& cfg) {
  cfg.Validate();
  const GroundSetInstance instance = QualitativeInstance();
  QualitativeReport report;
  report.seeds.resize(cfg.trials);
  internal::ParallelFor(cfg.trials, cfg.jobs, [&](std::size_t t) {
    QualitativeSeed& out = report.seeds[t];
    out.seed = cfg.seed + t;
    WorldOptions opts;
    opts.noise_std = cfg.qual_noise_std;
    const WorldModel world =
        GenWorld(WorldKind::kQualitativeLinear, 3, 1, out.seed, opts);
    const Dataset data = GenDataset(world, cfg.qual_samples, out.seed);
    try {
      // The dol run repeats the mse run for its warm start, then switches.
      TrainConfig train = cfg.qual_train;
      train.rng_seed = out.seed;
      MlpModel mse({1, 3}, Activation::kTanh, OutputMap::kIdentity, out.seed);
      MlpModel dol = mse;
      TrainConfig mse_cfg = train;
      mse_cfg.epochs = std::max(1, train.warm_start_epochs);
      Train(mse, instance, data.train(), TrainMode::kTwoStage, mse_cfg);
      Train(dol, instance, data.train(), TrainMode::kDol, train);
      out.mse_boundary = PredictedBoundary(mse, world);
      out.dol_boundary = PredictedBoundary(dol, world);
      out.mse = SweepDecisions(mse, instance, world);
      out.dol = SweepDecisions(dol, instance, world);
      out.dol_at_least_as_close =
          BoundaryDistance(out.dol_boundary) <= BoundaryDistance(out.mse_boundary);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  for (const QualitativeSeed& s : report.seeds) {
    report.dol_wins += s.dol_at_least_as_close ? 1 : 0;
  }
  report.passed = 2 * report.dol_wins > cfg.trials;

  auto opt = [](const std::optional<double>& v) {
    return v ? internal::Num(*v) : std::string();
  };
  std::ostringstream csv;
  csv << "seed,mse_boundary,dol_boundary,mse_switch,dol_switch,mse_region,"
         "dol_region,error\n";
  for (const QualitativeSeed& s : report.seeds) {
    csv << s.seed << ',' << opt(s.mse_boundary) << ',' << opt(s.dol_boundary)
        << ',' << opt(s.mse.decision_switch) << ','
        << opt(s.dol.decision_switch) << ','
        << internal::Num(s.mse.suboptimal_length) << ','
        << internal::Num(s.dol.suboptimal_length) << ',' << s.error << '\n';
  }
  Json summary = {{"config", ConfigToJson(cfg)},
                  {"optimal_boundary", kQualitativeBoundary},
                  {"dol_at_least_as_close", report.dol_wins},
                  {"seeds", cfg.trials},
                  {"passed", report.passed}};
  internal::WriteOutput(cfg.out_dir, "seeds.csv", csv.str());
  internal::WriteOutput(cfg.out_dir, "summary.json", summary.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// quantitative

struct QuantitativeRun {
  std::size_t sample_size = 0;
  std::string method;
  std::uint64_t seed = 0;
  std::optional<double> regret;  // empty when the cell failed
  std::optional<double> signed_regret;
  std::string error;
};

struct QuantitativeCell {
  std::size_t sample_size = 0;
  std::string method;
  internal::Stats stats;
  internal::Stats signed_stats;
};

struct QuantitativeReport {
  std::vector<QuantitativeRun> runs;  // sorted by size, method, seed
  std::vector<QuantitativeCell> cells;
  // Per sample size: seeds where DOL-NN1 regret <= 2S-NN1 regret.
  std::map<std::size_t, int> nn1_dol_wins;
  std::map<std::size_t, int> nn1_pairs;
};

inline MlpModel MakeQuantModel(const std::string& method,
                               const ExperimentConfig& cfg, int n,
                               std::uint64_t seed) {
  std::vector<std::size_t> sizes = {static_cast<std::size_t>(cfg.context_dim),
                                    static_cast<std::size_t>(cfg.hidden_units)};
  if (method.ends_with("NN2")) sizes.push_back(cfg.hidden_units);
  sizes.push_back(static_cast<std::size_t>(n));
  return MlpModel(sizes, Activation::kTanh, OutputMap::kSoftplus, seed);
}

// One world, instance and dataset per (sample size, seed); the four methods
// share them and the model initialization of their architecture.
inline QuantitativeRun RunQuantitativeCell(const ExperimentConfig& cfg,
                                           std::size_t size,
                                           const std::string& method,
                                           std::uint64_t seed) {
  QuantitativeRun run{size, method, seed, std::nullopt, std::nullopt, {}};
  WorldOptions opts;
  opts.hidden = cfg.world_hidden;
  opts.cost_scale = cfg.world_cost_scale;
  opts.noise_std = cfg.world_noise_std;
  const WorldModel world = GenWorld(WorldKind::kRandomNonlinear, cfg.n,
                                    cfg.context_dim, internal::Mix(seed, 1), opts);
  const GroundSetInstance instance =
      GenRandomInstance(cfg.n, cfg.k, cfg.lambda, internal::Mix(seed, 2));
  Dataset data = GenDataset(world, size + cfg.test_samples,
                            internal::Mix(seed, 3, size));
  data.train_count = size;
  MlpModel model = MakeQuantModel(method, cfg, cfg.n, internal::Mix(seed, 4));
  TrainConfig train = cfg.quant_train;
  train.rng_seed = internal::Mix(seed, 5, size);
  try {
    Train(model, instance, data.train(),
          method.starts_with("DOL") ? TrainMode::kDol : TrainMode::kTwoStage,
          train);
    run.regret = MeanRegret(model, instance, data.test());
    run.signed_regret = MeanRegret(model, instance, data.test(), true);
    if (!run.regret) run.error = "no test sample with positive objective";
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

inline QuantitativeReport RunQuantitative(const ExperimentConfig& cfg) {
  cfg.Validate();
  std::vector<std::size_t> sizes = cfg.sample_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  std::vector<std::string> methods = cfg.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  QuantitativeReport report;
  for (std::size_t size : sizes) {
    for (const std::string& m : methods) {
      for (int s = 0; s < cfg.trials; ++s) {
        report.runs.push_back({size, m, cfg.seed + s, std::nullopt, std::nullopt, {}});
      }
    }
  }
  // Largest cells first keeps the pool busy until the end.
  std::vector<std::size_t> order(report.runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.runs[a].sample_size > report.runs[b].sample_size;
  });
  internal::ParallelFor(order.size(), cfg.jobs, [&](std::size_t i) {
    QuantitativeRun& r = report.runs[order[i]];
    r = RunQuantitativeCell(cfg, r.sample_size, r.method, r.seed);
  });

  std::ostringstream runs_csv, sweep_csv;
  runs_csv << "sample_size,method,seed,regret,signed_regret,error\n";
  sweep_csv << "sample_size,method,mean,std,seeds,signed_mean\n";
  for (std::size_t size : sizes) {
    for (const std::string& m : methods) {
      std::vector<double> values, signed_values;
      for (const QuantitativeRun& r : report.runs) {
        if (r.sample_size != size || r.method != m) continue;
        runs_csv << size << ',' << m << ',' << r.seed << ','
                 << (r.regret ? internal::Num(*r.regret) : "") << ','
                 << (r.signed_regret ? internal::Num(*r.signed_regret) : "")
                 << ',' << r.error << '\n';
        if (r.regret) values.push_back(*r.regret);
        if (r.signed_regret) signed_values.push_back(*r.signed_regret);
      }
      QuantitativeCell cell{size, m, internal::Summarize(values),
                            internal::Summarize(signed_values)};
      sweep_csv << size << ',' << m << ',' << internal::Num(cell.stats.mean)
                << ',' << internal::Num(cell.stats.std) << ','
                << cell.stats.count << ','
                << internal::Num(cell.signed_stats.mean) << '\n';
      report.cells.push_back(cell);
    }
    std::map<std::uint64_t, double> dol, two;
    for (const QuantitativeRun& r : report.runs) {
      if (r.sample_size != size || !r.regret) continue;
      if (r.method == "DOL-NN1") dol[r.seed] = *r.regret;
      if (r.method == "2S-NN1") two[r.seed] = *r.regret;
    }
    int wins = 0, pairs = 0;
    for (const auto& [seed, v] : dol) {
      auto it = two.find(seed);
      if (it == two.end()) continue;
      ++pairs;
      wins += v <= it->second ? 1 : 0;
    }
    report.nn1_dol_wins[size] = wins;
    report.nn1_pairs[size] = pairs;
  }
  Json wins = Json::object();
  for (const auto& [size, w] : report.nn1_dol_wins) {
    wins[std::to_string(size)] = {{"dol_nn1_le_2s_nn1", w},
                                  {"pairs", report.nn1_pairs[size]}};
  }
  Json summary = {{"config", ConfigToJson(cfg)}, {"seed_comparison", wins}};
  internal::WriteOutput(cfg.out_dir, "runs.csv", runs_csv.str());
  internal::WriteOutput(cfg.out_dir, "sweep.csv", sweep_csv.str());
  internal::WriteOutput(cfg.out_dir, "summary.json", summary.dump(2) + "\n");
  return report;
}

inline const QuantitativeCell* FindCell(const QuantitativeReport& r,
                                        std::size_t size,
                                        const std::string& method) {
  for (const auto& c : r.cells) {
    if (c.sample_size == size && c.method == method) return &c;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// grad-check

struct GradSuite {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradSuite> suites;
  bool passed = false;
};

namespace internal {

// max_i |a_i - b_i| / max(1, |b_i|)
inline double MaxRelError(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return worst;
}

inline std::vector<double> CentralDifference(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// A fixed composite of the smooth tape ops over a length-4 input.
inline ad::NodeId CompositeExpression(ad::Tape& t, ad::NodeId x,
                                      const std::vector<double>& m) {
  const ad::NodeId mat = t.Constant(m, 3, 4);
  const ad::NodeId y = ad::Tanh(t, ad::MatVec(t, mat, x));
  const ad::NodeId p = ad::SoftmaxWithTemperature(t, ad::Concat(t, {y, x}), 0.7);
  const ad::NodeId q = ad::Softplus(t, ad::Mul(t, ad::Slice(t, p, 0, 4), x));
  const ad::NodeId r = ad::Div(t, ad::Exp(t, ad::Scale(t, q, 0.3)),
                               ad::AddConst(t, ad::Sum(t, ad::Mul(t, x, x)), 1.0));
  return ad::Add(t, ad::Dot(t, r, x),
                 ad::Log(t, ad::AddConst(t, ad::Sum(t, q), 1.0)));
}

}  // namespace internal

inline GradCheckReport RunGradCheck(const ExperimentConfig& cfg) {
  cfg.Validate();
  if (cfg.n > 8) throw ConfigError("grad-check needs n <= 8");
  const double h = cfg.fd_step;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GradCheckReport report;

  {  // autodiff ops
    GradSuite suite{"autodiff", 0.0, 1e-4, false};
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> m(12), x0(4);
      for (double& v : m) v = normal(rng);
      for (double& v : x0) v = normal(rng);
      ad::Tape tape;
      const ad::NodeId x = tape.Variable(x0);
      const ad::NodeId out = internal::CompositeExpression(tape, x, m);
      const ad::Gradients g = tape.Backward(out);
      auto f = [&](const std::vector<double>& xv) {
        ad::Tape t;
        return t.scalar(internal::CompositeExpression(t, t.Variable(xv), m));
      };
      suite.max_error = std::max(
          suite.max_error,
          internal::MaxRelError(g[x], internal::CentralDifference(f, x0, h)));
    }
    report.suites.push_back(suite);
  }

  const GroundSetInstance instance =
      GenRandomInstance(cfg.n, cfg.k, cfg.lambda, cfg.seed + 1);
  const CostVector w = UniformCosts(cfg.n, cfg.cost_lo, cfg.cost_hi, cfg.seed + 2);
  ExtensionConfig exact;

  {  // multilinear gradient
    GradSuite suite{"multilinear", 0.0, 1e-6, false};
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> x(cfg.n);
      for (double& v : x) v = 0.05 + 0.9 * unit(rng);
      const std::vector<double> grad = MultilinearGrad(instance.f(), x, exact);
      auto f = [&](const std::vector<double>& xv) {
        return MultilinearValue(instance.f(), xv, exact);
      };
      suite.max_error = std::max(
          suite.max_error,
          internal::MaxRelError(grad, internal::CentralDifference(f, x, h)));
    }
    report.suites.push_back(suite);
  }

  DcsgConfig dcsg = cfg.dcsg;
  dcsg.use_gumbel_noise = false;
  dcsg.extension = exact;

  {  // D-CSG objective in w
    GradSuite suite{"dcsg", 0.0, 1e-4, false};
    const ObjectiveWithGradient og = DcsgObjectiveGradient(instance, w.values(), dcsg);
    auto f = [&](const std::vector<double>& wv) {
      return DcsgObjectiveGradient(instance, wv, dcsg).value;
    };
    suite.max_error =
        internal::MaxRelError(og.gradient, internal::CentralDifference(f, w.vec(), h));
    report.suites.push_back(suite);
  }

  {  // lambda = 0 leaves w out of the objective
    GradSuite suite{"dcsg-lambda0", 0.0, 0.0, false};
    const GroundSetInstance free = instance.WithLambda(0.0);
    const ObjectiveWithGradient og = DcsgObjectiveGradient(free, w.values(), dcsg);
    for (double v : og.gradient) suite.max_error = std::max(suite.max_error, std::abs(v));
    report.suites.push_back(suite);
  }

  {  // decision loss through a small network
    GradSuite suite{"dol-loss", 0.0, 1e-3, false};
    MlpModel model({3, 5, static_cast<std::size_t>(cfg.n)}, Activation::kTanh,
                   OutputMap::kSoftplus, cfg.seed + 3);
    std::vector<double> z(3);
    for (double& v : z) v = normal(rng);
    const Sample sample{z, w.vec()};
    const double ref = Csg(instance, w).objective_g;
    const SampleGradient sg =
        SampleLossGradient(model, instance, sample, true, dcsg, ref, 0);
    std::vector<double> theta = model.GetFlat();
    std::vector<std::size_t> picks(theta.size());
    for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(std::min<std::size_t>(5, picks.size()));
    for (std::size_t p : picks) {
      auto loss_at = [&](double v) {
        MlpModel copy = model;
        std::vector<double> t = theta;
        t[p] = v;
        copy.SetFlat(t);
        return SampleLossGradient(copy, instance, sample, true, dcsg, ref, 0).loss;
      };
      const double fd = (loss_at(theta[p] + h) - loss_at(theta[p] - h)) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(sg.grad[p]), 1e-3});
      suite.max_error = std::max(suite.max_error, std::abs(fd - sg.grad[p]) / scale);
    }
    report.suites.push_back(suite);
  }

  report.passed = true;
  Json suites = Json::array();
  for (GradSuite& s : report.suites) {
    s.passed = s.max_error <= s.tolerance;
    report.passed = report.passed && s.passed;
    suites.push_back({{"suite", s.name},
                      {"max_error", s.max_error},
                      {"tolerance", s.tolerance},
                      {"passed", s.passed}});
  }
  Json out = {{"config", ConfigToJson(cfg)},
              {"suites", suites},
              {"passed", report.passed}};
  internal::WriteOutput(cfg.out_dir, "grad_check.json", out.dump(2) + "\n");
  return report;
}

}  // namespace diffsub

#endif  // DIFFSUB_EXPERIMENTS_HPP_
