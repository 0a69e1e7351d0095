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

// End-to-end acceptance checks. Prints one line per criterion:
//
//   criterion N: PASS|FAIL <details>
//
// Usage: acceptance [--criterion N] [--jobs J]. Exit status is 0 only if
// every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "diffsub/diffsub.hpp"
#include "test_util.hpp"

namespace diffsub {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string details;
};

int g_jobs = 1;

std::vector<double> UniformVector(std::size_t n, double lo, double hi,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// CSG against the brute-force optimum of g.
Outcome CsgHalfApproximation() {
  int violations = 0, agree_with_oracle = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const int n = 1 + static_cast<int>(seed % 12);
    const int k = 1 + static_cast<int>(seed % std::min(n, 5));
    const auto inst = GenRandomInstance(n, k, 1.0, seed);
    const CostVector w(UniformVector(n, 0, 2, rng));
    const MaximizerResult q = Csg(inst, w);
    const MaximizerResult opt = BruteForce(inst, w);
    const double slack = (inst.f()(q.subset) - inst.lambda() * EvalC(w, q.subset)) -
                         (0.5 * inst.f()(opt.subset) -
                          inst.lambda() * EvalC(w, opt.subset));
    worst_slack = std::min(worst_slack, slack);
    if (slack < -1e-9) ++violations;
    if (std::abs(opt.objective_g - testing::OracleOptimum(inst, w.vec())) < 1e-9 &&
        q.subset.bits() == testing::OracleCsg(inst, w.vec())) {
      ++agree_with_oracle;
    }
  }
  std::ostringstream os;
  os << "200 instances, violations " << violations << ", min slack "
     << worst_slack << ", oracle agreement " << agree_with_oracle << "/200";
  return {violations == 0 && agree_with_oracle == 200, os.str()};
}

Outcome MultilinearCorrectness() {
  double vertex_err = 0, grad_err = 0, mc_err = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const int n = 9 + static_cast<int>(seed);  // 9..12
    const auto inst = GenRandomInstance(n, 3, 1.0, seed);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      const auto x = SelectionVector::Indicator(Subset(s), n);
      vertex_err = std::max(
          vertex_err, std::abs(MultilinearValue(inst.f(), x.values()) -
                               inst.f()(Subset(s))));
    }
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = 4 + static_cast<int>(seed % 7);  // 4..10
    const auto inst = GenRandomInstance(n, 2, 1.0, 50 + seed);
    const auto x = UniformVector(n, 0.05, 0.95, rng);
    const auto grad = MultilinearGrad(inst.f(), x);
    const auto fd = testing::CentralDiff(
        [&](const std::vector<double>& p) {
          return testing::OracleMultilinear(inst.f(), p);
        },
        x, 1e-6);
    for (int i = 0; i < n; ++i) grad_err = std::max(grad_err, std::abs(grad[i] - fd[i]));
    const ExtensionConfig mc{ExtensionMode::kMonteCarlo, 100000, seed};
    const double exact = MultilinearValue(inst.f(), x);
    mc_err = std::max(mc_err,
                      std::abs(MultilinearValue(inst.f(), x, mc) - exact) /
                          std::abs(exact));
  }
  std::ostringstream os;
  os << "vertex max error " << vertex_err << ", gradient vs FD " << grad_err
     << ", MC relative error " << mc_err;
  return {vertex_err == 0.0 && grad_err < 1e-6 && mc_err <= 0.01, os.str()};
}

Outcome AutodiffSoundness() {
  double worst = 0;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0, 1);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t width = 1 + seed % 8;
    const testing::RandomExpression expr(seed, width);
    std::vector<double> x0(width);
    for (double& v : x0) v = nd(rng);
    ad::Tape t;
    const ad::NodeId x = t.Variable(x0);
    const ad::Gradients g = t.Backward(expr.Build(t, x));
    const auto fd = testing::CentralDiff(
        [&](const std::vector<double>& p) {
          ad::Tape u;
          return u.scalar(expr.Build(u, u.Variable(p)));
        },
        x0, 1e-5);
    for (std::size_t i = 0; i < width; ++i) {
      const double scale = std::max({std::abs(fd[i]), std::abs(g[x][i]), 1e-2});
      worst = std::max(worst, std::abs(g[x][i] - fd[i]) / scale);
    }
  }
  double simplex = 0;
  bool bounds = true;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> h(1 + trial % 20);
    for (double& v : h) v = 10 * nd(rng);
    const double tau = 0.01 + 0.01 * (trial % 300);
    ad::Tape t;
    std::vector<double> noise(h.size(), 0.0);
    if (trial % 2 == 1) noise = ad::SampleGumbel(h.size(), rng);
    const std::vector<double> p = t.value(ad::GumbelSoftmax(t, t.Constant(h), tau, noise));
    simplex = std::max(simplex, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1));
    for (double v : p) bounds = bounds && v >= 0.0 && v <= 1.0;
  }
  std::ostringstream os;
  os << "100 expressions, max relative error " << worst
     << "; softmax |sum - 1| " << simplex;
  return {worst < 1e-4 && simplex <= 1e-12 && bounds, os.str()};
}

// Smallest gap between the best and second-best candidate (dummy included)
// over the rounds CSG runs.
double MinTopTwoGap(const GroundSetInstance& inst, const CostVector& w) {
  double gap = std::numeric_limits<double>::infinity();
  Subset s;
  for (int round = 0; round < inst.k(); ++round) {
    std::vector<double> gains = {0.0};
    int best = -1;
    double top = 0.0;
    for (int e = 0; e < inst.n(); ++e) {
      if (s.Contains(e)) continue;
      const double g = inst.f()(s.With(e)) - inst.f()(s) - 2 * inst.lambda() * w[e];
      gains.push_back(g);
      if (g > top) {
        top = g;
        best = e;
      }
    }
    std::sort(gains.rbegin(), gains.rend());
    gap = std::min(gap, gains[0] - gains[1]);
    if (best < 0) break;
    s = s.With(best);
  }
  return gap;
}

Outcome DcsgConsistency() {
  DcsgConfig cfg;
  cfg.tau = 0.01;
  cfg.rounding = Rounding::kPerStepHard;
  int qualifying = 0, matched = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const int n = 4 + static_cast<int>(seed % 9);
    const int k = 1 + static_cast<int>(seed % std::min(n, 5));
    const auto inst = GenRandomInstance(n, k, 1.0, seed);
    const CostVector w(UniformVector(n, 0, 2, rng));
    if (MinTopTwoGap(inst, w) <= 0.1) continue;
    ++qualifying;
    if (DcsgSolve(inst, w, cfg).subset == Csg(inst, w).subset) ++matched;
  }
  std::ostringstream os;
  os << matched << "/" << qualifying << " qualifying instances reproduce CSG";
  return {qualifying >= 30 && matched == qualifying, os.str()};
}

Outcome AlgoOrdering() {
  ExperimentConfig cfg;
  cfg.experiment = "algo-compare";
  cfg.trials = 50;
  cfg.n = 12;
  cfg.k = 4;
  cfg.jobs = g_jobs;
  const auto r = RunAlgoCompare(cfg);
  std::ostringstream os;
  os << "mean g(D-CSG)/g(CSG) " << r.dcsg.mean << ", mean g(NG)/g(CSG) "
     << r.ng.mean << " over " << r.dcsg.count << " instances; runtime ratio "
     << r.runtime_ratio;
  return {r.passed, os.str()};
}

Outcome Qualitative() {
  const auto inst = QualitativeInstance();
  double identity_err = 0;
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const CostVector w(UniformVector(3, 0, 8, rng));
    const double lhs = EvalG(inst, w, Subset::FromIndices({1, 2}, 3)) -
                       EvalG(inst, w, Subset::FromIndices({0, 2}, 3));
    identity_err = std::max(identity_err, std::abs(lhs - (1 - (w[1] - w[0]))));
  }
  const auto world = GenWorld(WorldKind::kQualitativeLinear, 3, 1, 0);
  const auto at = world.Cost(std::vector<double>{kQualitativeBoundary});
  const double crossing_err = std::abs(at[1] - at[0] - 1.0);

  ExperimentConfig cfg;
  cfg.experiment = "qualitative";
  cfg.trials = 10;
  cfg.jobs = g_jobs;
  const auto r = RunQualitative(cfg);
  std::ostringstream os;
  os << "identity error " << identity_err << ", boundary error " << crossing_err
     << "; DOL at least as close in " << r.dol_wins << "/10 seeds (";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    const auto& s = r.seeds[i];
    os << (i ? " " : "") << (s.mse_boundary ? *s.mse_boundary : -1) << "/"
       << (s.dol_boundary ? *s.dol_boundary : -1);
  }
  int fewer_wrong = 0;
  for (const auto& s : r.seeds) {
    if (s.error.empty() && s.dol.suboptimal_length <= s.mse.suboptimal_length) {
      ++fewer_wrong;
    }
  }
  os << " mse/dol); suboptimal region no larger under DOL in " << fewer_wrong
     << "/10";
  return {identity_err < 1e-12 && crossing_err < 1e-12 && r.passed, os.str()};
}

Outcome Quantitative() {
  ExperimentConfig cfg;
  cfg.experiment = "quantitative";
  cfg.trials = 10;
  cfg.n = 15;
  cfg.k = 5;
  cfg.context_dim = 6;
  cfg.hidden_units = 40;
  cfg.sample_sizes = {50, 100, 200, 1000};
  cfg.methods = {"DOL-NN1", "2S-NN1"};
  cfg.jobs = g_jobs;
  const auto r = RunQuantitative(cfg);
  bool passed = true;
  std::ostringstream os;
  for (std::size_t size : cfg.sample_sizes) {
    const auto* dol = FindCell(r, size, "DOL-NN1");
    const auto* two = FindCell(r, size, "2S-NN1");
    const int wins = r.nn1_dol_wins.at(size);
    const int pairs = r.nn1_pairs.at(size);
    os << "n=" << size << " dol " << dol->stats.mean << " 2s " << two->stats.mean
       << " (signed " << dol->signed_stats.mean << " / " << two->signed_stats.mean
       << ") wins " << wins << "/" << pairs << "; ";
    if (pairs < 10) passed = false;
    if (size == 1000) {
      passed = passed && std::abs(dol->stats.mean - two->stats.mean) <= 0.05;
    } else {
      passed = passed && 2 * wins > pairs;
    }
  }
  return {passed, os.str()};
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = os.str();
  }
  return files;
}

Outcome Determinism() {
  const fs::path base = fs::temp_directory_path() /
                        ("diffsub_accept_" + std::to_string(::getpid()));
  std::vector<std::function<void(const std::string&)>> runs;
  std::vector<std::string> names;
  auto add = [&](const std::string& name, ExperimentConfig cfg,
                 std::function<void(const ExperimentConfig&)> fn) {
    names.push_back(name);
    runs.push_back([cfg, fn](const std::string& dir) mutable {
      cfg.out_dir = dir;
      fn(cfg);
    });
  };
  ExperimentConfig ac;
  ac.trials = 10;
  ac.jobs = g_jobs;
  add("algo-compare", ac, [](const auto& c) { RunAlgoCompare(c); });
  ExperimentConfig ql;
  ql.experiment = "qualitative";
  ql.trials = 3;
  ql.qual_train.epochs = 60;
  ql.qual_train.warm_start_epochs = 40;
  ql.jobs = g_jobs;
  add("qualitative", ql, [](const auto& c) { RunQualitative(c); });
  ExperimentConfig qt;
  qt.experiment = "quantitative";
  qt.trials = 2;
  qt.n = 10;
  qt.k = 3;
  qt.sample_sizes = {20, 40};
  qt.test_samples = 50;
  qt.quant_train.epochs = 6;
  qt.quant_train.warm_start_epochs = 3;
  qt.jobs = g_jobs;
  add("quantitative", qt, [](const auto& c) { RunQuantitative(c); });
  ExperimentConfig gc;
  gc.experiment = "grad-check";
  gc.n = 6;
  gc.k = 3;
  add("grad-check", gc, [](const auto& c) { RunGradCheck(c); });

  int identical = 0;
  std::size_t files = 0;
  std::ostringstream os;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path a = base / names[i] / "a", b = base / names[i] / "b";
    runs[i](a.string());
    runs[i](b.string());
    const auto fa = ReadTree(a), fb = ReadTree(b);
    files += fa.size();
    if (!fa.empty() && fa == fb) {
      ++identical;
    } else {
      os << names[i] << " differs; ";
    }
  }
  fs::remove_all(base);
  os << identical << "/" << runs.size() << " experiments reproduce " << files
     << " output files byte for byte";
  return {identical == static_cast<int>(runs.size()), os.str()};
}

}  // namespace
}  // namespace diffsub

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-8)")
      ->check(CLI::Range(1, 8));
  diffsub::g_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--jobs", diffsub::g_jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<diffsub::Outcome()>> checks = {
      diffsub::CsgHalfApproximation, diffsub::MultilinearCorrectness,
      diffsub::AutodiffSoundness,    diffsub::DcsgConsistency,
      diffsub::AlgoOrdering,         diffsub::Qualitative,
      diffsub::Quantitative,         diffsub::Determinism};
  bool all = true;
  for (int c = 1; c <= 8; ++c) {
    if (only != 0 && c != only) continue;
    const auto start = std::chrono::steady_clock::now();
    diffsub::Outcome out;
    try {
      out = checks[c - 1]();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    std::cout << "criterion " << c << ": " << (out.passed ? "PASS" : "FAIL") << " "
              << out.details << " [" << secs << " s]" << std::endl;
    all = all && out.passed;
  }
  return all ? 0 : 1;
}
