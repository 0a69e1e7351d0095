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
// Multilinear extension of a set function,
//
//   F(x) = sum_S f(S) prod_{i in S} x_i prod_{i not in S} (1 - x_i),
//
// and its partial derivatives
//
//   dF/dx_i = E_{q~x}[f(q with q_i = 1)] - E_{q~x}[f(q with q_i = 0)].
//
// Exact mode evaluates both in closed form for coverage functions (a point p
// is covered with probability 1 - prod_{e covers p} (1 - x_e)) and by
// enumeration of all 2^n subsets for tabular functions. Monte-Carlo mode
// averages over independent Bernoulli roundings q ~ x; a fixed seed gives
// common random numbers across calls.
//

#ifndef DIFFSUB_MULTILINEAR_HPP_
#define DIFFSUB_MULTILINEAR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsub/setfn.hpp"

namespace diffsub {

inline constexpr double kSelectionTolerance = 1e-9;

// A point of the hypercube [0, 1]^n. Coordinates within 1e-9 of the box are
// clamped into it; anything further out is rejected.
class SelectionVector {
 public:
  SelectionVector() = default;
  explicit SelectionVector(std::vector<double> x) : x_(std::move(x)) {
    for (double& v : x_) {
      if (!(v >= -kSelectionTolerance && v <= 1.0 + kSelectionTolerance)) {
        throw std::domain_error("selection coordinate " + std::to_string(v) +
                                " outside [0, 1]");
      }
      v = std::clamp(v, 0.0, 1.0);
    }
  }
  SelectionVector(std::initializer_list<double> x)
      : SelectionVector(std::vector<double>(x)) {}

  static SelectionVector Zeros(int n) {
    return SelectionVector(std::vector<double>(n, 0.0));
  }
  static SelectionVector Indicator(Subset s, int n) {
    std::vector<double> x(n, 0.0);
    for (int i : s.Elements()) x.at(i) = 1.0;
    return SelectionVector(std::move(x));
  }

  std::size_t size() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }
  std::span<const double> values() const { return x_; }
  const std::vector<double>& vec() const { return x_; }

 private:
  std::vector<double> x_;
};

enum class ExtensionMode { kExact, kMonteCarlo };

struct ExtensionConfig {
  ExtensionMode mode = ExtensionMode::kExact;
  int mc_samples = 1000;
  std::uint64_t rng_seed = 0;

  void Validate() const {
    if (mode == ExtensionMode::kMonteCarlo && mc_samples < 1) {
      throw std::invalid_argument("mc_samples must be >= 1");
    }
  }
};

namespace internal {

inline void CheckPoint(const SetFunction& f, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(f.n())) {
    throw std::invalid_argument("selection vector length does not match n");
  }
  for (double v : x) {
    if (!(v >= -kSelectionTolerance && v <= 1.0 + kSelectionTolerance)) {
      throw std::domain_error("selection coordinate outside [0, 1]");
    }
  }
}

// Probability of each of the 2^m subsets of `coords` under independent
// Bernoulli(x_i) rounding; bit j of the index refers to coords[j].
inline std::vector<double> SubsetProbabilities(std::span<const double> x,
                                               std::span<const int> coords) {
  std::vector<double> prob(std::size_t{1} << coords.size());
  prob[0] = 1.0;
  std::size_t filled = 1;
  for (int c : coords) {
    const double p = x[c];
    for (std::size_t m = 0; m < filled; ++m) {
      prob[m | filled] = prob[m] * p;
      prob[m] *= 1.0 - p;
    }
    filled <<= 1;
  }
  return prob;
}

inline double CoverageValue(const CoverageFunction& f,
                            std::span<const double> x) {
  double total = 0.0;
  for (int p = 0; p < f.num_points(); ++p) {
    double uncovered = 1.0;
    for (int e : f.coverer_list(p)) uncovered *= 1.0 - x[e];
    total += f.weights()[p] * (1.0 - uncovered);
  }
  return total;
}

inline std::vector<double> CoverageGrad(const CoverageFunction& f,
                                        std::span<const double> x) {
  std::vector<double> grad(f.n(), 0.0);
  for (int p = 0; p < f.num_points(); ++p) {
    const std::vector<int>& cov = f.coverer_list(p);
    for (int e : cov) {
      double others_miss = 1.0;
      for (int o : cov) {
        if (o != e) others_miss *= 1.0 - x[o];
      }
      grad[e] += f.weights()[p] * others_miss;
    }
  }
  return grad;
}

// Draws Bernoulli roundings from uniforms; identical seeds give identical
// rounding thresholds regardless of x.
class RoundingSampler {
 public:
  RoundingSampler(int n, std::uint64_t seed) : n_(n), rng_(seed) {}
  Subset Next(std::span<const double> x) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Subset q;
    for (int i = 0; i < n_; ++i) {
      if (unit(rng_) < x[i]) q = q.With(i);
    }
    return q;
  }

 private:
  int n_;
  std::mt19937_64 rng_;
};

}  // namespace internal

// F(x) by explicit summation over all subsets of a dense table.
inline double MultilinearByEnumeration(std::span<const double> table,
                                       std::span<const double> x) {
  std::vector<int> coords(x.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = static_cast<int>(i);
  const std::vector<double> prob = internal::SubsetProbabilities(x, coords);
  double total = 0.0;
  for (std::size_t s = 0; s < prob.size(); ++s) total += prob[s] * table[s];
  return total;
}

// dF/dx by explicit summation; component i conditions on the other n-1
// coordinates.
inline std::vector<double> MultilinearGradByEnumeration(
    std::span<const double> table, std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> grad(n, 0.0);
  std::vector<int> others;
  for (int i = 0; i < n; ++i) {
    others.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    const std::vector<double> prob = internal::SubsetProbabilities(x, others);
    for (std::size_t m = 0; m < prob.size(); ++m) {
      std::uint64_t s = 0;
      for (std::size_t b = 0; b < others.size(); ++b) {
        if ((m >> b) & 1U) s |= std::uint64_t{1} << others[b];
      }
      grad[i] += prob[m] * (table[s | (std::uint64_t{1} << i)] - table[s]);
    }
  }
  return grad;
}

inline double MultilinearValue(const SetFunction& f, std::span<const double> x,
                               const ExtensionConfig& cfg = {}) {
  cfg.Validate();
  internal::CheckPoint(f, x);
  if (cfg.mode == ExtensionMode::kMonteCarlo) {
    internal::RoundingSampler sampler(f.n(), cfg.rng_seed);
    double total = 0.0;
    for (int t = 0; t < cfg.mc_samples; ++t) total += f(sampler.Next(x));
    return total / cfg.mc_samples;
  }
  if (const auto* cov = f.coverage()) return internal::CoverageValue(*cov, x);
  return MultilinearByEnumeration(f.tabular()->values(), x);
}

inline std::vector<double> MultilinearGrad(const SetFunction& f,
                                           std::span<const double> x,
                                           const ExtensionConfig& cfg = {}) {
  cfg.Validate();
  internal::CheckPoint(f, x);
  if (cfg.mode == ExtensionMode::kMonteCarlo) {
    internal::RoundingSampler sampler(f.n(), cfg.rng_seed);
    std::vector<double> grad(f.n(), 0.0);
    for (int t = 0; t < cfg.mc_samples; ++t) {
      const Subset q = sampler.Next(x);
      for (int i = 0; i < f.n(); ++i) {
        grad[i] += f(q.With(i)) - f(q.Without(i));
      }
    }
    for (double& g : grad) g /= cfg.mc_samples;
    return grad;
  }
  if (const auto* cov = f.coverage()) return internal::CoverageGrad(*cov, x);
  return MultilinearGradByEnumeration(f.tabular()->values(), x);
}

// F(x) - cost_scale * lambda * w^T x. cost_scale = 2 gives the relaxed
// cost-scaled objective g~_c; cost_scale = 1 the relaxed g.
inline double RelaxedObjective(const GroundSetInstance& instance,
                               std::span<const double> w,
                               std::span<const double> x, double cost_scale,
                               const ExtensionConfig& cfg = {}) {
  if (w.size() != x.size()) {
    throw std::invalid_argument("cost and selection lengths differ");
  }
  double linear = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) linear += w[i] * x[i];
  return MultilinearValue(instance.f(), x, cfg) -
         cost_scale * instance.lambda() * linear;
}

inline double RelaxedGScaled(const GroundSetInstance& instance,
                             const CostVector& w, const SelectionVector& x,
                             const ExtensionConfig& cfg = {}) {
  internal::CheckCostSize(instance, w);
  return RelaxedObjective(instance, w.values(), x.values(), 2.0, cfg);
}

}  // namespace diffsub

#endif  // DIFFSUB_MULTILINEAR_HPP_
