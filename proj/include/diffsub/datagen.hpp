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
// Synthetic worlds: random coverage instances, ground-truth context-to-cost
// maps and sampled datasets of (context, cost) pairs.
//

#ifndef DIFFSUB_DATAGEN_HPP_
#define DIFFSUB_DATAGEN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsub/autodiff.hpp"
#include "diffsub/setfn.hpp"

namespace diffsub {

inline constexpr double kDefaultCoverProbability = 0.3;

// Coverage instance with 3n points of Uniform[0, 1] weight; every element
// covers each point independently with probability `cover_probability`.
inline GroundSetInstance GenRandomInstance(
    int n, int k, double lambda, std::uint64_t seed,
    double cover_probability = kDefaultCoverProbability) {
  if (n < 1 || n > kMaxGroundSetSize || k < 1 || k > n) {
    throw std::invalid_argument("random instance needs 1 <= k <= n <= 64");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int points = 3 * n;
  std::vector<double> weights(points);
  for (double& v : weights) v = unit(rng);
  std::vector<std::vector<int>> covers(n);
  for (int e = 0; e < n; ++e) {
    for (int p = 0; p < points; ++p) {
      if (unit(rng) < cover_probability) covers[e].push_back(p);
    }
  }
  return GroundSetInstance(
      CoverageFunction(std::move(weights), std::move(covers)), k, lambda);
}

// The three-element example: f over {s1, s2, s3} with K = 2 and lambda = 1.
inline GroundSetInstance QualitativeInstance() {
  // Bitmask order: bit 0 = s1, bit 1 = s2, bit 2 = s3.
  std::vector<double> table = {0, 16, 17, 21, 25, 37, 38, 41};
  return GroundSetInstance(TabularSubmodular(3, std::move(table)), 2, 1.0);
}

enum class WorldKind { kRandomNonlinear, kQualitativeLinear };

inline const char* WorldKindName(WorldKind kind) {
  return kind == WorldKind::kRandomNonlinear ? "random-nonlinear"
                                             : "qualitative-linear";
}

inline WorldKind ParseWorldKind(const std::string& name) {
  if (name == "random-nonlinear") return WorldKind::kRandomNonlinear;
  if (name == "qualitative-linear") return WorldKind::kQualitativeLinear;
  throw std::invalid_argument("unknown world kind '" + name + "'");
}

// Ground-truth map h: Z -> R_+^n plus the sampling noise model.
struct WorldModel {
  WorldKind kind = WorldKind::kRandomNonlinear;
  int context_dim = 6;
  int n = 15;
  double noise_std = 0.25;
  double context_lo = -1.0;
  double context_hi = 1.0;

  // random-nonlinear: h(z) = scale * softplus(A2 tanh(A1 z + b1) + b2).
  int hidden = 0;
  std::vector<double> a1, b1, a2, b2;  // row-major A1 (hidden x d), A2 (n x hidden)
  double cost_scale = 1.0;

  // qualitative-linear: w_i(z) = intercept[i] + slope[i] * z.
  std::vector<double> intercept, slope;

  std::vector<double> Cost(std::span<const double> z) const {
    if (z.size() != static_cast<std::size_t>(context_dim)) {
      throw std::invalid_argument("context dimension mismatch");
    }
    std::vector<double> w(n);
    if (kind == WorldKind::kQualitativeLinear) {
      for (int i = 0; i < n; ++i) w[i] = intercept[i] + slope[i] * z[0];
      return w;
    }
    std::vector<double> act(hidden);
    for (int r = 0; r < hidden; ++r) {
      double v = b1[r];
      for (int c = 0; c < context_dim; ++c) v += a1[r * context_dim + c] * z[c];
      act[r] = std::tanh(v);
    }
    for (int i = 0; i < n; ++i) {
      double v = b2[i];
      for (int r = 0; r < hidden; ++r) v += a2[i * hidden + r] * act[r];
      w[i] = cost_scale * ad::SoftplusValue(v);
    }
    return w;
  }
};

// Context where the qualitative world's cost of s2 exceeds that of s1 by
// exactly 1.
inline constexpr double kQualitativeBoundary = 4.45;

struct WorldOptions {
  int hidden = 10;
  double cost_scale = 1.0;
  double noise_std = 0.25;
};

// random-nonlinear: matrices with N(0, 1) entries scaled by 1/sqrt(fan-in).
// qualitative-linear: fixed lines crossing w2 - w1 = 1 at z = 4.45; `n` and
// `context_dim` must be 3 and 1.
inline WorldModel GenWorld(WorldKind kind, int n, int context_dim,
                           std::uint64_t seed, const WorldOptions& opts = {}) {
  WorldModel world;
  world.kind = kind;
  world.n = n;
  world.context_dim = context_dim;
  world.noise_std = opts.noise_std;
  if (opts.noise_std < 0.0) throw std::invalid_argument("noise_std < 0");
  if (kind == WorldKind::kQualitativeLinear) {
    if (n != 3 || context_dim != 1) {
      throw std::invalid_argument("qualitative world has n = 3, context_dim = 1");
    }
    world.context_lo = 0.0;
    world.context_hi = 10.0;
    const double a1 = 2.0, b1 = 0.2, a2 = 1.0;
    // (a2 - a1) + (b2 - b1) * z* = 1.
    const double b2 = b1 + (1.0 - (a2 - a1)) / kQualitativeBoundary;
    world.intercept = {a1, a2, 1.0};
    world.slope = {b1, b2, 0.0};
    return world;
  }
  if (n < 1 || context_dim < 1 || opts.hidden < 1) {
    throw std::invalid_argument("world dimensions must be positive");
  }
  world.hidden = opts.hidden;
  world.cost_scale = opts.cost_scale;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](std::vector<double>& v, std::size_t count, double scale) {
    v.resize(count);
    for (double& x : v) x = scale * normal(rng);
  };
  fill(world.a1, static_cast<std::size_t>(opts.hidden) * context_dim,
       2.0 / std::sqrt(static_cast<double>(context_dim)));
  fill(world.b1, opts.hidden, 0.5);
  fill(world.a2, static_cast<std::size_t>(n) * opts.hidden,
       2.0 / std::sqrt(static_cast<double>(opts.hidden)));
  fill(world.b2, n, 0.5);
  return world;
}

struct Sample {
  std::vector<double> z;
  std::vector<double> w;
};

struct Dataset {
  WorldModel world;
  std::uint64_t seed = 0;
  std::vector<Sample> entries;
  std::size_t train_count = 0;  // entries[0, train_count) form the train split

  std::span<const Sample> train() const {
    return std::span<const Sample>(entries).first(train_count);
  }
  std::span<const Sample> test() const {
    return std::span<const Sample>(entries).subspan(train_count);
  }
};

// Draws m contexts uniformly from the world's context box and noisy costs
// w = h(z) + N(0, noise_std^2), redrawing a coordinate until it is positive.
// The first 80% of the samples are the training split.
inline Dataset GenDataset(const WorldModel& world, std::size_t m,
                          std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("dataset needs at least one sample");
  Dataset data;
  data.world = world;
  data.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(world.context_lo,
                                             world.context_hi);
  std::normal_distribution<double> noise(0.0, 1.0);
  data.entries.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    Sample sample;
    sample.z.resize(world.context_dim);
    for (double& v : sample.z) v = box(rng);
    sample.w = world.Cost(sample.z);
    for (double& v : sample.w) {
      if (world.noise_std == 0.0) continue;
      const double mean = v;
      do {
        v = mean + world.noise_std * noise(rng);
      } while (!(v > 0.0));
    }
    data.entries.push_back(std::move(sample));
  }
  data.train_count = std::max<std::size_t>(1, (m * 4) / 5);
  return data;
}

}  // namespace diffsub

#endif  // DIFFSUB_DATAGEN_HPP_
