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
// Discrete maximizers of g(S, w) subject to |S| <= k.
//

#ifndef DIFFSUB_MAXIMIZE_HPP_
#define DIFFSUB_MAXIMIZE_HPP_

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "diffsub/setfn.hpp"

namespace diffsub {

struct GreedyStep {
  int element = -1;
  double gain = 0.0;
};

struct MaximizerResult {
  Subset subset;
  double objective_g = 0.0;  // unscaled g at `subset`
  std::vector<GreedyStep> trace;
};

namespace internal {

// Generic greedy loop with the positive-marginal stop rule. `objective` is the
// set function whose marginals drive selection. Ties go to the lowest index.
template <typename Objective>
MaximizerResult GreedyLoop(const GroundSetInstance& instance,
                           const CostVector& w, Objective objective) {
  CheckCostSize(instance, w);
  MaximizerResult result;
  Subset selected;
  double current = objective(selected);
  for (int round = 0; round < instance.k(); ++round) {
    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    double best_value = 0.0;
    for (int e = 0; e < instance.n(); ++e) {
      if (selected.Contains(e)) continue;
      const double value = objective(selected.With(e));
      const double gain = value - current;
      if (gain > best_gain) {
        best = e;
        best_gain = gain;
        best_value = value;
      }
    }
    if (best < 0 || best_gain <= 0.0) break;
    selected = selected.With(best);
    current = best_value;
    result.trace.push_back({best, best_gain});
  }
  result.subset = selected;
  result.objective_g = EvalG(instance, w, selected);
  return result;
}

}  // namespace internal

// Cost-scaled greedy: K rounds of argmax over g~(e | S), stopping as soon as
// the best marginal is <= 0. Guarantees
//   f(Q) - lambda c(Q) >= 1/2 f(OPT) - lambda c(OPT).
inline MaximizerResult Csg(const GroundSetInstance& instance,
                           const CostVector& w) {
  return internal::GreedyLoop(instance, w, [&](Subset s) {
    return EvalGScaled(instance, w, s);
  });
}

// Greedy on the unscaled objective g with the same stop rule.
inline MaximizerResult NaiveGreedy(const GroundSetInstance& instance,
                                   const CostVector& w) {
  return internal::GreedyLoop(instance, w, [&](Subset s) {
    return EvalG(instance, w, s);
  });
}

inline constexpr int kMaxBruteForceSize = 20;

// Exact maximizer of g over all subsets with |S| <= k. Ties keep the
// numerically smallest bitmask. The trace is left empty.
inline MaximizerResult BruteForce(const GroundSetInstance& instance,
                                  const CostVector& w) {
  if (instance.n() > kMaxBruteForceSize) {
    throw std::invalid_argument("brute force is limited to n <= 20");
  }
  internal::CheckCostSize(instance, w);
  MaximizerResult best;
  best.objective_g = 0.0;  // the empty set
  const std::uint64_t end = std::uint64_t{1} << instance.n();
  for (std::uint64_t bits = 1; bits < end; ++bits) {
    if (std::popcount(bits) > instance.k()) continue;
    const double g = EvalG(instance, w, Subset(bits));
    if (g > best.objective_g) {
      best.objective_g = g;
      best.subset = Subset(bits);
    }
  }
  return best;
}

}  // namespace diffsub

#endif  // DIFFSUB_MAXIMIZE_HPP_
