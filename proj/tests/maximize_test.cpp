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

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "diffsub/datagen.hpp"
#include "diffsub/maximize.hpp"
#include "test_util.hpp"

namespace diffsub {
namespace {

std::vector<double> RandomCosts(int n, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, hi);
  std::vector<double> w(n);
  for (double& v : w) v = u(rng);
  return w;
}

TEST(CsgTest, ThreeRoutesTrace) {
  const auto r = Csg(QualitativeInstance(), CostVector{2, 2, 1});
  EXPECT_EQ(r.subset, Subset::FromIndices({1, 2}, 3));
  EXPECT_DOUBLE_EQ(r.objective_g, 35);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].element, 2);
  EXPECT_DOUBLE_EQ(r.trace[0].gain, 23);
  EXPECT_EQ(r.trace[1].element, 1);
  EXPECT_DOUBLE_EQ(r.trace[1].gain, 9);
}

TEST(CsgTest, ThreeRoutesCheapFirstRoute) {
  const auto r = Csg(QualitativeInstance(), CostVector{0.1, 5, 1});
  EXPECT_EQ(r.subset, Subset::FromIndices({0, 2}, 3));
  EXPECT_NEAR(r.objective_g, 35.9, 1e-12);
  EXPECT_EQ(r.trace[0].element, 2);
  EXPECT_EQ(r.trace[1].element, 0);
}

TEST(CsgTest, ExpensiveCostsGiveEmptySet) {
  const auto r = Csg(QualitativeInstance(), CostVector{100, 100, 100});
  EXPECT_EQ(r.subset, Subset());
  EXPECT_EQ(r.objective_g, 0);
  EXPECT_TRUE(r.trace.empty());
}

TEST(CsgTest, ZeroGainIsNotAdded) {
  // g~ marginal of element 0 is exactly 0.
  CoverageFunction f({2}, {{0}});
  const auto r = Csg(GroundSetInstance(f, 1, 1.0), CostVector{1});
  EXPECT_EQ(r.subset, Subset());
}

TEST(CsgTest, TiesGoToLowestIndex) {
  CoverageFunction f({1, 1}, {{0}, {1}});
  const auto r = Csg(GroundSetInstance(f, 1, 1.0), CostVector{0, 0});
  EXPECT_EQ(r.subset, Subset::FromIndices({0}, 2));
}

TEST(NaiveGreedyTest, ThreeRoutes) {
  const auto r = NaiveGreedy(QualitativeInstance(), CostVector{2, 2, 1});
  EXPECT_EQ(r.subset, Subset::FromIndices({1, 2}, 3));
  EXPECT_DOUBLE_EQ(r.objective_g, 35);
  EXPECT_DOUBLE_EQ(r.trace[0].gain, 24);
  EXPECT_DOUBLE_EQ(r.trace[1].gain, 11);
}

TEST(NaiveGreedyTest, MatchesCsgAtZeroCost) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = GenRandomInstance(10, 4, 1.0, seed);
    const CostVector zero(std::vector<double>(10, 0.0));
    EXPECT_EQ(NaiveGreedy(inst, zero).subset, Csg(inst, zero).subset);
  }
}

TEST(NaiveGreedyTest, SometimesWorseThanCsg) {
  bool found = false;
  for (std::uint64_t seed = 0; seed < 500 && !found; ++seed) {
    const auto inst = GenRandomInstance(8, 3, 1.0, seed);
    const CostVector w(RandomCosts(8, 4.0, seed + 1000));
    found = NaiveGreedy(inst, w).objective_g < Csg(inst, w).objective_g - 1e-9;
  }
  EXPECT_TRUE(found);
}

TEST(BruteForceTest, ThreeRoutes) {
  const auto inst = QualitativeInstance();
  auto r = BruteForce(inst, CostVector{2, 2, 1});
  EXPECT_EQ(r.subset, Subset::FromIndices({1, 2}, 3));
  EXPECT_DOUBLE_EQ(r.objective_g, 35);
  r = BruteForce(inst, CostVector{0.1, 5, 1});
  EXPECT_EQ(r.subset, Subset::FromIndices({0, 2}, 3));
  EXPECT_NEAR(r.objective_g, 35.9, 1e-12);
}

TEST(BruteForceTest, FullSetAtZeroCost) {
  const auto inst = QualitativeInstance().WithK(3);
  EXPECT_EQ(BruteForce(inst, CostVector{0, 0, 0}).subset, Subset::Full(3));
}

TEST(BruteForceTest, RejectsLargeInstances) {
  const auto inst = GenRandomInstance(21, 2, 1.0, 0);
  EXPECT_THROW(BruteForce(inst, CostVector(std::vector<double>(21, 1.0))),
               std::invalid_argument);
}

TEST(BruteForceTest, MatchesEnumerationOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = GenRandomInstance(9, 1 + seed % 5, 1.0, seed);
    const auto w = RandomCosts(9, 2.0, seed + 7);
    EXPECT_NEAR(BruteForce(inst, CostVector(w)).objective_g,
                testing::OracleOptimum(inst, w), 1e-9);
  }
}

TEST(CsgTest, MatchesReferenceGreedy) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = GenRandomInstance(12, 1 + seed % 5, 1.0, seed);
    const auto w = RandomCosts(12, 2.0, seed + 3);
    EXPECT_EQ(Csg(inst, CostVector(w)).subset.bits(), testing::OracleCsg(inst, w));
    EXPECT_EQ(NaiveGreedy(inst, CostVector(w)).subset.bits(),
              testing::OracleCsg(inst, w, 1.0));
  }
}

TEST(CsgTest, HalfApproximationBound) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int n = 4 + static_cast<int>(seed % 9);
    const auto inst = GenRandomInstance(n, 1 + seed % std::min(n, 5), 1.0, seed);
    const CostVector w(RandomCosts(n, 2.0, seed + 99));
    const Subset q = Csg(inst, w).subset;
    const Subset opt = BruteForce(inst, w).subset;
    EXPECT_GE(EvalF(inst, q) - EvalC(w, q) + 1e-9,
              0.5 * EvalF(inst, opt) - EvalC(w, opt))
        << "seed " << seed;
  }
}

TEST(CsgTest, ResultInvariants) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = GenRandomInstance(12, 1 + seed % 6, 1.0, seed);
    const CostVector w(RandomCosts(12, 3.0, seed));
    const auto r = Csg(inst, w);
    EXPECT_LE(r.subset.size(), inst.k());
    EXPECT_LE(r.trace.size(), static_cast<std::size_t>(inst.k()));
    for (const auto& step : r.trace) EXPECT_GT(step.gain, 0);
    EXPECT_NEAR(r.objective_g, EvalG(inst, w, r.subset), 1e-12);
    const auto again = Csg(inst, w);
    EXPECT_EQ(again.subset, r.subset);
  }
}

}  // namespace
}  // namespace diffsub
