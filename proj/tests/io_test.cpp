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

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "diffsub/io.hpp"

namespace diffsub {
namespace {

TEST(IoTest, SubsetKeys) {
  EXPECT_EQ(SubsetKey(Subset::FromIndices({0, 2}, 3), 3), "101");
  EXPECT_EQ(ParseSubsetKey("011", 3), Subset::FromIndices({1, 2}, 3));
  EXPECT_THROW(ParseSubsetKey("01", 3), std::invalid_argument);
  EXPECT_THROW(ParseSubsetKey("0x1", 3), std::invalid_argument);
}

TEST(IoTest, CoverageInstanceRoundTrip) {
  const auto inst = GenRandomInstance(9, 4, 0.7, 3);
  const auto back = InstanceFromJson(Json::parse(InstanceToJson(inst).dump()));
  EXPECT_EQ(back.n(), 9);
  EXPECT_EQ(back.k(), 4);
  EXPECT_EQ(back.lambda(), 0.7);
  EXPECT_EQ(back.f().coverage()->weights(), inst.f().coverage()->weights());
  EXPECT_EQ(back.f().coverage()->covers(), inst.f().coverage()->covers());
}

TEST(IoTest, TabularInstanceRoundTrip) {
  const auto inst = QualitativeInstance();
  const Json j = InstanceToJson(inst);
  EXPECT_EQ(j.at("table").at("110").get<double>(), 21);
  const auto back = InstanceFromJson(j);
  for (std::uint64_t s = 0; s < 8; ++s) {
    EXPECT_EQ(back.f()(Subset(s)), inst.f()(Subset(s)));
  }
  Json missing = j;
  missing["table"].erase("111");
  EXPECT_THROW(InstanceFromJson(missing), std::invalid_argument);
}

TEST(IoTest, CoversLengthChecked) {
  Json j = InstanceToJson(GenRandomInstance(4, 2, 1.0, 0));
  j["n"] = 5;
  EXPECT_THROW(InstanceFromJson(j), std::invalid_argument);
}

TEST(IoTest, DatasetRoundTripIsBitExact) {
  for (auto kind : {WorldKind::kRandomNonlinear, WorldKind::kQualitativeLinear}) {
    const bool qual = kind == WorldKind::kQualitativeLinear;
    const auto world = GenWorld(kind, qual ? 3 : 6, qual ? 1 : 4, 5);
    const auto data = GenDataset(world, 25, 11);
    std::stringstream ss;
    WriteDataset(ss, data);
    const auto back = ReadDataset(ss);
    EXPECT_EQ(back.seed, data.seed);
    EXPECT_EQ(back.train_count, data.train_count);
    ASSERT_EQ(back.entries.size(), data.entries.size());
    for (std::size_t i = 0; i < data.entries.size(); ++i) {
      EXPECT_EQ(back.entries[i].z, data.entries[i].z);
      EXPECT_EQ(back.entries[i].w, data.entries[i].w);
    }
    EXPECT_EQ(back.world.Cost(data.entries[0].z), world.Cost(data.entries[0].z));
  }
}

TEST(IoTest, DatasetNeedsHeader) {
  std::stringstream ss("{\"z\": [1], \"w\": [1]}\n");
  EXPECT_THROW(ReadDataset(ss), std::runtime_error);
  std::stringstream empty;
  EXPECT_THROW(ReadDataset(empty), std::runtime_error);
}

TEST(IoTest, ModelRoundTrip) {
  const MlpModel model({4, 7, 3}, Activation::kRelu, OutputMap::kIdentity, 2);
  const MlpModel back = ModelFromJson(Json::parse(ModelToJson(model).dump()));
  EXPECT_EQ(back.layer_sizes(), model.layer_sizes());
  EXPECT_EQ(back.hidden_activation(), Activation::kRelu);
  EXPECT_EQ(back.output_map(), OutputMap::kIdentity);
  EXPECT_EQ(back.GetFlat(), model.GetFlat());
}

TEST(IoTest, TraceHasOneEntryPerStep) {
  const auto out = DcsgSolve(QualitativeInstance(), CostVector{2, 2, 1}, DcsgConfig{});
  const Json j = TraceToJson(out);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1].at("step").get<int>(), 1);
  EXPECT_EQ(j[0].at("weights").size(), 4u);
  EXPECT_EQ(j[0].at("s_after").get<std::vector<double>>(), out.per_step[0].s_after);
}

TEST(IoTest, LossCurveCsv) {
  TrainResult r;
  r.curve = {{0, "mse", 1.5}, {1, "dol", 0.25}};
  std::ostringstream os;
  WriteLossCurveCsv(os, r);
  EXPECT_EQ(os.str(), "epoch,mode,mean_loss\n0,mse,1.5\n1,dol,0.25\n");
}

}  // namespace
}  // namespace diffsub
