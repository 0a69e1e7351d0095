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
// JSON / JSON-lines / CSV readers and writers.
//
//   instance (coverage): {"n", "k", "lambda", "points": [{"weight"}],
//                         "covers": [[point, ...], ...]}
//   instance (tabular):  {"n", "k", "lambda", "table": {"101": value, ...}}
//                        where character i of a key is '1' iff element i is
//                        in the subset.
//   dataset (JSON lines): a header {"type": "header", "seed", "train_count",
//                        "world": {...}} followed by one {"z": [...],
//                        "w": [...]} record per sample.
//   checkpoint:          {"layer_sizes", "activation", "output", "weights"}
//   D-CSG trace:         [{"step", "marginals", "weights", "s_after"}, ...]
//   loss curve (CSV):    epoch,mode,mean_loss
//

#ifndef DIFFSUB_IO_HPP_
#define DIFFSUB_IO_HPP_

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "diffsub/datagen.hpp"
#include "diffsub/dcsg.hpp"
#include "diffsub/dol.hpp"
#include "diffsub/mlp.hpp"
#include "diffsub/setfn.hpp"

namespace diffsub {

using Json = nlohmann::json;

inline std::string SubsetKey(Subset s, int n) {
  std::string key(n, '0');
  for (int i : s.Elements()) key[i] = '1';
  return key;
}

inline Subset ParseSubsetKey(const std::string& key, int n) {
  if (key.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("subset key '" + key + "' has wrong length");
  }
  Subset s;
  for (int i = 0; i < n; ++i) {
    if (key[i] == '1') {
      s = s.With(i);
    } else if (key[i] != '0') {
      throw std::invalid_argument("subset key '" + key + "' is not binary");
    }
  }
  return s;
}

inline Json InstanceToJson(const GroundSetInstance& instance) {
  Json j;
  j["n"] = instance.n();
  j["k"] = instance.k();
  j["lambda"] = instance.lambda();
  if (const auto* cov = instance.f().coverage()) {
    Json points = Json::array();
    for (double w : cov->weights()) points.push_back({{"weight", w}});
    j["points"] = points;
    j["covers"] = cov->covers();
  } else {
    const auto& values = instance.f().tabular()->values();
    Json table = Json::object();
    for (std::uint64_t s = 0; s < values.size(); ++s) {
      table[SubsetKey(Subset(s), instance.n())] = values[s];
    }
    j["table"] = table;
  }
  return j;
}

inline GroundSetInstance InstanceFromJson(const Json& j) {
  const int n = j.at("n").get<int>();
  const int k = j.at("k").get<int>();
  const double lambda = j.at("lambda").get<double>();
  if (j.contains("table")) {
    if (n < 1 || n > kMaxTabularSize) {
      throw std::invalid_argument("tabular instance needs 1 <= n <= 20");
    }
    std::vector<double> values(std::size_t{1} << n, 0.0);
    std::vector<char> seen(values.size(), 0);
    for (const auto& [key, value] : j.at("table").items()) {
      const Subset s = ParseSubsetKey(key, n);
      values[s.bits()] = value.get<double>();
      seen[s.bits()] = 1;
    }
    for (std::size_t s = 1; s < seen.size(); ++s) {
      if (!seen[s]) {
        throw std::invalid_argument("table is missing subset " +
                                    SubsetKey(Subset(s), n));
      }
    }
    return GroundSetInstance(TabularSubmodular(n, std::move(values)), k, lambda);
  }
  std::vector<double> weights;
  for (const auto& p : j.at("points")) weights.push_back(p.at("weight").get<double>());
  auto covers = j.at("covers").get<std::vector<std::vector<int>>>();
  if (covers.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("covers has " + std::to_string(covers.size()) +
                                " entries but n = " + std::to_string(n));
  }
  return GroundSetInstance(CoverageFunction(std::move(weights), std::move(covers)),
                           k, lambda);
}

inline Json WorldToJson(const WorldModel& w) {
  Json j;
  j["kind"] = WorldKindName(w.kind);
  j["context_dim"] = w.context_dim;
  j["n"] = w.n;
  j["noise_std"] = w.noise_std;
  j["context_lo"] = w.context_lo;
  j["context_hi"] = w.context_hi;
  if (w.kind == WorldKind::kQualitativeLinear) {
    j["intercept"] = w.intercept;
    j["slope"] = w.slope;
  } else {
    j["hidden"] = w.hidden;
    j["cost_scale"] = w.cost_scale;
    j["a1"] = w.a1;
    j["b1"] = w.b1;
    j["a2"] = w.a2;
    j["b2"] = w.b2;
  }
  return j;
}

inline WorldModel WorldFromJson(const Json& j) {
  WorldModel w;
  w.kind = ParseWorldKind(j.at("kind").get<std::string>());
  w.context_dim = j.at("context_dim").get<int>();
  w.n = j.at("n").get<int>();
  w.noise_std = j.at("noise_std").get<double>();
  w.context_lo = j.at("context_lo").get<double>();
  w.context_hi = j.at("context_hi").get<double>();
  if (w.kind == WorldKind::kQualitativeLinear) {
    w.intercept = j.at("intercept").get<std::vector<double>>();
    w.slope = j.at("slope").get<std::vector<double>>();
  } else {
    w.hidden = j.at("hidden").get<int>();
    w.cost_scale = j.at("cost_scale").get<double>();
    w.a1 = j.at("a1").get<std::vector<double>>();
    w.b1 = j.at("b1").get<std::vector<double>>();
    w.a2 = j.at("a2").get<std::vector<double>>();
    w.b2 = j.at("b2").get<std::vector<double>>();
  }
  return w;
}

inline void WriteDataset(std::ostream& os, const Dataset& data) {
  Json header = {{"type", "header"},
                 {"seed", data.seed},
                 {"train_count", data.train_count},
                 {"world", WorldToJson(data.world)}};
  os << header.dump() << '\n';
  for (const Sample& s : data.entries) {
    os << Json{{"z", s.z}, {"w", s.w}}.dump() << '\n';
  }
}

inline Dataset ReadDataset(std::istream& is) {
  Dataset data;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty dataset file");
  const Json header = Json::parse(line);
  if (header.value("type", "") != "header") {
    throw std::runtime_error("dataset file lacks a header record");
  }
  data.seed = header.at("seed").get<std::uint64_t>();
  data.train_count = header.at("train_count").get<std::size_t>();
  data.world = WorldFromJson(header.at("world"));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const Json rec = Json::parse(line);
    data.entries.push_back({rec.at("z").get<std::vector<double>>(),
                            rec.at("w").get<std::vector<double>>()});
  }
  if (data.train_count > data.entries.size()) {
    throw std::runtime_error("train_count exceeds the number of records");
  }
  return data;
}

inline Json ModelToJson(const MlpModel& model) {
  return {{"layer_sizes", model.layer_sizes()},
          {"activation", ActivationName(model.hidden_activation())},
          {"output", OutputMapName(model.output_map())},
          {"weights", model.GetFlat()}};
}

inline MlpModel ModelFromJson(const Json& j) {
  MlpModel model(j.at("layer_sizes").get<std::vector<std::size_t>>(),
                 ParseActivation(j.at("activation").get<std::string>()),
                 ParseOutputMap(j.at("output").get<std::string>()), 0);
  model.SetFlat(j.at("weights").get<std::vector<double>>());
  return model;
}

inline Json TraceToJson(const DcsgOutput& out) {
  Json steps = Json::array();
  for (std::size_t i = 0; i < out.per_step.size(); ++i) {
    const DcsgStep& s = out.per_step[i];
    steps.push_back({{"step", i},
                     {"marginals", s.marginals},
                     {"weights", s.weights},
                     {"s_after", s.s_after}});
  }
  return steps;
}

inline void WriteLossCurveCsv(std::ostream& os, const TrainResult& result) {
  os << "epoch,mode,mean_loss\n";
  os << std::setprecision(17);
  for (const EpochLoss& e : result.curve) {
    os << e.epoch << ',' << e.mode << ',' << e.mean_loss << '\n';
  }
}

inline Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Json::parse(in);
}

inline void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace diffsub

#endif  // DIFFSUB_IO_HPP_
