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

// Fully connected cost predictor z -> w_hat.

#ifndef DIFFSUB_MLP_HPP_
#define DIFFSUB_MLP_HPP_

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

enum class Activation { kTanh, kRelu };
enum class OutputMap { kSoftplus, kIdentity };

inline const char* ActivationName(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}
inline Activation ParseActivation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}
inline const char* OutputMapName(OutputMap m) {
  return m == OutputMap::kSoftplus ? "softplus" : "identity";
}
inline OutputMap ParseOutputMap(const std::string& s) {
  if (s == "softplus") return OutputMap::kSoftplus;
  if (s == "identity") return OutputMap::kIdentity;
  throw std::invalid_argument("unknown output map '" + s + "'");
}

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

class MlpModel {
 public:
  // Parameter leaves of one model copy on a tape.
  struct TapedParams {
    std::vector<ad::NodeId> weights;
    std::vector<ad::NodeId> biases;
  };

  MlpModel() = default;

  // Glorot-uniform weights and zero biases. layer_sizes = {in, hidden..., out}.
  MlpModel(std::vector<std::size_t> layer_sizes, Activation hidden,
           OutputMap output, std::uint64_t seed)
      : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
    if (sizes_.size() < 2) {
      throw std::invalid_argument("an MLP needs at least input and output sizes");
    }
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      DenseLayer layer{sizes_[l], sizes_[l + 1], {}, {}};
      if (layer.in == 0 || layer.out == 0) {
        throw std::invalid_argument("layer sizes must be positive");
      }
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      std::uniform_real_distribution<double> init(-limit, limit);
      layer.weights.resize(layer.in * layer.out);
      for (double& v : layer.weights) v = init(rng);
      layer.bias.assign(layer.out, 0.0);
      layers_.push_back(std::move(layer));
    }
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  OutputMap output_map() const { return output_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::size_t num_parameters() const {
    std::size_t total = 0;
    for (const auto& l : layers_) total += l.weights.size() + l.bias.size();
    return total;
  }

  // Flattened as layer 0 weights, layer 0 bias, layer 1 weights, ...
  std::vector<double> GetFlat() const {
    std::vector<double> flat;
    flat.reserve(num_parameters());
    for (const auto& l : layers_) {
      flat.insert(flat.end(), l.weights.begin(), l.weights.end());
      flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
  }
  void SetFlat(std::span<const double> flat) {
    if (flat.size() != num_parameters()) {
      throw std::invalid_argument("flat parameter vector has wrong length");
    }
    std::size_t at = 0;
    for (auto& l : layers_) {
      for (double& v : l.weights) v = flat[at++];
      for (double& v : l.bias) v = flat[at++];
    }
  }

  // Plain forward pass.
  std::vector<double> Predict(std::span<const double> z) const {
    CheckInput(z.size());
    std::vector<double> act(z.begin(), z.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      std::vector<double> next(layer.bias);
      for (std::size_t r = 0; r < layer.out; ++r) {
        for (std::size_t c = 0; c < layer.in; ++c) {
          next[r] += layer.weights[r * layer.in + c] * act[c];
        }
      }
      const bool last = l + 1 == layers_.size();
      for (double& v : next) v = last ? ApplyOutput(v) : ApplyHidden(v);
      act = std::move(next);
    }
    return act;
  }

  // Predicted cost vector; negative outputs of an identity head are clipped
  // to zero.
  CostVector PredictCost(std::span<const double> z) const {
    std::vector<double> w = Predict(z);
    for (double& v : w) v = std::max(v, 0.0);
    return CostVector(std::move(w));
  }

  TapedParams AddToTape(ad::Tape& tape) const {
    TapedParams params;
    for (const auto& l : layers_) {
      params.weights.push_back(tape.Variable(l.weights, l.out, l.in));
      params.biases.push_back(tape.Variable(l.bias));
    }
    return params;
  }

  ad::NodeId Forward(ad::Tape& tape, const TapedParams& params,
                     ad::NodeId z) const {
    CheckInput(tape.length(z));
    ad::NodeId act = z;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      act = ad::Add(tape, ad::MatVec(tape, params.weights[l], act),
                    params.biases[l]);
      const bool last = l + 1 == layers_.size();
      if (last) {
        if (output_ == OutputMap::kSoftplus) act = ad::Softplus(tape, act);
      } else {
        act = hidden_ == Activation::kTanh ? ad::Tanh(tape, act)
                                           : ad::Relu(tape, act);
      }
    }
    return act;
  }

  // Gradient of a loss with respect to the flat parameter vector.
  std::vector<double> FlatGradient(const ad::Gradients& grads,
                                   const TapedParams& params) const {
    std::vector<double> flat;
    flat.reserve(num_parameters());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto gw = grads[params.weights[l]];
      const auto gb = grads[params.biases[l]];
      flat.insert(flat.end(), gw.begin(), gw.end());
      flat.insert(flat.end(), gb.begin(), gb.end());
    }
    return flat;
  }

 private:
  void CheckInput(std::size_t dim) const {
    if (dim != input_dim()) {
      throw std::invalid_argument("context has dimension " +
                                  std::to_string(dim) + ", model expects " +
                                  std::to_string(input_dim()));
    }
  }
  double ApplyHidden(double v) const {
    return hidden_ == Activation::kTanh ? std::tanh(v) : std::max(v, 0.0);
  }
  double ApplyOutput(double v) const {
    return output_ == OutputMap::kSoftplus ? ad::SoftplusValue(v) : v;
  }

  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::kTanh;
  OutputMap output_ = OutputMap::kSoftplus;
  std::vector<DenseLayer> layers_;
};

}  // namespace diffsub

#endif  // DIFFSUB_MLP_HPP_
