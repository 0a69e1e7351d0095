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
// Decision-oriented learning of a cost predictor.
//
// For a sample (z, w) with prediction w_hat = h_theta(z) the decision loss is
//
//   loss = g(x*(w), w) - g(x_hat, w),
//
// where x*(w) is the cost-scaled greedy solution under the true costs (a
// constant) and x_hat is the soft D-CSG selection under the predicted costs,
// scored with the relaxed objective F(x_hat) - lambda w^T x_hat. Gradients
// flow from the loss through D-CSG into w_hat and from there into theta.
// The two-stage baseline fits w_hat by mean squared error only.
//

#ifndef DIFFSUB_DOL_HPP_
#define DIFFSUB_DOL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "diffsub/autodiff.hpp"
#include "diffsub/datagen.hpp"
#include "diffsub/dcsg.hpp"
#include "diffsub/maximize.hpp"
#include "diffsub/mlp.hpp"
#include "diffsub/setfn.hpp"

namespace diffsub {

// g(x*(w_true), w_true) - (F(x_soft) - lambda w_true^T x_soft) with x_soft the
// D-CSG output for the costs at node `w_pred`. `reference` is the greedy
// objective under the true costs; it is computed if not supplied.
inline ad::NodeId DolLoss(ad::Tape& tape, const GroundSetInstance& instance,
                          const CostVector& w_true, ad::NodeId w_pred,
                          const DcsgConfig& cfg,
                          std::optional<double> reference = std::nullopt,
                          std::mt19937_64* noise_rng = nullptr) {
  internal::CheckCostSize(instance, w_true);
  const double ref =
      reference.has_value() ? *reference : Csg(instance, w_true).objective_g;
  const DcsgOutput out = DcsgForward(instance, tape, w_pred, cfg, noise_rng);
  const ad::NodeId truth = tape.Constant(w_true.vec());
  ExtensionConfig ext = cfg.extension;
  ext.rng_seed += static_cast<std::uint64_t>(instance.k()) + 1;
  const ad::NodeId decision =
      RelaxedObjectiveNode(tape, instance, out.x_node, truth, 1.0, ext);
  return ad::Sub(tape, tape.Constant({ref}), decision);
}

inline ad::NodeId MseLoss(ad::Tape& tape, std::span<const double> w_true,
                          ad::NodeId w_pred) {
  if (w_true.size() != tape.length(w_pred)) {
    throw std::invalid_argument("mse: length mismatch");
  }
  return ad::Mse(tape, w_pred,
                 tape.Constant(std::vector<double>(w_true.begin(), w_true.end())));
}

// |g(S_CSG(w), w) - g(S_CSG(w_hat), w)| / g(S_CSG(w), w). Empty when the
// denominator is not positive; such instances are excluded from averages.
inline std::optional<double> NormalizedRegret(const GroundSetInstance& instance,
                                              const CostVector& w_true,
                                              const CostVector& w_pred) {
  const double best = Csg(instance, w_true).objective_g;
  if (!(best > 0.0)) return std::nullopt;
  const Subset chosen = Csg(instance, w_pred).subset;
  return std::abs(best - EvalG(instance, w_true, chosen)) / best;
}

enum class TrainMode { kDol, kTwoStage };

inline const char* TrainModeName(TrainMode m) {
  return m == TrainMode::kDol ? "dol" : "two-stage";
}

enum class Optimizer { kGradientDescent, kMomentum };

struct TrainConfig {
  int epochs = 40;  // total, warm start included
  double learning_rate = 0.01;
  int batch_size = 8;
  Optimizer optimizer = Optimizer::kGradientDescent;
  double momentum = 0.9;
  int warm_start_epochs = 10;  // MSE epochs before the decision loss (dol mode)
  // Step size and optimizer for the decision-loss epochs; unset means the
  // same as the warm start. Momentum is reset at the switch.
  std::optional<double> dol_learning_rate;
  std::optional<Optimizer> dol_optimizer;
  DcsgConfig dcsg;
  std::uint64_t rng_seed = 0;
  int jobs = 1;  // worker threads per minibatch

  void Validate() const {
    if (epochs < 1 || !(learning_rate > 0.0) || batch_size < 1 ||
        warm_start_epochs < 0 || jobs < 1 || momentum < 0.0 ||
        momentum >= 1.0 ||
        (dol_learning_rate.has_value() && !(*dol_learning_rate > 0.0))) {
      throw std::invalid_argument("invalid training configuration");
    }
    dcsg.Validate();
  }
};

struct EpochLoss {
  int epoch = 0;
  std::string mode;  // "mse" or "dol"
  double mean_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochLoss> curve;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch, int batch, std::size_t id)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch) +
                           ", instance " + std::to_string(id) + ")"),
        epoch_(epoch),
        batch_(batch),
        instance_(id) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }
  std::size_t instance() const { return instance_; }

 private:
  int epoch_;
  int batch_;
  std::size_t instance_;
};

struct SampleGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

// Loss and parameter gradient of one sample on a private tape.
inline SampleGradient SampleLossGradient(const MlpModel& model,
                                         const GroundSetInstance& instance,
                                         const Sample& sample, bool decision,
                                         const DcsgConfig& dcsg,
                                         std::optional<double> reference,
                                         std::uint64_t noise_seed) {
  ad::Tape tape;
  const MlpModel::TapedParams params = model.AddToTape(tape);
  const ad::NodeId z = tape.Constant(sample.z);
  const ad::NodeId w_pred = model.Forward(tape, params, z);
  ad::NodeId loss;
  if (decision) {
    std::mt19937_64 noise(noise_seed);
    loss = DolLoss(tape, instance, CostVector(sample.w), w_pred, dcsg,
                   reference, &noise);
  } else {
    loss = MseLoss(tape, sample.w, w_pred);
  }
  const ad::Gradients grads = tape.Backward(loss);
  return {tape.scalar(loss), model.FlatGradient(grads, params)};
}

// Minibatch gradient descent. In dol mode the first warm_start_epochs
// minimize MSE, the rest the decision loss; two-stage mode uses MSE
// throughout. Each curve entry is the mean pre-update loss over the epoch's
// batches.
inline TrainResult Train(MlpModel& model, const GroundSetInstance& instance,
                         std::span<const Sample> train, TrainMode mode,
                         const TrainConfig& cfg) {
  cfg.Validate();
  if (train.empty()) throw std::invalid_argument("empty training set");
  if (model.output_dim() != static_cast<std::size_t>(instance.n())) {
    throw std::invalid_argument("model output dimension does not match n");
  }

  // Greedy references under the true costs never change.
  std::vector<double> references(train.size());
  if (mode == TrainMode::kDol) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      references[i] = Csg(instance, CostVector(train[i].w)).objective_g;
    }
  }

  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> params = model.GetFlat();
  std::vector<double> velocity(params.size(), 0.0);
  TrainResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool decision =
        mode == TrainMode::kDol && epoch >= cfg.warm_start_epochs;
    if (decision && epoch == cfg.warm_start_epochs) {
      std::fill(velocity.begin(), velocity.end(), 0.0);
    }
    const double lr = decision ? cfg.dol_learning_rate.value_or(cfg.learning_rate)
                               : cfg.learning_rate;
    const Optimizer optimizer =
        decision ? cfg.dol_optimizer.value_or(cfg.optimizer) : cfg.optimizer;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batch = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t count = stop - start;
      std::vector<SampleGradient> parts(count);
      std::vector<std::string> errors(count);
      auto work = [&](std::size_t slot) {
        const std::size_t id = order[start + slot];
        try {
          const std::uint64_t noise_seed =
              cfg.rng_seed ^ (0x9E3779B97F4A7C15ULL *
                              (static_cast<std::uint64_t>(epoch) * train.size() +
                               id + 1));
          parts[slot] = SampleLossGradient(
              model, instance, train[id], decision, cfg.dcsg,
              decision ? std::optional<double>(references[id]) : std::nullopt,
              noise_seed);
        } catch (const std::exception& e) {
          errors[slot] = e.what();
        }
      };
      if (cfg.jobs <= 1 || count == 1) {
        for (std::size_t slot = 0; slot < count; ++slot) work(slot);
      } else {
        std::vector<std::jthread> workers;
        const std::size_t threads = std::min<std::size_t>(cfg.jobs, count);
        for (std::size_t t = 0; t < threads; ++t) {
          workers.emplace_back([&, t] {
            for (std::size_t slot = t; slot < count; slot += threads) work(slot);
          });
        }
      }
      // Ordered reduction keeps results independent of thread scheduling.
      std::vector<double> grad(params.size(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t slot = 0; slot < count; ++slot) {
        const std::size_t id = order[start + slot];
        if (!errors[slot].empty()) {
          throw TrainingError(errors[slot], epoch, batch, id);
        }
        if (!std::isfinite(parts[slot].loss)) {
          throw TrainingError("non-finite loss", epoch, batch, id);
        }
        batch_loss += parts[slot].loss;
        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += parts[slot].grad[p];
      }
      epoch_loss += batch_loss;
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double g = grad[p] / static_cast<double>(count);
        if (!std::isfinite(g)) {
          throw TrainingError("non-finite gradient", epoch, batch, order[start]);
        }
        if (optimizer == Optimizer::kMomentum) {
          velocity[p] = cfg.momentum * velocity[p] + g;
          params[p] -= lr * velocity[p];
        } else {
          params[p] -= lr * g;
        }
      }
      model.SetFlat(params);
    }
    result.curve.push_back(
        {epoch, decision ? "dol" : "mse",
         epoch_loss / static_cast<double>(train.size())});
  }
  return result;
}

// (g(S_CSG(w), w) - g(S_CSG(w_hat), w)) / g(S_CSG(w), w) without the
// absolute value; negative when the predicted costs lead to a better set than
// greedy on the true costs.
inline std::optional<double> SignedRegret(const GroundSetInstance& instance,
                                          const CostVector& w_true,
                                          const CostVector& w_pred) {
  const double best = Csg(instance, w_true).objective_g;
  if (!(best > 0.0)) return std::nullopt;
  const Subset chosen = Csg(instance, w_pred).subset;
  return (best - EvalG(instance, w_true, chosen)) / best;
}

// Mean normalized regret of a model over samples; nullopt if every sample
// had a nonpositive denominator. `signed_gap` drops the absolute value.
inline std::optional<double> MeanRegret(const MlpModel& model,
                                        const GroundSetInstance& instance,
                                        std::span<const Sample> samples,
                                        bool signed_gap = false) {
  double total = 0.0;
  std::size_t used = 0;
  for (const Sample& s : samples) {
    const CostVector w(s.w);
    const CostVector w_hat = model.PredictCost(s.z);
    const auto r = signed_gap ? SignedRegret(instance, w, w_hat)
                              : NormalizedRegret(instance, w, w_hat);
    if (!r) continue;
    total += *r;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return total / static_cast<double>(used);
}

}  // namespace diffsub

#endif  // DIFFSUB_DOL_HPP_
