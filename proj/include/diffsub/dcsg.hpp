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
// Differentiable cost-scaled greedy (D-CSG).
//
// The K rounds of cost-scaled greedy are unrolled into one computational
// graph over a soft selection vector s in [0, 1]^N, starting at s_0 = 0.
// Round i:
//
//   u     = 1 - s_i                          (headroom of every element)
//   c_j   = s_i + u_j e_j                    (candidate: element j added)
//   h_j   = g~_c(c_j) - g~_c(s_i),  j = 1..N (relaxed marginal gains)
//   h_N+1 = 0                                (dummy: "select nothing")
//   p     = softmax((h + gumbel) / tau)
//   s_i+1 = s_i + p[1..N] * u
//
// where g~_c(x) = F(x) - 2 lambda w^T x is the relaxed cost-scaled objective.
// When every real marginal is negative the dummy takes the mass and s stays
// put, which mirrors the early break of the discrete algorithm.
//

#ifndef DIFFSUB_DCSG_HPP_
#define DIFFSUB_DCSG_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "diffsub/autodiff.hpp"
#include "diffsub/multilinear.hpp"
#include "diffsub/setfn.hpp"

namespace diffsub {

enum class Rounding { kTopK, kThreshold, kPerStepHard };

enum class MarginalMode {
  kSharedBase,  // g~_c(s_i) once per round: N + 1 evaluations
  kPairwise,    // g~_c(s_i) re-evaluated for every candidate: 2N evaluations
};

struct DcsgConfig {
  double tau = 0.5;
  bool use_gumbel_noise = false;
  ExtensionConfig extension;
  Rounding rounding = Rounding::kPerStepHard;
  MarginalMode marginal_mode = MarginalMode::kSharedBase;

  void Validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      throw std::invalid_argument("tau must be > 0");
    }
    extension.Validate();
  }
};

struct DcsgStep {
  std::vector<double> marginals;  // length N + 1, dummy last
  std::vector<double> weights;    // softmax output, length N + 1
  std::vector<double> s_after;    // length N
};

struct DcsgOutput {
  SelectionVector x_soft;
  Subset subset;
  std::vector<DcsgStep> per_step;
  double objective_soft = 0.0;  // g~_c(x_soft)
  // Number of g~_c evaluations spent on marginal gains (final objective
  // excluded).
  std::size_t evaluations = 0;
  ad::NodeId x_node;
  ad::NodeId objective_node;
};

// Records F(x) - cost_scale * lambda * w^T x as a single node. The backward
// pass uses the analytic multilinear gradient rather than taping the
// expansion of F. `instance` must outlive any backward pass over the tape.
inline ad::NodeId RelaxedObjectiveNode(ad::Tape& tape,
                                       const GroundSetInstance& instance,
                                       ad::NodeId x, ad::NodeId w,
                                       double cost_scale,
                                       const ExtensionConfig& cfg) {
  const std::vector<double>& xv = tape.value(x);
  const std::vector<double>& wv = tape.value(w);
  const double value = RelaxedObjective(instance, wv, xv, cost_scale, cfg);
  const double scale = cost_scale * instance.lambda();
  return tape.RecordCustom(
      ad::OpKind::kMultilinear, {x, w}, {value},
      [&f = instance.f(), x, w, xv, wv, scale, cfg](
          std::span<const double> g, std::vector<std::vector<double>>& grads) {
        if (g[0] == 0.0) return;
        const std::vector<double> dF = MultilinearGrad(f, xv, cfg);
        std::vector<double>& dx = grads[x.index];
        std::vector<double>& dw = grads[w.index];
        for (std::size_t i = 0; i < xv.size(); ++i) {
          dx[i] += g[0] * (dF[i] - scale * wv[i]);
          dw[i] -= g[0] * scale * xv[i];
        }
      });
}

// Rounds a forward pass to a discrete subset according to cfg.rounding.
inline Subset DcsgRound(const DcsgOutput& out,
                        const GroundSetInstance& instance,
                        const DcsgConfig& cfg) {
  const int n = instance.n();
  Subset chosen;
  switch (cfg.rounding) {
    case Rounding::kThreshold:
      for (int i = 0; i < n; ++i) {
        if (out.x_soft[i] > 0.5) chosen = chosen.With(i);
      }
      break;
    case Rounding::kTopK: {
      std::vector<int> order(n);
      for (int i = 0; i < n; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return out.x_soft[a] > out.x_soft[b];
      });
      for (int r = 0; r < instance.k() && r < n; ++r) {
        if (out.x_soft[order[r]] > 0.5) chosen = chosen.With(order[r]);
      }
      break;
    }
    case Rounding::kPerStepHard:
      // A round whose argmax is the dummy or an already chosen element adds
      // nothing.
      for (const DcsgStep& step : out.per_step) {
        const auto best = std::max_element(step.weights.begin(),
                                           step.weights.end());
        const int j = static_cast<int>(best - step.weights.begin());
        if (j < n && !chosen.Contains(j)) chosen = chosen.With(j);
      }
      break;
  }
  return chosen;
}

// Unrolls D-CSG on `tape` with the cost vector given by node `w` (length N).
// Gumbel noise, when enabled, is drawn from `noise_rng` outside the tape.
// The tape keeps a reference to `instance`.
inline DcsgOutput DcsgForward(const GroundSetInstance& instance, ad::Tape& tape,
                              ad::NodeId w, const DcsgConfig& cfg,
                              std::mt19937_64* noise_rng = nullptr) {
  cfg.Validate();
  const int n = instance.n();
  if (tape.length(w) != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("cost node length does not match n");
  }
  if (cfg.use_gumbel_noise && noise_rng == nullptr) {
    throw std::invalid_argument("gumbel noise requested without an rng");
  }

  DcsgOutput out;
  ad::NodeId s = tape.Constant(std::vector<double>(n, 0.0));
  const ad::NodeId dummy = tape.Constant({0.0});
  std::vector<ad::NodeId> gains(n);
  for (int step = 0; step < instance.k(); ++step) {
    ExtensionConfig ext = cfg.extension;
    ext.rng_seed += static_cast<std::uint64_t>(step);  // CRN within a round

    const ad::NodeId headroom = ad::AddConst(tape, ad::Scale(tape, s, -1.0), 1.0);
    ad::NodeId base{};
    if (cfg.marginal_mode == MarginalMode::kSharedBase) {
      base = RelaxedObjectiveNode(tape, instance, s, w, 2.0, ext);
      ++out.evaluations;
    }
    for (int j = 0; j < n; ++j) {
      const ad::NodeId candidate = ad::Bump(tape, s, headroom, j);
      const ad::NodeId value =
          RelaxedObjectiveNode(tape, instance, candidate, w, 2.0, ext);
      ++out.evaluations;
      ad::NodeId reference = base;
      if (cfg.marginal_mode == MarginalMode::kPairwise) {
        reference = RelaxedObjectiveNode(tape, instance, s, w, 2.0, ext);
        ++out.evaluations;
      }
      gains[j] = ad::Sub(tape, value, reference);
    }
    std::vector<ad::NodeId> parts = gains;
    parts.push_back(dummy);
    const ad::NodeId h = ad::Concat(tape, parts);

    std::vector<double> noise(n + 1, 0.0);
    if (cfg.use_gumbel_noise) noise = ad::SampleGumbel(n + 1, *noise_rng);
    const ad::NodeId p = ad::GumbelSoftmax(tape, h, cfg.tau, noise);
    const ad::NodeId p_real = ad::Slice(tape, p, 0, n);
    s = ad::Add(tape, s, ad::Mul(tape, p_real, headroom));

    out.per_step.push_back(
        DcsgStep{tape.value(h), tape.value(p), tape.value(s)});
  }

  out.x_node = s;
  out.x_soft = SelectionVector(tape.value(s));
  ExtensionConfig final_ext = cfg.extension;
  final_ext.rng_seed += static_cast<std::uint64_t>(instance.k());
  out.objective_node =
      RelaxedObjectiveNode(tape, instance, s, w, 2.0, final_ext);
  out.objective_soft = tape.scalar(out.objective_node);
  out.subset = DcsgRound(out, instance, cfg);
  return out;
}

// Gradients of `loss` with respect to every node recorded on the tape,
// including the cost node passed to DcsgForward and anything upstream of it.
inline ad::Gradients DcsgBackward(const ad::Tape& tape, ad::NodeId loss) {
  return tape.Backward(loss);
}

// Forward pass on a private tape with a fixed cost vector.
inline DcsgOutput DcsgSolve(const GroundSetInstance& instance,
                            const CostVector& w, const DcsgConfig& cfg,
                            std::mt19937_64* noise_rng = nullptr) {
  internal::CheckCostSize(instance, w);
  ad::Tape tape;
  const ad::NodeId wn = tape.Constant(w.vec());
  return DcsgForward(instance, tape, wn, cfg, noise_rng);
}

struct ObjectiveWithGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

// objective_soft of a noise-free forward pass and its gradient in w.
inline ObjectiveWithGradient DcsgObjectiveGradient(
    const GroundSetInstance& instance, std::span<const double> w,
    const DcsgConfig& cfg) {
  DcsgConfig quiet = cfg;
  quiet.use_gumbel_noise = false;
  ad::Tape tape;
  const ad::NodeId wn = tape.Variable(std::vector<double>(w.begin(), w.end()));
  const DcsgOutput out = DcsgForward(instance, tape, wn, quiet);
  const ad::Gradients grads = DcsgBackward(tape, out.objective_node);
  const auto gw = grads[wn];
  return {out.objective_soft, std::vector<double>(gw.begin(), gw.end())};
}

}  // namespace diffsub

#endif  // DIFFSUB_DCSG_HPP_
