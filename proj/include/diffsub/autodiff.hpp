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
// Minimal reverse-mode automatic differentiation.
//
// A Tape is an append-only list of nodes. Every node holds a dense row-major
// value (a scalar, vector or matrix) and a vector-Jacobian product that
// pushes the node's gradient into its parents. Parents always precede their
// children, so one sweep in reverse insertion order computes all gradients.
//
// Example:
//
//   ad::Tape tape;
//   ad::NodeId x = tape.Variable({3.0});
//   ad::NodeId y = ad::Mul(tape, x, x);
//   ad::Gradients grads = tape.Backward(y);
//   grads[x][0];  // 6.0
//

#ifndef DIFFSUB_AUTODIFF_HPP_
#define DIFFSUB_AUTODIFF_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace diffsub::ad {

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(NodeId, NodeId) = default;
};

enum class OpKind {
  kConstant,
  kVariable,
  kGeneric,  // recorded with explicit local Jacobians
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kMaxConst,
  kDot,
  kMatVec,
  kRelu,
  kTanh,
  kSoftplus,
  kSoftmax,
  kGumbelSoftmax,
  kMse,
  kSum,
  kScale,
  kAddConst,
  kSlice,
  kConcat,
  kBump,
  kMultilinear,
};

// Gradient buffer indexed by node. Sized to match every node's value.
class Gradients {
 public:
  explicit Gradients(std::vector<std::vector<double>> g) : g_(std::move(g)) {}

  std::span<const double> operator[](NodeId id) const { return g_.at(id.index); }
  std::vector<double>& mutable_at(NodeId id) { return g_.at(id.index); }
  double scalar(NodeId id) const { return g_.at(id.index).at(0); }

 private:
  std::vector<std::vector<double>> g_;
};

// Vector-Jacobian product: given d(out)/d(node) in `grad_out`, accumulate
// into the parents' entries of `grads`.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::vector<std::vector<double>>& grads)>;

class Tape {
 public:
  struct Node {
    OpKind kind;
    std::vector<NodeId> parents;
    std::vector<double> value;
    std::size_t rows;
    std::size_t cols;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  std::size_t size() const { return nodes_.size(); }

  NodeId Constant(std::vector<double> value) {
    const std::size_t n = value.size();
    return Leaf(OpKind::kConstant, std::move(value), n, 1);
  }
  NodeId Variable(std::vector<double> value) {
    const std::size_t n = value.size();
    return Leaf(OpKind::kVariable, std::move(value), n, 1);
  }
  NodeId Constant(std::vector<double> value, std::size_t rows,
                  std::size_t cols) {
    return Leaf(OpKind::kConstant, std::move(value), rows, cols);
  }
  NodeId Variable(std::vector<double> value, std::size_t rows,
                  std::size_t cols) {
    return Leaf(OpKind::kVariable, std::move(value), rows, cols);
  }

  // Records an op whose local partials are given as dense Jacobians, one per
  // parent, each of shape value.size() x parent.size() (row-major).
  NodeId Record(OpKind kind, std::vector<NodeId> parents,
                std::vector<double> value,
                std::vector<std::vector<double>> local_partials) {
    if (local_partials.size() != parents.size()) {
      throw std::invalid_argument("one Jacobian per parent is required");
    }
    const std::size_t out = value.size();
    for (std::size_t k = 0; k < parents.size(); ++k) {
      const std::size_t in = at(parents[k]).value.size();
      if (local_partials[k].size() != out * in) {
        throw std::invalid_argument("Jacobian shape does not match operands");
      }
    }
    BackwardFn fn = [parents, jac = std::move(local_partials), out](
                        std::span<const double> g,
                        std::vector<std::vector<double>>& grads) {
      for (std::size_t k = 0; k < parents.size(); ++k) {
        std::vector<double>& dst = grads[parents[k].index];
        const std::size_t in = dst.size();
        for (std::size_t r = 0; r < out; ++r) {
          if (g[r] == 0.0) continue;
          for (std::size_t c = 0; c < in; ++c) dst[c] += jac[k][r * in + c] * g[r];
        }
      }
    };
    return RecordCustom(kind == OpKind::kConstant ? OpKind::kGeneric : kind,
                        std::move(parents), std::move(value), std::move(fn));
  }

  // Records an op with a hand-written vector-Jacobian product.
  NodeId RecordCustom(OpKind kind, std::vector<NodeId> parents,
                      std::vector<double> value, BackwardFn backward,
                      std::size_t rows = 0, std::size_t cols = 1) {
    for (NodeId p : parents) {
      if (p.index >= nodes_.size()) {
        throw std::out_of_range("parent node " + std::to_string(p.index) +
                                " is not on the tape");
      }
    }
    for (double v : value) {
      if (!std::isfinite(v)) {
        throw std::domain_error("non-finite value produced by op " +
                                std::to_string(static_cast<int>(kind)));
      }
    }
    if (rows == 0) rows = value.size();
    nodes_.push_back(Node{kind, std::move(parents), std::move(value), rows,
                          cols, std::move(backward)});
    return NodeId{nodes_.size() - 1};
  }

  const Node& at(NodeId id) const {
    if (id.index >= nodes_.size()) {
      throw std::out_of_range("node " + std::to_string(id.index) +
                              " is not on the tape");
    }
    return nodes_[id.index];
  }
  const std::vector<double>& value(NodeId id) const { return at(id).value; }
  double scalar(NodeId id) const {
    const auto& v = value(id);
    if (v.size() != 1) throw std::invalid_argument("node is not a scalar");
    return v[0];
  }
  std::size_t length(NodeId id) const { return at(id).value.size(); }

  // Gradient of the scalar node `output` with respect to every node. Nodes
  // that do not influence `output` and constants get zero gradients.
  Gradients Backward(NodeId output) const {
    if (at(output).value.size() != 1) {
      throw std::invalid_argument("backward needs a scalar output");
    }
    std::vector<std::vector<double>> grads(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      grads[i].assign(nodes_[i].value.size(), 0.0);
    }
    std::vector<char> reached(nodes_.size(), 0);
    grads[output.index][0] = 1.0;
    reached[output.index] = 1;
    for (std::size_t i = output.index + 1; i-- > 0;) {
      if (!reached[i]) continue;
      const Node& node = nodes_[i];
      if (node.backward) node.backward(grads[i], grads);
      for (NodeId p : node.parents) reached[p.index] = 1;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].kind == OpKind::kConstant) {
        std::fill(grads[i].begin(), grads[i].end(), 0.0);
      }
    }
    return Gradients(std::move(grads));
  }

 private:
  NodeId Leaf(OpKind kind, std::vector<double> value, std::size_t rows,
              std::size_t cols) {
    if (rows * cols != value.size()) {
      throw std::invalid_argument("leaf shape does not match its data");
    }
    return RecordCustom(kind, {}, std::move(value), nullptr, rows, cols);
  }

  std::vector<Node> nodes_;
};

namespace internal {

inline void CheckSameLength(const Tape& t, NodeId a, NodeId b,
                            const char* op) {
  if (t.length(a) != t.length(b)) {
    throw std::invalid_argument(std::string(op) + ": operand lengths " +
                                std::to_string(t.length(a)) + " and " +
                                std::to_string(t.length(b)) + " differ");
  }
}

// Lengths for a binary elementwise op; one side may be a scalar.
inline std::size_t BroadcastLength(const Tape& t, NodeId a, NodeId b,
                                   const char* op) {
  const std::size_t la = t.length(a), lb = t.length(b);
  if (la == lb || lb == 1) return la;
  if (la == 1) return lb;
  CheckSameLength(t, a, b, op);
  return la;
}

inline void CheckTemperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("softmax temperature must be > 0");
  }
}

// exp((h_j - max) / tau) is flushed to zero below this exponent.
inline constexpr double kExpFloor = -700.0;

inline std::vector<double> TemperedSoftmax(std::span<const double> h,
                                           double tau) {
  const double top = *std::max_element(h.begin(), h.end());
  std::vector<double> p(h.size());
  double total = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double e = (h[j] - top) / tau;
    p[j] = e < kExpFloor ? 0.0 : std::exp(e);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

inline BackwardFn SoftmaxBackward(NodeId h, std::vector<double> p,
                                  double tau) {
  return [h, p = std::move(p), tau](std::span<const double> g,
                                    std::vector<std::vector<double>>& grads) {
    double inner = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) inner += g[j] * p[j];
    std::vector<double>& dh = grads[h.index];
    for (std::size_t j = 0; j < p.size(); ++j) {
      dh[j] += p[j] * (g[j] - inner) / tau;
    }
  };
}

template <typename Forward, typename Derivative>
NodeId Unary(Tape& t, OpKind kind, NodeId a, Forward fwd, Derivative deriv) {
  const std::vector<double>& x = t.value(a);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = deriv(x[i], y[i]);
  return t.RecordCustom(
      kind, {a}, std::move(y),
      [a, d = std::move(d)](std::span<const double> g,
                            std::vector<std::vector<double>>& grads) {
        std::vector<double>& dst = grads[a.index];
        for (std::size_t i = 0; i < d.size(); ++i) dst[i] += d[i] * g[i];
      });
}

// Accumulates g (of length `len`) into a node that may be a broadcast scalar.
inline void AccumulateBroadcast(std::vector<double>& dst,
                                std::span<const double> g, double scale = 1.0) {
  if (dst.size() == g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * g[i];
  } else {
    for (double v : g) dst[0] += scale * v;
  }
}

}  // namespace internal

inline NodeId Add(Tape& t, NodeId a, NodeId b) {
  const std::size_t n = internal::BroadcastLength(t, a, b, "add");
  const auto& x = t.value(a);
  const auto& y = t.value(b);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[x.size() == 1 ? 0 : i] + y[y.size() == 1 ? 0 : i];
  }
  return t.RecordCustom(OpKind::kAdd, {a, b}, std::move(out),
                        [a, b](std::span<const double> g, auto& grads) {
                          internal::AccumulateBroadcast(grads[a.index], g);
                          internal::AccumulateBroadcast(grads[b.index], g);
                        });
}

inline NodeId Sub(Tape& t, NodeId a, NodeId b) {
  const std::size_t n = internal::BroadcastLength(t, a, b, "sub");
  const auto& x = t.value(a);
  const auto& y = t.value(b);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[x.size() == 1 ? 0 : i] - y[y.size() == 1 ? 0 : i];
  }
  return t.RecordCustom(OpKind::kSub, {a, b}, std::move(out),
                        [a, b](std::span<const double> g, auto& grads) {
                          internal::AccumulateBroadcast(grads[a.index], g);
                          internal::AccumulateBroadcast(grads[b.index], g, -1.0);
                        });
}

// Elementwise product.
inline NodeId Mul(Tape& t, NodeId a, NodeId b) {
  const std::size_t n = internal::BroadcastLength(t, a, b, "mul");
  const std::vector<double> x = t.value(a);
  const std::vector<double> y = t.value(b);
  auto xa = [&x](std::size_t i) { return x[x.size() == 1 ? 0 : i]; };
  auto yb = [&y](std::size_t i) { return y[y.size() == 1 ? 0 : i]; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xa(i) * yb(i);
  return t.RecordCustom(
      OpKind::kMul, {a, b}, std::move(out),
      [a, b, x, y, n](std::span<const double> g, auto& grads) {
        std::vector<double> ga(n), gb(n);
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] = g[i] * y[y.size() == 1 ? 0 : i];
          gb[i] = g[i] * x[x.size() == 1 ? 0 : i];
        }
        internal::AccumulateBroadcast(grads[a.index], ga);
        internal::AccumulateBroadcast(grads[b.index], gb);
      });
}

inline NodeId Div(Tape& t, NodeId a, NodeId b) {
  const std::size_t n = internal::BroadcastLength(t, a, b, "div");
  const std::vector<double> x = t.value(a);
  const std::vector<double> y = t.value(b);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[x.size() == 1 ? 0 : i] / y[y.size() == 1 ? 0 : i];
  }
  return t.RecordCustom(
      OpKind::kDiv, {a, b}, std::move(out),
      [a, b, x, y, n](std::span<const double> g, auto& grads) {
        std::vector<double> ga(n), gb(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double xi = x[x.size() == 1 ? 0 : i];
          const double yi = y[y.size() == 1 ? 0 : i];
          ga[i] = g[i] / yi;
          gb[i] = -g[i] * xi / (yi * yi);
        }
        internal::AccumulateBroadcast(grads[a.index], ga);
        internal::AccumulateBroadcast(grads[b.index], gb);
      });
}

inline NodeId Neg(Tape& t, NodeId a) {
  return internal::Unary(
      t, OpKind::kNeg, a, [](double v) { return -v; },
      [](double, double) { return -1.0; });
}

inline NodeId Exp(Tape& t, NodeId a) {
  return internal::Unary(
      t, OpKind::kExp, a, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

inline NodeId Log(Tape& t, NodeId a) {
  return internal::Unary(
      t, OpKind::kLog, a, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

// max(a, c) elementwise; the gradient passes where a > c.
inline NodeId MaxConst(Tape& t, NodeId a, double c) {
  return internal::Unary(
      t, OpKind::kMaxConst, a, [c](double v) { return std::max(v, c); },
      [c](double v, double) { return v > c ? 1.0 : 0.0; });
}

inline NodeId Relu(Tape& t, NodeId a) {
  return internal::Unary(
      t, OpKind::kRelu, a, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline NodeId Tanh(Tape& t, NodeId a) {
  return internal::Unary(
      t, OpKind::kTanh, a, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

// log(1 + exp(a)), evaluated without overflow.
inline double SoftplusValue(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

inline NodeId Softplus(Tape& t, NodeId a) {
  return internal::Unary(
      t, OpKind::kSoftplus, a, SoftplusValue,
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline NodeId Scale(Tape& t, NodeId a, double c) {
  return internal::Unary(
      t, OpKind::kScale, a, [c](double v) { return c * v; },
      [c](double, double) { return c; });
}

inline NodeId AddConst(Tape& t, NodeId a, double c) {
  return internal::Unary(
      t, OpKind::kAddConst, a, [c](double v) { return v + c; },
      [](double, double) { return 1.0; });
}

inline NodeId Sum(Tape& t, NodeId a) {
  double total = 0.0;
  for (double v : t.value(a)) total += v;
  return t.RecordCustom(OpKind::kSum, {a}, {total},
                        [a](std::span<const double> g, auto& grads) {
                          for (double& d : grads[a.index]) d += g[0];
                        });
}

inline NodeId Dot(Tape& t, NodeId a, NodeId b) {
  internal::CheckSameLength(t, a, b, "dot");
  const std::vector<double> x = t.value(a);
  const std::vector<double> y = t.value(b);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i] * y[i];
  return t.RecordCustom(OpKind::kDot, {a, b}, {total},
                        [a, b, x, y](std::span<const double> g, auto& grads) {
                          for (std::size_t i = 0; i < x.size(); ++i) {
                            grads[a.index][i] += g[0] * y[i];
                            grads[b.index][i] += g[0] * x[i];
                          }
                        });
}

// m (rows x cols, row-major) times v (length cols).
inline NodeId MatVec(Tape& t, NodeId m, NodeId v) {
  const auto& mn = t.at(m);
  const std::size_t rows = mn.rows, cols = mn.cols;
  if (t.length(v) != cols) {
    throw std::invalid_argument("matvec: matrix has " + std::to_string(cols) +
                                " columns but vector has length " +
                                std::to_string(t.length(v)));
  }
  const std::vector<double> a = mn.value;
  const std::vector<double> x = t.value(v);
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += a[r * cols + c] * x[c];
  }
  return t.RecordCustom(
      OpKind::kMatVec, {m, v}, std::move(out),
      [m, v, a, x, rows, cols](std::span<const double> g, auto& grads) {
        std::vector<double>& dm = grads[m.index];
        std::vector<double>& dv = grads[v.index];
        for (std::size_t r = 0; r < rows; ++r) {
          if (g[r] == 0.0) continue;
          for (std::size_t c = 0; c < cols; ++c) {
            dm[r * cols + c] += g[r] * x[c];
            dv[c] += g[r] * a[r * cols + c];
          }
        }
      });
}

// softmax(h / tau) with max subtraction.
inline NodeId SoftmaxWithTemperature(Tape& t, NodeId h, double tau) {
  internal::CheckTemperature(tau);
  std::vector<double> p = internal::TemperedSoftmax(t.value(h), tau);
  auto fn = internal::SoftmaxBackward(h, p, tau);
  return t.RecordCustom(OpKind::kSoftmax, {h}, std::move(p), std::move(fn));
}

// softmax((h + noise) / tau). The noise is a constant drawn outside the tape,
// so gradients treat it as fixed.
inline NodeId GumbelSoftmax(Tape& t, NodeId h, double tau,
                            std::span<const double> noise) {
  internal::CheckTemperature(tau);
  const std::vector<double>& hv = t.value(h);
  if (noise.size() != hv.size()) {
    throw std::invalid_argument("gumbel noise length does not match logits");
  }
  std::vector<double> shifted(hv.size());
  for (std::size_t j = 0; j < hv.size(); ++j) {
    if (!std::isfinite(noise[j])) {
      throw std::domain_error("non-finite gumbel noise");
    }
    shifted[j] = hv[j] + noise[j];
  }
  std::vector<double> p = internal::TemperedSoftmax(shifted, tau);
  auto fn = internal::SoftmaxBackward(h, p, tau);
  return t.RecordCustom(OpKind::kGumbelSoftmax, {h}, std::move(p),
                        std::move(fn));
}

// Standard Gumbel(0, 1) draws: -log(-log(U)), U ~ Uniform(0, 1).
template <typename Rng>
std::vector<double> SampleGumbel(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> unit(
      std::numeric_limits<double>::min(), 1.0);
  std::vector<double> g(n);
  for (double& v : g) {
    double u = unit(rng);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    v = -std::log(-std::log(u));
  }
  return g;
}

// mean((pred - target)^2).
inline NodeId Mse(Tape& t, NodeId pred, NodeId target) {
  internal::CheckSameLength(t, pred, target, "mse");
  const std::vector<double>& p = t.value(pred);
  const std::vector<double>& y = t.value(target);
  const std::size_t n = p.size();
  if (n == 0) throw std::invalid_argument("mse of empty vectors");
  std::vector<double> diff(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = p[i] - y[i];
    total += diff[i] * diff[i];
  }
  return t.RecordCustom(
      OpKind::kMse, {pred, target}, {total / n},
      [pred, target, diff, n](std::span<const double> g, auto& grads) {
        for (std::size_t i = 0; i < n; ++i) {
          const double d = 2.0 * diff[i] / n * g[0];
          grads[pred.index][i] += d;
          grads[target.index][i] -= d;
        }
      });
}

inline NodeId Slice(Tape& t, NodeId a, std::size_t begin, std::size_t len) {
  const std::vector<double>& x = t.value(a);
  if (begin + len > x.size()) throw std::out_of_range("slice out of range");
  std::vector<double> out(x.begin() + begin, x.begin() + begin + len);
  return t.RecordCustom(OpKind::kSlice, {a}, std::move(out),
                        [a, begin](std::span<const double> g, auto& grads) {
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            grads[a.index][begin + i] += g[i];
                          }
                        });
}

inline NodeId Concat(Tape& t, const std::vector<NodeId>& parts) {
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (NodeId p : parts) {
    offsets.push_back(out.size());
    const auto& v = t.value(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  return t.RecordCustom(
      OpKind::kConcat, parts, std::move(out),
      [parts, offsets](std::span<const double> g, auto& grads) {
        for (std::size_t k = 0; k < parts.size(); ++k) {
          std::vector<double>& dst = grads[parts[k].index];
          for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += g[offsets[k] + i];
          }
        }
      });
}

// base + delta[j] * e_j: a copy of `base` with coordinate j shifted by the
// j-th entry of `delta`.
inline NodeId Bump(Tape& t, NodeId base, NodeId delta, std::size_t j) {
  internal::CheckSameLength(t, base, delta, "bump");
  std::vector<double> out = t.value(base);
  if (j >= out.size()) throw std::out_of_range("bump coordinate out of range");
  out[j] += t.value(delta)[j];
  return t.RecordCustom(OpKind::kBump, {base, delta}, std::move(out),
                        [base, delta, j](std::span<const double> g,
                                         auto& grads) {
                          std::vector<double>& db = grads[base.index];
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            db[i] += g[i];
                          }
                          grads[delta.index][j] += g[j];
                        });
}

}  // namespace diffsub::ad

#endif  // DIFFSUB_AUTODIFF_HPP_
