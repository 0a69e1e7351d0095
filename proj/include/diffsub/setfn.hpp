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
// Set functions over a ground set V = {0, ..., n-1}.
//
// The task objective f is a normalized monotone submodular function (a
// weighted coverage function or an explicit table), the cost c(S, w) is
// modular, and the combined objective is g(S, w) = f(S) - lambda * c(S, w).
// Greedy maximization works on the cost-scaled surrogate
// g~(S, w) = f(S) - 2 * lambda * c(S, w).
//

#ifndef DIFFSUB_SETFN_HPP_
#define DIFFSUB_SETFN_HPP_

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace diffsub {

inline constexpr int kMaxGroundSetSize = 64;
inline constexpr int kMaxTabularSize = 20;

// A subset of the ground set, stored as a bitmask (bit i <=> element i).
class Subset {
 public:
  constexpr Subset() = default;
  constexpr explicit Subset(std::uint64_t bits) : bits_(bits) {}

  // Throws std::out_of_range for indices outside [0, n).
  static Subset FromIndices(std::initializer_list<int> indices, int n) {
    return FromIndices(std::span<const int>(indices.begin(), indices.size()),
                       n);
  }
  static Subset FromIndices(std::span<const int> indices, int n) {
    Subset s;
    for (int i : indices) {
      if (i < 0 || i >= n) {
        throw std::out_of_range("element index " + std::to_string(i) +
                                " outside ground set of size " +
                                std::to_string(n));
      }
      s = s.With(i);
    }
    return s;
  }
  static constexpr Subset Full(int n) {
    return Subset(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool Contains(int i) const { return (bits_ >> i) & 1U; }
  constexpr Subset With(int i) const {
    return Subset(bits_ | (std::uint64_t{1} << i));
  }
  constexpr Subset Without(int i) const {
    return Subset(bits_ & ~(std::uint64_t{1} << i));
  }
  constexpr bool IsSubsetOf(Subset other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  // True iff every element is < n.
  constexpr bool FitsIn(int n) const {
    return n >= 64 || (bits_ >> n) == 0;
  }

  std::vector<int> Elements() const {
    std::vector<int> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
      out.push_back(std::countr_zero(b));
    }
    return out;
  }

  friend constexpr Subset operator|(Subset a, Subset b) {
    return Subset(a.bits_ | b.bits_);
  }
  friend constexpr Subset operator&(Subset a, Subset b) {
    return Subset(a.bits_ & b.bits_);
  }
  friend constexpr bool operator==(Subset, Subset) = default;

 private:
  std::uint64_t bits_ = 0;
};

// Nonnegative per-element cost vector w.
class CostVector {
 public:
  CostVector() = default;
  explicit CostVector(std::vector<double> w) : w_(std::move(w)) {
    for (double v : w_) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("cost entries must be finite and >= 0");
      }
    }
  }
  CostVector(std::initializer_list<double> w)
      : CostVector(std::vector<double>(w)) {}

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }
  const std::vector<double>& vec() const { return w_; }

 private:
  std::vector<double> w_;
};

// Weighted coverage: f(S) = total weight of points covered by some element
// of S. Always normalized, monotone and submodular.
class CoverageFunction {
 public:
  CoverageFunction() = default;
  CoverageFunction(std::vector<double> weights,
                   std::vector<std::vector<int>> covers)
      : weights_(std::move(weights)), covers_(std::move(covers)) {
    for (double v : weights_) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("coverage weights must be finite and >= 0");
      }
    }
    for (const auto& c : covers_) {
      for (int p : c) {
        if (p < 0 || p >= num_points()) {
          throw std::out_of_range("cover set references point " +
                                  std::to_string(p));
        }
      }
    }
    if (covers_.empty() || covers_.size() > kMaxGroundSetSize) {
      throw std::invalid_argument("coverage ground set size must be in [1, 64]");
    }
    // Inverse map: for each point, which elements cover it.
    coverers_.resize(weights_.size());
    coverer_lists_.resize(weights_.size());
    for (int e = 0; e < n(); ++e) {
      for (int p : covers_[e]) {
        if (coverers_[p].Contains(e)) continue;
        coverers_[p] = coverers_[p].With(e);
        coverer_lists_[p].push_back(e);
      }
    }
  }

  int n() const { return static_cast<int>(covers_.size()); }
  int num_points() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::vector<int>>& covers() const { return covers_; }
  // Elements covering point p.
  Subset coverers(int p) const { return coverers_[p]; }
  const std::vector<int>& coverer_list(int p) const {
    return coverer_lists_[p];
  }

  double operator()(Subset s) const {
    double total = 0.0;
    for (int p = 0; p < num_points(); ++p) {
      if (!(coverers_[p] & s).empty()) total += weights_[p];
    }
    return total;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::vector<int>> covers_;
  std::vector<Subset> coverers_;
  std::vector<std::vector<int>> coverer_lists_;
};

// Checks f(empty) = 0, monotonicity and submodularity of a set function given
// as a dense table indexed by bitmask. Uses the local form of the lattice
// inequality, f(S+i) - f(S) >= f(S+i+j) - f(S+j), which is equivalent to
// f(A) + f(B) >= f(A | B) + f(A & B) for all A, B.
// Returns an empty string on success, otherwise a description of the first
// violation found.
inline std::string FindSubmodularityViolation(std::span<const double> table,
                                              int n, double tol = 1e-9) {
  if (table.size() != (std::size_t{1} << n)) return "table size is not 2^n";
  if (std::abs(table[0]) > tol) return "f(empty) != 0";
  for (std::uint64_t s = 0; s < table.size(); ++s) {
    for (int i = 0; i < n; ++i) {
      if ((s >> i) & 1U) continue;
      const std::uint64_t si = s | (std::uint64_t{1} << i);
      const double gain_i = table[si] - table[s];
      if (gain_i < -tol) {
        return "not monotone at mask " + std::to_string(s) + " + " +
               std::to_string(i);
      }
      for (int j = i + 1; j < n; ++j) {
        if ((s >> j) & 1U) continue;
        const std::uint64_t sj = s | (std::uint64_t{1} << j);
        if (gain_i < table[si | sj] - table[sj] - tol) {
          return "not submodular at mask " + std::to_string(s) + " with " +
                 std::to_string(i) + "," + std::to_string(j);
        }
      }
    }
  }
  return {};
}

// Explicit table of f over all 2^n subsets; validated at construction.
class TabularSubmodular {
 public:
  TabularSubmodular() = default;
  TabularSubmodular(int n, std::vector<double> values)
      : n_(n), values_(std::move(values)) {
    if (n_ < 1 || n_ > kMaxTabularSize) {
      throw std::invalid_argument("tabular set function needs 1 <= n <= 20");
    }
    if (std::string why = FindSubmodularityViolation(values_, n_);
        !why.empty()) {
      throw std::invalid_argument("tabular set function rejected: " + why);
    }
  }

  int n() const { return n_; }
  const std::vector<double>& values() const { return values_; }
  double operator()(Subset s) const { return values_[s.bits()]; }

 private:
  int n_ = 0;
  std::vector<double> values_;
};

// The monotone submodular part of an instance.
class SetFunction {
 public:
  using Variant = std::variant<CoverageFunction, TabularSubmodular>;

  SetFunction() = default;
  SetFunction(CoverageFunction f) : f_(std::move(f)) {}    // NOLINT
  SetFunction(TabularSubmodular f) : f_(std::move(f)) {}   // NOLINT

  int n() const {
    return std::visit([](const auto& f) { return f.n(); }, f_);
  }
  double operator()(Subset s) const {
    return std::visit([s](const auto& f) { return f(s); }, f_);
  }
  const CoverageFunction* coverage() const {
    return std::get_if<CoverageFunction>(&f_);
  }
  const TabularSubmodular* tabular() const {
    return std::get_if<TabularSubmodular>(&f_);
  }

 private:
  Variant f_;
};

// A cardinality-constrained instance: maximize g(S, w) s.t. |S| <= k.
class GroundSetInstance {
 public:
  GroundSetInstance() = default;
  GroundSetInstance(SetFunction f, int k, double lambda)
      : f_(std::move(f)), k_(k), lambda_(lambda) {
    const int n = f_.n();
    if (n < 1 || n > kMaxGroundSetSize) {
      throw std::invalid_argument("ground set size must be in [1, 64]");
    }
    if (k_ < 1 || k_ > n) {
      throw std::invalid_argument("cardinality must satisfy 1 <= k <= n");
    }
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
      throw std::invalid_argument("lambda must be finite and >= 0");
    }
  }

  int n() const { return f_.n(); }
  int k() const { return k_; }
  double lambda() const { return lambda_; }
  const SetFunction& f() const { return f_; }

  GroundSetInstance WithLambda(double lambda) const {
    return GroundSetInstance(f_, k_, lambda);
  }
  GroundSetInstance WithK(int k) const {
    return GroundSetInstance(f_, k, lambda_);
  }

 private:
  SetFunction f_;
  int k_ = 1;
  double lambda_ = 1.0;
};

namespace internal {

inline void CheckSubset(Subset s, int n) {
  if (!s.FitsIn(n)) {
    throw std::out_of_range("subset has elements outside ground set of size " +
                            std::to_string(n));
  }
}

}  // namespace internal

inline double EvalF(const SetFunction& f, Subset s) {
  internal::CheckSubset(s, f.n());
  return f(s);
}

inline double EvalF(const GroundSetInstance& instance, Subset s) {
  return EvalF(instance.f(), s);
}

// c(S, w) = sum of w over S.
inline double EvalC(const CostVector& w, Subset s) {
  internal::CheckSubset(s, static_cast<int>(w.size()));
  double total = 0.0;
  for (std::uint64_t b = s.bits(); b != 0; b &= b - 1) {
    total += w[std::countr_zero(b)];
  }
  return total;
}

namespace internal {

inline void CheckCostSize(const GroundSetInstance& instance,
                          const CostVector& w) {
  if (w.size() != static_cast<std::size_t>(instance.n())) {
    throw std::invalid_argument("cost vector length " +
                                std::to_string(w.size()) +
                                " does not match ground set size " +
                                std::to_string(instance.n()));
  }
}

}  // namespace internal

// g(S, w) = f(S) - lambda * c(S, w). May be negative.
inline double EvalG(const GroundSetInstance& instance, const CostVector& w,
                    Subset s) {
  internal::CheckCostSize(instance, w);
  return EvalF(instance, s) - instance.lambda() * EvalC(w, s);
}

// g~(S, w) = f(S) - 2 * lambda * c(S, w).
inline double EvalGScaled(const GroundSetInstance& instance,
                          const CostVector& w, Subset s) {
  internal::CheckCostSize(instance, w);
  return EvalF(instance, s) - 2.0 * instance.lambda() * EvalC(w, s);
}

// g~(e | base). Throws std::invalid_argument if e is already in base.
inline double MarginalGain(const GroundSetInstance& instance,
                           const CostVector& w, Subset base, int element) {
  if (element < 0 || element >= instance.n()) {
    throw std::out_of_range("element index out of range");
  }
  if (base.Contains(element)) {
    throw std::invalid_argument("element " + std::to_string(element) +
                                " is already in the base set");
  }
  return EvalGScaled(instance, w, base.With(element)) -
         EvalGScaled(instance, w, base);
}

// Dense table of f over all 2^n subsets (n <= 20).
inline std::vector<double> Tabulate(const SetFunction& f) {
  const int n = f.n();
  if (n > kMaxTabularSize) {
    throw std::invalid_argument("cannot tabulate a set function with n > 20");
  }
  std::vector<double> table(std::size_t{1} << n);
  for (std::uint64_t s = 0; s < table.size(); ++s) table[s] = f(Subset(s));
  return table;
}

}  // namespace diffsub

#endif  // DIFFSUB_SETFN_HPP_
