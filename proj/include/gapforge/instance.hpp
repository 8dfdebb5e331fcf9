#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gapforge/symmetric_matrix.hpp"

namespace gapforge {

enum class Family { Small, SingleFinite, SingleInfinite, Double, DoubleFlipped, Example51, Unknown };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct MessLog {
  uint64_t seed = 0;
  int num_ops = 0;
  int entry_bound = 0;
  Mat<Rat> transform;  // the integer unimodular T that was applied
};

struct InstanceMeta {
  std::string name;
  Family family = Family::Unknown;
  uint64_t seed = 0;
  // advisory only; certifiers never read it
  std::optional<std::pair<ExtendedRat, ExtendedRat>> known_gap;
  bool assumption11_holds = false;
  std::optional<MessLog> mess;
  std::optional<Rat> perturb_eps;
  std::optional<SymMat<Rat>> dual_point;  // a known (strictly) feasible dual point
  std::vector<std::string> reform_history;
};

// The primal/dual pair
//   (P)  sup c^T x   s.t. sum_i x_i A_i <= B
//   (D)  inf B . Y   s.t. A_i . Y = c_i, Y >= 0
// held as one object; the homogeneous dual (HD) is derived from it.
template <class S>
struct SdpInstance {
  int m = 0, n = 0;
  std::vector<SymMat<S>> a;
  SymMat<S> b;
  std::vector<S> c;
  InstanceMeta meta;

  void validate() const {
    if (m < 1 || n < 2) throw std::invalid_argument("SdpInstance: need m >= 1, n >= 2");
    if (static_cast<int>(a.size()) != m || static_cast<int>(c.size()) != m)
      throw std::invalid_argument("SdpInstance: len(A) and len(c) must equal m");
    if (b.order() != n) throw std::invalid_argument("SdpInstance: B order mismatch");
    for (const auto& ai : a)
      if (ai.order() != n) throw std::invalid_argument("SdpInstance: constraint matrix order mismatch");
  }
};

using ExactInstance = SdpInstance<Rat>;
using FloatInstance = SdpInstance<double>;

FloatInstance instance_to_float(const ExactInstance& inst);

// True when B = I_r (+) 0 entrywise; fills r.
template <class S>
bool b_is_normalized(const SymMat<S>& b, int* r_out = nullptr) {
  const int n = b.order();
  int r = 0;
  while (r < n && b(r, r) == S(1)) ++r;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const S want = (i == j && i < r) ? S(1) : S(0);
      if (b(i, j) != want) return false;
    }
  if (r_out) *r_out = r;
  return r < n;
}

// ---------------------------------------------------------------------------
// Reformulation operations (gap preserving)

struct OpAddToB {
  int j;  // 0-based constraint index
  Rat lambda;
};
struct OpSwap {
  int i, j;
};
struct OpCombine {
  int i;
  Rat lambda;
  int j;
  Rat mu;
};
struct OpCongruence {
  Mat<Rat> t;
};

using ReformOp = std::variant<OpAddToB, OpSwap, OpCombine, OpCongruence>;

std::string describe(const ReformOp& op);

// Applies one reformulation, recording it in meta.reform_history. Optimal
// values of (P) and (D) both shift by lambda*c_j under OpAddToB and are
// unchanged otherwise; known_gap metadata is shifted accordingly.
ExactInstance apply_reform(const ExactInstance& inst, const ReformOp& op);

// ---------------------------------------------------------------------------
// Slack and dual-side evaluations

template <class S>
struct Slack {
  std::vector<S> x;
  SymMat<S> z;  // B - sum x_i A_i
  bool feasible = false;
};

template <class S>
Slack<S> slack_at(const SdpInstance<S>& inst, const std::vector<S>& x) {
  if (static_cast<int>(x.size()) != inst.m) throw std::invalid_argument("slack_at: |x| != m");
  Mat<S> z = inst.b.matrix();
  for (int k = 0; k < inst.m; ++k) {
    if (x[k] == S(0)) continue;
    for (int i = 0; i < inst.n; ++i)
      for (int j = 0; j < inst.n; ++j) z(i, j) -= x[k] * inst.a[k](i, j);
  }
  Slack<S> s;
  s.x = x;
  s.z = SymMat<S>::from_matrix(z);
  s.feasible = psd_status(s.z).is_psd();
  return s;
}

template <class S>
std::vector<S> dual_residual(const SdpInstance<S>& inst, const SymMat<S>& y) {
  if (y.order() != inst.n) throw std::invalid_argument("dual_residual: Y order mismatch");
  std::vector<S> r(inst.m);
  for (int i = 0; i < inst.m; ++i) r[i] = inner(inst.a[i], y) - inst.c[i];
  return r;
}

// Constraint matrices of (HD): A_1..A_m followed by B, all with rhs 0.
template <class S>
std::vector<SymMat<S>> hd_constraints(const SdpInstance<S>& inst) {
  std::vector<SymMat<S>> h = inst.a;
  h.push_back(inst.b);
  return h;
}

}  // namespace gapforge
