#pragma once

// Independent test oracles. These deliberately avoid the library's own
// code paths: psd classification goes through Eigen eigenvalues, the
// diagonal LP through grid search with variable elimination, and random
// unimodular matrices are built directly from elementary operations.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <random>

#include "gapforge/symmetric_matrix.hpp"

namespace gapforge::testing {

inline PsdClass oracle_psd_class(const SymMat<Rat>& m, double tol = 1e-9) {
  Eigen::MatrixXd e(m.order(), m.order());
  for (int i = 0; i < m.order(); ++i)
    for (int j = 0; j < m.order(); ++j) e(i, j) = to_double(m(i, j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (std::abs(lo) <= tol && std::abs(hi) <= tol) return PsdClass::Zero;
  if (lo >= -tol) return lo > tol ? PsdClass::PositiveDefinite : PsdClass::PsdRankDeficient;
  if (hi <= tol) return PsdClass::NegativeSemidefinite;
  return PsdClass::Indefinite;
}

// min cost.y s.t. sigma.y = c, y >= 0 by brute-force grid search with one
// variable eliminated through the equality constraint. Supports up to
// three variables; returns nullopt when infeasible.
inline std::optional<double> oracle_diag_lp(const std::vector<double>& cost, const std::vector<double>& sigma,
                                            double c, double span = 60.0, int steps = 1200) {
  const size_t k = sigma.size();
  std::optional<double> best;
  auto consider = [&](const std::vector<double>& y) {
    double lhs = 0, val = 0;
    for (size_t i = 0; i < k; ++i) {
      if (y[i] < -1e-12) return;
      lhs += sigma[i] * y[i];
      val += cost[i] * y[i];
    }
    (void)lhs;
    if (!best || val < *best) best = val;
  };
  // eliminate variable e through the constraint, grid the rest
  for (size_t e = 0; e < k; ++e) {
    if (sigma[e] == 0) continue;
    std::vector<double> y(k, 0.0);
    if (k == 1) {
      y[e] = c / sigma[e];
      consider(y);
      continue;
    }
    for (int g1 = 0; g1 <= steps; ++g1) {
      const size_t f1 = (e + 1) % k;
      y[f1] = span * g1 / steps;
      if (k == 2) {
        y[e] = (c - sigma[f1] * y[f1]) / sigma[e];
        consider(y);
      } else {
        const size_t f2 = (e + 2) % k;
        for (int g2 = 0; g2 <= steps / 10; ++g2) {
          y[f2] = span * g2 / (steps / 10);
          y[e] = (c - sigma[f1] * y[f1] - sigma[f2] * y[f2]) / sigma[e];
          consider(y);
        }
      }
    }
  }
  if (!best && c == 0) return 0.0;
  return best;
}

inline Mat<Rat> random_unimodular(int n, std::mt19937_64& rng, int ops = 12, int bound = 2) {
  std::uniform_int_distribution<int> row(0, n - 1), mult(1, bound), kind(0, 9);
  Mat<Rat> t = Mat<Rat>::identity(n);
  for (int k = 0; k < ops; ++k) {
    int i = row(rng), j = row(rng);
    while (j == i) j = row(rng);
    if (kind(rng) < 7) {
      const int lam = mult(rng) * (kind(rng) % 2 ? 1 : -1);
      for (int r = 0; r < n; ++r) t(r, j) += rat(lam) * t(r, i);
    } else if (kind(rng) < 9) {
      for (int r = 0; r < n; ++r) std::swap(t(r, i), t(r, j));
    } else {
      for (int r = 0; r < n; ++r) t(r, i) = -t(r, i);
    }
  }
  return t;
}

inline SymMat<Rat> random_sym(int n, std::mt19937_64& rng, int lo = -3, int hi = 3) {
  std::uniform_int_distribution<int> entry(lo, hi);
  SymMat<Rat> m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, rat(entry(rng)));
  return m;
}

}  // namespace gapforge::testing
