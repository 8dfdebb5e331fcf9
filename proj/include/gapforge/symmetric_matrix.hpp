#pragma once

#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gapforge/matrix.hpp"
#include "gapforge/rational.hpp"

namespace gapforge {

// Float-backend tolerances. Defaults suit instances whose entries are small
// integers; the CLI and GAPFORGE_TOLERANCES can override them.
struct Tolerances {
  double psd = 1e-9;    // eigenvalue threshold for psd classification
  double eig = 1e-10;   // eigendecomposition residual
  double rank = 1e-8;   // relative eigenvalue cutoff for numeric rank
  double zero = 1e-7;   // residual allowed in blocks that must vanish
};

Tolerances tolerances_from_env(const Tolerances& base = {});

enum class PsdClass { PositiveDefinite, PsdRankDeficient, Indefinite, NegativeSemidefinite, Zero };

struct PsdStatus {
  PsdClass cls = PsdClass::Zero;
  int rank = 0;  // meaningful for PositiveDefinite / PsdRankDeficient / Zero

  bool is_psd() const {
    return cls == PsdClass::PositiveDefinite || cls == PsdClass::PsdRankDeficient || cls == PsdClass::Zero;
  }
  bool is_nsd() const { return cls == PsdClass::NegativeSemidefinite || cls == PsdClass::Zero; }
  friend bool operator==(const PsdStatus&, const PsdStatus&) = default;
};

std::string to_string(PsdClass c);

// Dense symmetric matrix. Symmetry is a construction invariant: builders
// either fill both triangles or reject asymmetric input.
template <class S>
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(int n) : m_(n, n) {
    if (n < 1) throw std::invalid_argument("SymMat order must be >= 1");
  }

  static SymMat from_matrix(const Mat<S>& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SymMat: non-square input");
    for (int i = 0; i < a.rows(); ++i)
      for (int j = i + 1; j < a.cols(); ++j)
        if (a(i, j) != a(j, i))
          throw std::invalid_argument("SymMat: asymmetric entry at (" + std::to_string(i + 1) + "," +
                                      std::to_string(j + 1) + ")");
    SymMat s(a.rows());
    s.m_ = a;
    return s;
  }

  static SymMat identity(int n) {
    SymMat s(n);
    for (int i = 0; i < n; ++i) s.m_(i, i) = S(1);
    return s;
  }

  static SymMat diag(const std::vector<S>& d) {
    SymMat s(static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) s.m_(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return s;
  }

  // E_{ij}: ones at (i,j) and (j,i), zero elsewhere. 0-based indices.
  static SymMat unit(int n, int i, int j) {
    SymMat s(n);
    s.set(i, j, S(1));
    return s;
  }

  int order() const { return m_.rows(); }
  const S& operator()(int i, int j) const { return m_(i, j); }
  const Mat<S>& matrix() const { return m_; }

  void set(int i, int j, const S& v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  void add(int i, int j, const S& v) { set(i, j, m_(i, j) + v); }

  bool is_zero() const {
    for (int i = 0; i < order(); ++i)
      for (int j = i; j < order(); ++j)
        if (m_(i, j) != S(0)) return false;
    return true;
  }

  bool is_diagonal() const {
    for (int i = 0; i < order(); ++i)
      for (int j = i + 1; j < order(); ++j)
        if (m_(i, j) != S(0)) return false;
    return true;
  }

  std::vector<S> diagonal() const {
    std::vector<S> d(order());
    for (int i = 0; i < order(); ++i) d[i] = m_(i, i);
    return d;
  }

  // Principal submatrix on the given (0-based, strictly increasing) indices.
  SymMat restrict_to(const std::vector<int>& idx) const {
    if (idx.empty()) throw std::invalid_argument("SymMat: empty restriction");
    SymMat r(static_cast<int>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = i; j < idx.size(); ++j) r.set(static_cast<int>(i), static_cast<int>(j), m_(idx[i], idx[j]));
    return r;
  }

  friend SymMat operator+(const SymMat& a, const SymMat& b) {
    SymMat c;
    c.m_ = a.m_ + b.m_;
    return c;
  }
  friend SymMat operator*(const S& t, const SymMat& a) {
    SymMat c;
    c.m_ = t * a.m_;
    return c;
  }
  friend SymMat operator-(const SymMat& a) { return S(-1) * a; }
  friend bool operator==(const SymMat& a, const SymMat& b) { return a.m_ == b.m_; }

 private:
  Mat<S> m_;
};

// trace(A B) = sum_{ij} A_ij B_ij.
template <class S>
S inner(const SymMat<S>& a, const SymMat<S>& b) {
  if (a.order() != b.order()) throw std::invalid_argument("inner: order mismatch");
  S acc(0);
  for (int i = 0; i < a.order(); ++i)
    for (int j = 0; j < a.order(); ++j) acc += a(i, j) * b(i, j);
  return acc;
}

template <class S>
SymMat<S> congruence_unchecked(const SymMat<S>& m, const Mat<S>& t) {
  if (t.rows() != m.order() || t.cols() != t.rows())
    throw std::invalid_argument("congruence: T must be square of matching order");
  Mat<S> r = t.transpose() * m.matrix() * t;
  // symmetrize to absorb roundoff in the float backend
  for (int i = 0; i < r.rows(); ++i)
    for (int j = i + 1; j < r.cols(); ++j) {
      S v = (r(i, j) + r(j, i)) / S(2);
      r(i, j) = v;
      r(j, i) = v;
    }
  return SymMat<S>::from_matrix(r);
}

// T^T M T with invertibility of T checked (exactly in the exact backend).
SymMat<Rat> congruence(const SymMat<Rat>& m, const Mat<Rat>& t);
SymMat<double> congruence(const SymMat<double>& m, const Mat<double>& t);

// Exact psd / nsd / indefinite classification by symmetric fraction
// elimination with diagonal pivoting; no eigenvalues involved.
PsdStatus psd_status(const SymMat<Rat>& m);
PsdStatus psd_status(const SymMat<double>& m, const Tolerances& tol = {});

// Rank of a psd matrix. Throws on indefinite input.
int rank_psd(const SymMat<Rat>& m);
int rank_psd(const SymMat<double>& m, const Tolerances& tol = {});

// G = [G11 G12; G12^T G22] with trailing block G22 of order k positive
// definite; returns G11 - G12 G22^{-1} G12^T. G is psd iff the result is.
template <class S>
SymMat<S> schur_complement(const SymMat<S>& g, int k);

struct EigSym {
  Mat<double> q;               // orthogonal, columns are eigenvectors
  std::vector<double> values;  // sorted descending
};

// Float-backend spectral decomposition, M = Q diag(values) Q^T.
EigSym eig_sym(const SymMat<double>& m, const Tolerances& tol = {});

double min_eigenvalue(const SymMat<double>& m);

// Exact certificates behind an indefinite classification: vectors v with
// v^T M v of the requested sign.
std::optional<std::vector<Rat>> find_direction_of_sign(const SymMat<Rat>& m, int sign);

template <class S>
SymMat<double> sym_to_float(const SymMat<S>& m) {
  if constexpr (std::is_same_v<S, double>)
    return m;
  else {
    Mat<double> f(m.order(), m.order());
    for (int i = 0; i < m.order(); ++i)
      for (int j = 0; j < m.order(); ++j) f(i, j) = to_double(m(i, j));
    return SymMat<double>::from_matrix(f);
  }
}

template <class S>
SymMat<S> schur_complement(const SymMat<S>& g, int k) {
  const int n = g.order();
  if (k < 1 || k >= n) throw std::invalid_argument("schur_complement: trailing block order out of range");
  const int h = n - k;
  std::vector<int> head(h), tail(k);
  for (int i = 0; i < h; ++i) head[i] = i;
  for (int i = 0; i < k; ++i) tail[i] = h + i;
  SymMat<S> g22 = g.restrict_to(tail);
  if constexpr (std::is_same_v<S, Rat>) {
    if (psd_status(g22).cls != PsdClass::PositiveDefinite)
      throw std::invalid_argument("schur_complement: trailing block not positive definite");
  } else {
    if (psd_status(g22).cls != PsdClass::PositiveDefinite)
      throw std::invalid_argument("schur_complement: trailing block not positive definite");
  }
  // columns of X solve G22 X = G12^T
  Mat<S> g12(h, k);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < k; ++j) g12(i, j) = g(i, h + j);
  Mat<S> x(k, h);
  if constexpr (std::is_same_v<S, Rat>) {
    for (int col = 0; col < h; ++col) {
      std::vector<Rat> rhs(k);
      for (int i = 0; i < k; ++i) rhs[i] = g12(col, i);
      auto sol = solve_linear(g22.matrix(), rhs);
      if (!sol) throw std::logic_error("schur_complement: pd block produced singular solve");
      for (int i = 0; i < k; ++i) x(i, col) = (*sol)[i];
    }
  } else {
    Eigen::MatrixXd e22 = to_eigen(g22.matrix());
    Eigen::MatrixXd rhs = to_eigen(g12).transpose();
    Eigen::MatrixXd sol = e22.ldlt().solve(rhs);
    x = from_eigen(sol);
  }
  Mat<S> res = g.restrict_to(head).matrix();
  Mat<S> corr = g12 * x;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) res(i, j) -= corr(i, j);
  // enforce exact symmetry of the result
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) {
      S v = (res(i, j) + res(j, i)) / S(2);
      res(i, j) = v;
      res(j, i) = v;
    }
  return SymMat<S>::from_matrix(res);
}

}  // namespace gapforge
