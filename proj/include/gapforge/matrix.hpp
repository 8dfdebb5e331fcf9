#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gapforge/rational.hpp"

namespace gapforge {

// Dense row-major matrix over an exact or floating scalar. Sizes here are
// tiny (n is at most a few dozen), so everything is O(n^3) textbook code.
template <class S>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, S(0)) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = S(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  S& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  const S& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  Mat transpose() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product dimension mismatch");
    Mat c(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const S& aik = a(i, k);
        if (aik == S(0)) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Mat operator+(const Mat& a, const Mat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix sum dimension mismatch");
    Mat c = a;
    for (size_t k = 0; k < c.data_.size(); ++k) c.data_[k] += b.data_[k];
    return c;
  }

  friend Mat operator*(const S& t, const Mat& a) {
    Mat c = a;
    for (auto& v : c.data_) v *= t;
    return c;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<S> data_;
};

// Exact determinant by fraction Gaussian elimination with partial pivoting.
inline Rat det(const Mat<Rat>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("det of non-square matrix");
  const int n = a.rows();
  Mat<Rat> u = a;
  Rat d(1);
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    for (int i = k; i < n; ++i)
      if (u(i, k) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) return Rat(0);
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(u(k, j), u(piv, j));
      d = -d;
    }
    d *= u(k, k);
    for (int i = k + 1; i < n; ++i) {
      if (u(i, k) == 0) continue;
      const Rat f = u(i, k) / u(k, k);
      for (int j = k; j < n; ++j) u(i, j) -= f * u(k, j);
    }
  }
  return d;
}

// Exact inverse via Gauss-Jordan; nullopt for singular input.
inline std::optional<Mat<Rat>> inverse(const Mat<Rat>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse of non-square matrix");
  const int n = a.rows();
  Mat<Rat> u = a, inv = Mat<Rat>::identity(n);
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    for (int i = k; i < n; ++i)
      if (u(i, k) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) return std::nullopt;
    if (piv != k)
      for (int j = 0; j < n; ++j) {
        std::swap(u(k, j), u(piv, j));
        std::swap(inv(k, j), inv(piv, j));
      }
    const Rat p = u(k, k);
    for (int j = 0; j < n; ++j) {
      u(k, j) /= p;
      inv(k, j) /= p;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k || u(i, k) == 0) continue;
      const Rat f = u(i, k);
      for (int j = 0; j < n; ++j) {
        u(i, j) -= f * u(k, j);
        inv(i, j) -= f * inv(k, j);
      }
    }
  }
  return inv;
}

// Solves A x = b exactly; nullopt when inconsistent. A may be rectangular;
// for underdetermined systems returns one solution (free variables at 0).
inline std::optional<std::vector<Rat>> solve_linear(Mat<Rat> a, std::vector<Rat> b) {
  const int m = a.rows(), n = a.cols();
  if (static_cast<int>(b.size()) != m) throw std::invalid_argument("solve_linear: rhs size mismatch");
  std::vector<int> pivot_col;
  int row = 0;
  for (int col = 0; col < n && row < m; ++col) {
    int piv = -1;
    for (int i = row; i < m; ++i)
      if (a(i, col) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != row) {
      for (int j = 0; j < n; ++j) std::swap(a(row, j), a(piv, j));
      std::swap(b[row], b[piv]);
    }
    const Rat p = a(row, col);
    for (int j = 0; j < n; ++j) a(row, j) /= p;
    b[row] /= p;
    for (int i = 0; i < m; ++i) {
      if (i == row || a(i, col) == 0) continue;
      const Rat f = a(i, col);
      for (int j = 0; j < n; ++j) a(i, j) -= f * a(row, j);
      b[i] -= f * b[row];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (int i = row; i < m; ++i)
    if (b[i] != 0) return std::nullopt;
  std::vector<Rat> x(n, Rat(0));
  for (int i = 0; i < row; ++i) x[pivot_col[i]] = b[i];
  return x;
}

inline Mat<double> to_float(const Mat<Rat>& a) {
  Mat<double> f(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) f(i, j) = to_double(a(i, j));
  return f;
}

inline Eigen::MatrixXd to_eigen(const Mat<double>& a) {
  Eigen::MatrixXd e(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) e(i, j) = a(i, j);
  return e;
}

inline Mat<double> from_eigen(const Eigen::MatrixXd& e) {
  Mat<double> a(static_cast<int>(e.rows()), static_cast<int>(e.cols()));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) = e(i, j);
  return a;
}

inline double det(const Mat<double>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("det of non-square matrix");
  return to_eigen(a).determinant();
}

}  // namespace gapforge
