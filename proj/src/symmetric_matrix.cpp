#include "gapforge/symmetric_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace gapforge {

std::string to_string(PsdClass c) {
  switch (c) {
    case PsdClass::PositiveDefinite: return "PositiveDefinite";
    case PsdClass::PsdRankDeficient: return "PsdRankDeficient";
    case PsdClass::Indefinite: return "Indefinite";
    case PsdClass::NegativeSemidefinite: return "NegativeSemidefinite";
    case PsdClass::Zero: return "Zero";
  }
  return "?";
}

Tolerances tolerances_from_env(const Tolerances& base) {
  Tolerances t = base;
  const char* raw = std::getenv("GAPFORGE_TOLERANCES");
  if (!raw) return t;
  std::string s(raw);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string item;
  while (in >> item) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("GAPFORGE_TOLERANCES: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const double val = std::stod(item.substr(eq + 1));
    if (key == "psd")
      t.psd = val;
    else if (key == "eig")
      t.eig = val;
    else if (key == "rank")
      t.rank = val;
    else if (key == "zero")
      t.zero = val;
    else
      throw std::invalid_argument("GAPFORGE_TOLERANCES: unknown key '" + key + "'");
  }
  return t;
}

namespace {

// Symmetric Schur elimination over the rationals with full diagonal
// pivoting. Certifies psd-ness and the rank, or stops at the first
// witness that psd-ness fails: a negative diagonal entry, or a zero
// diagonal entry whose row is not zero (the inspection rule of the
// two-variable gap argument).
struct ExactPsdProbe {
  bool psd = false;
  int rank = 0;
};

ExactPsdProbe exact_psd_probe(const SymMat<Rat>& m) {
  const int n = m.order();
  Mat<Rat> a = m.matrix();
  std::vector<int> act(n);
  for (int i = 0; i < n; ++i) act[i] = i;
  ExactPsdProbe out;
  while (!act.empty()) {
    int pivot_pos = -1;
    Rat best(0);
    for (size_t k = 0; k < act.size(); ++k) {
      const Rat& d = a(act[k], act[k]);
      if (sgn(d) < 0) return out;  // negative diagonal: not psd
      if (sgn(d) > 0 && (pivot_pos < 0 || d > best)) {
        pivot_pos = static_cast<int>(k);
        best = d;
      }
    }
    if (pivot_pos < 0) {
      // all remaining diagonal entries are zero
      for (size_t k = 0; k < act.size(); ++k)
        for (size_t l = k + 1; l < act.size(); ++l)
          if (a(act[k], act[l]) != 0) return out;
      out.psd = true;
      return out;
    }
    const int d = act[pivot_pos];
    const Rat piv = a(d, d);
    act.erase(act.begin() + pivot_pos);
    for (size_t k = 0; k < act.size(); ++k) {
      const int i = act[k];
      if (a(i, d) == 0) continue;
      const Rat f = a(i, d) / piv;
      for (size_t l = k; l < act.size(); ++l) {
        const int j = act[l];
        const Rat v = a(i, j) - f * a(d, j);
        a(i, j) = v;
        a(j, i) = v;
      }
    }
    ++out.rank;
  }
  out.psd = true;
  return out;
}

std::optional<std::vector<Rat>> negative_direction(const SymMat<Rat>& m) {
  const int n = m.order();
  for (int i = 0; i < n; ++i)
    if (sgn(m(i, i)) < 0) {
      std::vector<Rat> v(n, Rat(0));
      v[i] = 1;
      return v;
    }
  // all diagonal >= 0; pivot on a positive diagonal entry and recurse on
  // the Schur complement, or exploit a zero diagonal with nonzero row
  for (int d = 0; d < n; ++d) {
    if (sgn(m(d, d)) != 0) continue;
    for (int j = 0; j < n; ++j) {
      if (j == d || m(d, j) == 0) continue;
      std::vector<Rat> v(n, Rat(0));
      // (e_d + t e_j)^T M (e_d + t e_j) = 2 t M_dj + t^2 M_jj; small |t|
      // of the right sign makes it negative
      Rat t = (sgn(m(d, j)) > 0) ? Rat(-1) : Rat(1);
      if (m(j, j) != 0) {
        Rat bound = abs(m(d, j)) / m(j, j);  // M_jj > 0 here
        if (abs(t) >= bound) t = t * bound / (2 * abs(t));
      }
      v[d] = 1;
      v[j] = t;
      return v;
    }
  }
  int piv = -1;
  for (int d = 0; d < n; ++d)
    if (sgn(m(d, d)) > 0) {
      piv = d;
      break;
    }
  if (piv < 0) return std::nullopt;  // zero matrix
  if (n == 1) return std::nullopt;
  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (i != piv) rest.push_back(i);
  SymMat<Rat> sub(n - 1);
  for (size_t k = 0; k < rest.size(); ++k)
    for (size_t l = k; l < rest.size(); ++l)
      sub.set(static_cast<int>(k), static_cast<int>(l),
              m(rest[k], rest[l]) - m(rest[k], piv) * m(piv, rest[l]) / m(piv, piv));
  auto vr = negative_direction(sub);
  if (!vr) return std::nullopt;
  std::vector<Rat> v(n, Rat(0));
  Rat cross(0);
  for (size_t k = 0; k < rest.size(); ++k) {
    v[rest[k]] = (*vr)[k];
    cross += m(piv, rest[k]) * (*vr)[k];
  }
  v[piv] = -cross / m(piv, piv);
  return v;
}

}  // namespace

PsdStatus psd_status(const SymMat<Rat>& m) {
  if (m.is_zero()) return {PsdClass::Zero, 0};
  ExactPsdProbe pos = exact_psd_probe(m);
  if (pos.psd)
    return {pos.rank == m.order() ? PsdClass::PositiveDefinite : PsdClass::PsdRankDeficient, pos.rank};
  ExactPsdProbe neg = exact_psd_probe(-m);
  if (neg.psd) return {PsdClass::NegativeSemidefinite, neg.rank};
  return {PsdClass::Indefinite, 0};
}

std::optional<std::vector<Rat>> find_direction_of_sign(const SymMat<Rat>& m, int sign) {
  if (sign == 0) throw std::invalid_argument("find_direction_of_sign: sign must be +1/-1");
  auto v = (sign < 0) ? negative_direction(m) : negative_direction(-m);
  return v;
}

int rank_psd(const SymMat<Rat>& m) {
  PsdStatus st = psd_status(m);
  if (!st.is_psd()) throw std::invalid_argument("rank_psd: matrix is not positive semidefinite");
  return st.rank;
}

SymMat<Rat> congruence(const SymMat<Rat>& m, const Mat<Rat>& t) {
  if (t.rows() != m.order() || t.cols() != t.rows())
    throw std::invalid_argument("congruence: T must be square of matching order");
  if (det(t) == 0) throw std::invalid_argument("congruence: singular transform");
  return congruence_unchecked(m, t);
}

SymMat<double> congruence(const SymMat<double>& m, const Mat<double>& t) {
  if (t.rows() != m.order() || t.cols() != t.rows())
    throw std::invalid_argument("congruence: T must be square of matching order");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(to_eigen(t));
  if (!lu.isInvertible()) throw std::invalid_argument("congruence: singular transform");
  return congruence_unchecked(m, t);
}

EigSym eig_sym(const SymMat<double>& m, const Tolerances& tol) {
  Eigen::MatrixXd e = to_eigen(m.matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
  if (es.info() != Eigen::Success) throw std::runtime_error("eig_sym: eigensolver did not converge");
  const int n = m.order();
  EigSym out;
  out.q = Mat<double>(n, n);
  out.values.resize(n);
  // Eigen returns ascending order
  for (int k = 0; k < n; ++k) {
    out.values[k] = es.eigenvalues()(n - 1 - k);
    for (int i = 0; i < n; ++i) out.q(i, k) = es.eigenvectors()(i, n - 1 - k);
  }
  Eigen::MatrixXd q = to_eigen(out.q);
  Eigen::VectorXd lam(n);
  for (int k = 0; k < n; ++k) lam(k) = out.values[k];
  const double resid = (e * q - q * lam.asDiagonal().toDenseMatrix()).norm();
  if (resid > tol.eig * std::max(1.0, e.norm()))
    throw std::runtime_error("eig_sym: residual above tolerance");
  return out;
}

double min_eigenvalue(const SymMat<double>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m.matrix()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

PsdStatus psd_status(const SymMat<double>& m, const Tolerances& tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m.matrix()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es.eigenvalues();
  const double lo = lam.minCoeff(), hi = lam.maxCoeff();
  const double scale = std::max(std::abs(lo), std::abs(hi));
  if (scale <= tol.psd) return {PsdClass::Zero, 0};
  if (lo >= -tol.psd) {
    int r = 0;
    for (int i = 0; i < lam.size(); ++i)
      if (lam(i) > tol.rank * scale) ++r;
    return {lo > tol.psd ? PsdClass::PositiveDefinite : PsdClass::PsdRankDeficient, r};
  }
  if (hi <= tol.psd) {
    int r = 0;
    for (int i = 0; i < lam.size(); ++i)
      if (-lam(i) > tol.rank * scale) ++r;
    return {PsdClass::NegativeSemidefinite, r};
  }
  return {PsdClass::Indefinite, 0};
}

int rank_psd(const SymMat<double>& m, const Tolerances& tol) {
  PsdStatus st = psd_status(m, tol);
  if (!st.is_psd()) throw std::invalid_argument("rank_psd: matrix is not positive semidefinite");
  return st.rank;
}

}  // namespace gapforge
