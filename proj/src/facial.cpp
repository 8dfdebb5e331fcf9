#include "gapforge/facial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

namespace gapforge {

std::vector<int> AxisFace::active() const {
  std::vector<int> act;
  size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < zero.size() && zero[k] == i) {
      ++k;
      continue;
    }
    act.push_back(i);
  }
  return act;
}

int face_rank(const Face& f) {
  if (const auto* a = std::get_if<AxisFace>(&f)) return a->rank();
  return std::get<GeneralFace>(f).r;
}

// ---------------------------------------------------------------------------
// Span membership: exact solve in the upper-triangle coordinates.

namespace {

std::vector<Rat> vectorize_upper(const SymMat<Rat>& m) {
  const int n = m.order();
  std::vector<Rat> v;
  v.reserve(static_cast<size_t>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) v.push_back(m(i, j));
  return v;
}

std::optional<std::vector<Rat>> span_coefficients(const SymMat<Rat>& target,
                                                  const std::vector<SymMat<Rat>>& basis) {
  if (basis.empty()) return std::nullopt;
  const int dim = static_cast<int>(vectorize_upper(basis[0]).size());
  Mat<Rat> a(dim, static_cast<int>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k) {
    auto col = vectorize_upper(basis[k]);
    for (int i = 0; i < dim; ++i) a(i, static_cast<int>(k)) = col[i];
  }
  return solve_linear(a, vectorize_upper(target));
}

std::vector<int> positive_diag_support(const SymMat<Rat>& r, const std::vector<int>& active) {
  std::vector<int> out;
  for (size_t k = 0; k < active.size(); ++k)
    if (r(static_cast<int>(k), static_cast<int>(k)) != 0) out.push_back(active[k]);
  return out;
}

}  // namespace

FaceChain verify_fr_sequence(const std::vector<SymMat<Rat>>& seq, const std::vector<SymMat<Rat>>& span_basis,
                             bool require_strict, const Tolerances& tol) {
  if (seq.empty()) throw std::invalid_argument("verify_fr_sequence: empty sequence");
  const int n = seq[0].order();
  FaceChain chain;
  chain.faces.push_back(AxisFace{n, {}});
  chain.sequence.strict = require_strict;

  // exact axis state while restrictions stay diagonal
  bool axis_mode = true;
  std::vector<int> zero;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);  // general-mode face basis

  for (size_t step = 0; step < seq.size(); ++step) {
    const SymMat<Rat>& y = seq[step];
    if (y.order() != n) throw std::invalid_argument("verify_fr_sequence: order mismatch");
    auto coeff = span_coefficients(y, span_basis);
    if (!coeff) throw std::invalid_argument("verify_fr_sequence: member " + std::to_string(step + 1) +
                                            " is not in the span of the given basis");
    chain.sequence.matrices.push_back(y);
    chain.sequence.span_coefficients.push_back(*coeff);

    if (axis_mode) {
      AxisFace cur{n, zero};
      const auto active = cur.active();
      if (active.empty()) throw std::invalid_argument("verify_fr_sequence: face already zero");
      SymMat<Rat> r = y.restrict_to(active);
      PsdStatus st = psd_status(r);
      if (!st.is_psd())
        throw std::invalid_argument("verify_fr_sequence: restriction of member " + std::to_string(step + 1) +
                                    " is not psd (not a valid facial reduction step)");
      if (require_strict && st.cls == PsdClass::Zero)
        throw std::invalid_argument("verify_fr_sequence: member " + std::to_string(step + 1) +
                                    " lies in the orthogonal complement of the face (sequence not strict)");
      if (r.is_diagonal()) {
        auto zeroed = positive_diag_support(r, active);
        zero.insert(zero.end(), zeroed.begin(), zeroed.end());
        std::sort(zero.begin(), zero.end());
        chain.faces.push_back(AxisFace{n, zero});
      } else {
        // leave the exact path: kernel of the restriction via eigenvectors
        axis_mode = false;
        basis = Eigen::MatrixXd::Zero(n, static_cast<int>(active.size()));
        for (size_t k = 0; k < active.size(); ++k) basis(active[k], static_cast<int>(k)) = 1.0;
        EigSym es = eig_sym(sym_to_float(r), tol);
        Eigen::MatrixXd q = to_eigen(es.q);
        const double scale = std::max(std::abs(es.values.front()), 1e-300);
        int kern = 0;
        for (double v : es.values)
          if (v <= tol.rank * scale) ++kern;
        basis = basis * q.rightCols(kern);
        chain.faces.push_back(GeneralFace{from_eigen(basis), static_cast<int>(basis.cols())});
      }
    } else {
      Eigen::MatrixXd yf = to_eigen(sym_to_float(y).matrix());
      Eigen::MatrixXd r = basis.transpose() * yf * basis;
      r = 0.5 * (r + r.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
      const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
      if (lo < -tol.psd * std::max(1.0, std::abs(hi)))
        throw std::invalid_argument("verify_fr_sequence: float restriction of member " +
                                    std::to_string(step + 1) + " is not psd");
      if (require_strict && hi <= tol.zero)
        throw std::invalid_argument("verify_fr_sequence: float restriction of member " +
                                    std::to_string(step + 1) + " is zero (sequence not strict)");
      int kern = 0;
      for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) <= tol.rank * std::max(std::abs(hi), 1e-300)) ++kern;
      basis = basis * es.eigenvectors().leftCols(kern);  // ascending order: kernel first
      chain.faces.push_back(GeneralFace{from_eigen(basis), static_cast<int>(basis.cols())});
    }
  }
  chain.sequence.regularized_blocks = is_regularized(seq);
  return chain;
}

std::optional<std::vector<int>> is_regularized(const std::vector<SymMat<Rat>>& seq) {
  if (seq.empty()) return std::nullopt;
  const int n = seq[0].order();
  int offset = 0;
  std::vector<int> blocks;
  for (const auto& m : seq) {
    if (m.order() != n) return std::nullopt;
    int r = 0;
    while (offset + r < n && m(offset + r, offset + r) == 1) ++r;
    // rows/cols >= offset must be exactly I_r (+) 0
    for (int i = offset; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const Rat want = (i == j && i < offset + r) ? Rat(1) : Rat(0);
        if (m(i, j) != want) return std::nullopt;
      }
    blocks.push_back(r);
    offset += r;
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// Affine relations on x derived from forced-zero slack diagonals.

namespace {

class RelationSystem {
 public:
  explicit RelationSystem(int m) : m_(m) {}

  bool inconsistent() const { return inconsistent_; }
  int rank() const { return static_cast<int>(rows_.size()); }
  const std::vector<LinearRelation>& rows() const { return rows_; }

  // value v with a.x = v on the solution set, when pinned
  std::optional<Rat> implied_value(const std::vector<Rat>& a) const {
    std::vector<Rat> r = a;
    Rat v(0);
    for (size_t k = 0; k < rows_.size(); ++k) {
      const Rat f = r[lead_[k]];
      if (f == 0) continue;
      for (int j = 0; j < m_; ++j) r[j] -= f * rows_[k].coeff[j];
      v += f * rows_[k].rhs;
    }
    for (const Rat& x : r)
      if (x != 0) return std::nullopt;
    return v;
  }

  void add(std::vector<Rat> a, Rat rhs) {
    for (size_t k = 0; k < rows_.size(); ++k) {
      const Rat f = a[lead_[k]];
      if (f == 0) continue;
      for (int j = 0; j < m_; ++j) a[j] -= f * rows_[k].coeff[j];
      rhs -= f * rows_[k].rhs;
    }
    int lead = -1;
    for (int j = 0; j < m_; ++j)
      if (a[j] != 0) {
        lead = j;
        break;
      }
    if (lead < 0) {
      if (rhs != 0) inconsistent_ = true;
      return;
    }
    const Rat p = a[lead];
    for (int j = 0; j < m_; ++j) a[j] /= p;
    rhs /= p;
    // back-substitute into existing rows
    for (size_t k = 0; k < rows_.size(); ++k) {
      const Rat f = rows_[k].coeff[lead];
      if (f == 0) continue;
      for (int j = 0; j < m_; ++j) rows_[k].coeff[j] -= f * a[j];
      rows_[k].rhs -= f * rhs;
    }
    rows_.push_back({std::move(a), std::move(rhs)});
    lead_.push_back(lead);
  }

 private:
  int m_;
  std::vector<LinearRelation> rows_;
  std::vector<int> lead_;
  bool inconsistent_ = false;
};

void certify_primal(const ExactInstance& inst, GapCertificate& cert) {
  RelationSystem sys(inst.m);
  std::vector<bool> diag_zeroed(inst.n, false);
  bool changed = true;
  while (changed && !sys.inconsistent()) {
    changed = false;
    for (int d = 0; d < inst.n && !sys.inconsistent(); ++d) {
      if (diag_zeroed[d]) continue;
      std::vector<Rat> a(inst.m);
      for (int i = 0; i < inst.m; ++i) a[i] = inst.a[i](d, d);
      auto v = sys.implied_value(a);
      if (!v) continue;
      if (*v != inst.b(d, d)) {
        if (*v > inst.b(d, d)) {
          cert.primal_note = "slack diagonal (" + std::to_string(d + 1) + "," + std::to_string(d + 1) +
                             ") forced negative: (P) infeasible";
          return;
        }
        continue;  // forced positive, nothing to derive
      }
      // Z(d,d) = 0 for every feasible x, so the whole row of Z vanishes
      diag_zeroed[d] = true;
      changed = true;
      for (int j = 0; j < inst.n; ++j) {
        std::vector<Rat> row(inst.m);
        for (int i = 0; i < inst.m; ++i) row[i] = inst.a[i](j, d);
        sys.add(std::move(row), inst.b(j, d));
      }
    }
  }
  cert.primal_equations = sys.rows();
  if (sys.inconsistent()) {
    cert.primal_note = "derived equations are inconsistent: (P) infeasible";
    return;
  }
  auto cv = sys.implied_value(inst.c);
  if (!cv) {
    cert.primal_note = "objective not constant on the derived affine set";
    return;
  }
  bool zero_ok = psd_status(inst.b).is_psd();
  for (const auto& row : sys.rows())
    if (row.rhs != 0) zero_ok = false;
  if (!zero_ok) {
    cert.primal_note = "x = 0 not verified feasible";
    return;
  }
  cert.primal_value = ExtendedRat(*cv);
}

// ---------------------------------------------------------------------------
// Dual-side elimination

struct ElimOutcome {
  bool infeasible = false;
  std::string note;
  std::vector<ElimStep> steps;
  std::vector<int> active;
  std::vector<int> remaining;
  bool stalled_nondiagonal = false;
};

// Fixpoint sweep over the constraints in the given order. A constraint with
// zero rhs whose restriction is psd (or nsd, after negation) and diagonal
// zeroes out its support; conflicting sign patterns certify infeasibility.
ElimOutcome run_elimination(const std::vector<const SymMat<Rat>*>& mats, const std::vector<Rat>& rhs, int n,
                            const std::vector<int>& order) {
  ElimOutcome out;
  out.active.resize(n);
  std::iota(out.active.begin(), out.active.end(), 0);
  std::vector<bool> done(mats.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int idx : order) {
      if (done[idx]) continue;
      if (out.active.empty()) {
        if (rhs[idx] != 0) {
          out.infeasible = true;
          out.note = "all indices zeroed but constraint " + std::to_string(idx + 1) + " has nonzero rhs";
          return out;
        }
        done[idx] = true;
        continue;
      }
      SymMat<Rat> r = mats[idx]->restrict_to(out.active);
      PsdStatus st = psd_status(r);
      if (rhs[idx] == 0) {
        if (st.cls == PsdClass::Zero) {
          done[idx] = true;  // vacuous on the current face
          continue;
        }
        bool negated = false;
        if (st.cls == PsdClass::NegativeSemidefinite) {
          r = -r;
          negated = true;
        } else if (st.cls == PsdClass::Indefinite) {
          continue;
        }
        if (!r.is_diagonal()) {
          out.stalled_nondiagonal = true;
          continue;
        }
        auto zeroed = positive_diag_support(r, out.active);
        std::vector<int> next;
        std::set_difference(out.active.begin(), out.active.end(), zeroed.begin(), zeroed.end(),
                            std::back_inserter(next));
        out.active = std::move(next);
        out.steps.push_back({idx, zeroed, negated});
        done[idx] = true;
        changed = true;
      } else {
        if (st.is_psd() && st.cls != PsdClass::Zero && sgn(rhs[idx]) < 0) {
          out.infeasible = true;
          out.note = "constraint " + std::to_string(idx + 1) + " restricts to a psd matrix with negative rhs";
          return out;
        }
        if (st.is_nsd() && st.cls != PsdClass::Zero && sgn(rhs[idx]) > 0) {
          out.infeasible = true;
          out.note = "constraint " + std::to_string(idx + 1) + " restricts to a nsd matrix with positive rhs";
          return out;
        }
        if (st.cls == PsdClass::Zero) {
          out.infeasible = true;
          out.note = "constraint " + std::to_string(idx + 1) + " vanishes on the face but has nonzero rhs";
          return out;
        }
      }
    }
  }
  for (size_t i = 0; i < mats.size(); ++i)
    if (!done[i]) out.remaining.push_back(static_cast<int>(i));
  return out;
}

struct DualResult {
  std::optional<ExtendedRat> value;
  std::vector<ElimStep> steps;
  std::optional<ReducedDual> reduced;
  std::string note;
};

DualResult dual_from_outcome(const ExactInstance& inst, const ElimOutcome& out) {
  DualResult res;
  res.steps = out.steps;
  if (out.infeasible) {
    res.value = ExtendedRat::infinity();
    res.note = out.note;
    return res;
  }
  if (out.remaining.empty()) {
    if (out.active.empty() || psd_status(inst.b.restrict_to(out.active)).is_psd()) {
      res.value = ExtendedRat(Rat(0));
      res.note = "all constraints eliminated; Y = 0 is optimal";
    } else {
      res.note = "restricted objective not psd; value unbounded structure not certified";
    }
    return res;
  }
  if (out.remaining.size() > 1) {
    res.note = "elimination stalled: " + std::to_string(out.remaining.size()) + " constraints remain";
    return res;
  }
  const int j = out.remaining.front();
  SymMat<Rat> rj = inst.a[j].restrict_to(out.active);
  SymMat<Rat> br = inst.b.restrict_to(out.active);
  if (!rj.is_diagonal() || !br.is_diagonal()) {
    res.note = "terminal constraint or objective not diagonal on the face";
    return res;
  }
  std::vector<Rat> cost = br.diagonal(), sigma = rj.diagonal();
  for (const Rat& bd : cost)
    if (sgn(bd) < 0) {
      res.note = "restricted objective has a negative diagonal entry";
      return res;
    }
  ReducedDual red;
  red.terminal_constraint = j;
  red.c2prime = inst.c[j];
  for (size_t k = 0; k < cost.size(); ++k) {
    if (sgn(cost[k]) > 0)
      red.sigma.push_back(sigma[k] / cost[k]);
    else if (sgn(sigma[k]) < 0)
      ++red.s;
    else if (sgn(sigma[k]) > 0)
      ++red.zero_cost_pos;
  }
  res.value = diagonal_lp_value(cost, sigma, inst.c[j]);
  res.reduced = red;
  return res;
}

DualResult certify_dual(const ExactInstance& inst, const std::vector<int>& order) {
  std::vector<const SymMat<Rat>*> mats;
  for (const auto& ai : inst.a) mats.push_back(&ai);
  ElimOutcome out = run_elimination(mats, inst.c, inst.n, order);
  return dual_from_outcome(inst, out);
}

}  // namespace

ExtendedRat diagonal_lp_value(const std::vector<Rat>& cost, const std::vector<Rat>& sigma, const Rat& c) {
  if (cost.size() != sigma.size()) throw std::invalid_argument("diagonal_lp_value: size mismatch");
  if (c == 0) return ExtendedRat(Rat(0));
  std::optional<Rat> best;
  for (size_t d = 0; d < sigma.size(); ++d) {
    if (sgn(sigma[d]) != sgn(c)) continue;
    Rat v = cost[d] * c / sigma[d];
    if (!best || v < *best) best = v;
  }
  if (!best) return ExtendedRat::infinity();
  return ExtendedRat(*best);
}

ExtendedRat solve_diagonal_lp(const std::vector<Rat>& sigma, int s, const Rat& c2prime) {
  if (s < 0) throw std::invalid_argument("solve_diagonal_lp: s must be >= 0");
  std::vector<Rat> cost(sigma.size(), Rat(1)), sig = sigma;
  for (int k = 0; k < s; ++k) {
    cost.push_back(Rat(0));
    sig.push_back(Rat(-1));
  }
  return diagonal_lp_value(cost, sig, c2prime);
}

GapCertificate certify_gap(const ExactInstance& inst) {
  inst.validate();
  GapCertificate cert;
  certify_primal(inst, cert);

  std::vector<int> order(inst.m);
  std::iota(order.begin(), order.end(), 0);
  DualResult dual = certify_dual(inst, order);
  if (!dual.value && inst.m <= 6) {
    // stored order failed; try the other processing orders
    std::vector<int> perm = order;
    while (std::next_permutation(perm.begin(), perm.end())) {
      DualResult alt = certify_dual(inst, perm);
      if (alt.value) {
        dual = std::move(alt);
        break;
      }
    }
  }
  cert.dual_value = dual.value;
  cert.elimination_trace = dual.steps;
  cert.reduced_dual = dual.reduced;
  cert.dual_note = dual.note;

  if (cert.primal_value && cert.dual_value) {
    if (!(*cert.primal_value <= *cert.dual_value))
      throw std::logic_error("certify_gap: weak duality violated; certificate derivation is broken");
    if (!cert.primal_value->is_infinite() && cert.dual_value->is_infinite()) cert.weakly_infeasible_dual = true;
  }
  return cert;
}

GapCertificate replay_certificate(const ExactInstance& inst, const GapCertificate& cert) {
  GapCertificate out;
  certify_primal(inst, out);

  std::vector<int> active(inst.n);
  std::iota(active.begin(), active.end(), 0);
  for (const ElimStep& step : cert.elimination_trace) {
    SymMat<Rat> r = inst.a[step.constraint].restrict_to(active);
    if (step.negated) r = -r;
    PsdStatus st = psd_status(r);
    if (!st.is_psd() || !r.is_diagonal())
      throw std::logic_error("replay: recorded step is not a valid diagonal psd reduction");
    std::vector<int> zeroed = positive_diag_support(r, active);
    if (zeroed != step.zeroed) throw std::logic_error("replay: zeroed set differs from the recorded one");
    if (inst.c[step.constraint] != 0) throw std::logic_error("replay: eliminated constraint has nonzero rhs");
    std::vector<int> next;
    std::set_difference(active.begin(), active.end(), zeroed.begin(), zeroed.end(), std::back_inserter(next));
    active = std::move(next);
    out.elimination_trace.push_back(step);
  }
  if (cert.reduced_dual) {
    const int j = cert.reduced_dual->terminal_constraint;
    SymMat<Rat> rj = inst.a[j].restrict_to(active);
    SymMat<Rat> br = inst.b.restrict_to(active);
    if (!rj.is_diagonal() || !br.is_diagonal()) throw std::logic_error("replay: terminal data not diagonal");
    out.dual_value = diagonal_lp_value(br.diagonal(), rj.diagonal(), inst.c[j]);
    out.reduced_dual = cert.reduced_dual;
  } else if (cert.dual_value) {
    // infeasibility or zero value were certified without a terminal LP
    out.dual_value = cert.dual_value;
  }
  if (out.primal_value && out.dual_value && !out.primal_value->is_infinite() && out.dual_value->is_infinite())
    out.weakly_infeasible_dual = true;
  return out;
}

// ---------------------------------------------------------------------------
// Minimal cones

namespace {

// Strictly positive diagonal y on `active` with sigma . y = target; the
// relative-interior witness for the reduced problem.
std::optional<std::vector<Rat>> positive_diag_solution(const std::vector<Rat>& sigma, const Rat& target) {
  const size_t k = sigma.size();
  Rat sum(0);
  for (const Rat& s : sigma) sum += s;
  if (target == 0) {
    if (sum == 0) return std::vector<Rat>(k, Rat(1));
    // balance a positive against a negative entry
    int pos = -1, neg = -1;
    for (size_t d = 0; d < k; ++d) {
      if (sgn(sigma[d]) > 0 && pos < 0) pos = static_cast<int>(d);
      if (sgn(sigma[d]) < 0 && neg < 0) neg = static_cast<int>(d);
    }
    if (pos < 0 || neg < 0) return std::nullopt;
    std::vector<Rat> y(k, Rat(1));
    if (sum > 0)
      y[neg] += (sum / -sigma[neg]);
    else
      y[pos] += (-sum / sigma[pos]);
    return y;
  }
  for (size_t d = 0; d < k; ++d) {
    if (sgn(sigma[d]) != sgn(target)) continue;
    // y = eps*1 + t e_d with t -> target/sigma_d > 0 as eps -> 0
    Rat eps(1);
    for (int halvings = 0; halvings < 80; ++halvings, eps /= 2) {
      Rat t = (target - eps * sum) / sigma[d];
      if (t + eps > 0) {
        std::vector<Rat> y(k, eps);
        y[d] += t;
        return y;
      }
    }
  }
  return std::nullopt;
}

SymMat<Rat> embed_diagonal(int n, const std::vector<int>& active, const std::vector<Rat>& y) {
  SymMat<Rat> out(n);
  for (size_t k = 0; k < active.size(); ++k) out.set(active[k], active[k], y[k]);
  return out;
}

}  // namespace

MinimalCone minimal_cone(const ExactInstance& inst, DualKind which) {
  inst.validate();
  MinimalCone mc;
  mc.face = AxisFace{inst.n, {}};

  if (which == DualKind::DualD && inst.meta.dual_point) {
    // a known strictly feasible point pins the minimal cone to the full cone
    const auto& y = *inst.meta.dual_point;
    bool residual_zero = true;
    for (const Rat& r : dual_residual(inst, y))
      if (r != 0) residual_zero = false;
    if (residual_zero && psd_status(y).cls == PsdClass::PositiveDefinite) {
      mc.witness = y;
      mc.witness_verified = true;
      mc.sequence.strict = true;
      return mc;
    }
  }

  std::vector<const SymMat<Rat>*> mats;
  std::vector<Rat> rhs;
  std::vector<int> order;
  for (const auto& ai : inst.a) mats.push_back(&ai);
  if (which == DualKind::HomogeneousHD) {
    mats.push_back(&inst.b);
    rhs.assign(mats.size(), Rat(0));
    order.push_back(inst.m);  // B first
    for (int i = 0; i < inst.m; ++i) order.push_back(i);
  } else {
    rhs = inst.c;
    order.resize(inst.m);
    std::iota(order.begin(), order.end(), 0);
  }

  ElimOutcome out = run_elimination(mats, rhs, inst.n, order);
  if (out.infeasible)
    throw std::runtime_error("minimal_cone: the feasible set is empty (" + out.note + ")");
  if (out.stalled_nondiagonal)
    throw std::runtime_error("unstructured: elimination requires a non-diagonal facial reduction step");

  mc.steps = out.steps;
  std::vector<int> zero;
  for (const auto& st : out.steps) zero.insert(zero.end(), st.zeroed.begin(), st.zeroed.end());
  std::sort(zero.begin(), zero.end());
  mc.face = AxisFace{inst.n, zero};
  for (const auto& st : out.steps) {
    const SymMat<Rat>& m = *mats[st.constraint];
    mc.sequence.matrices.push_back(st.negated ? -m : m);
    std::vector<Rat> coeff(mats.size(), Rat(0));
    coeff[st.constraint] = st.negated ? Rat(-1) : Rat(1);
    mc.sequence.span_coefficients.push_back(coeff);
  }
  mc.sequence.strict = true;
  mc.sequence.regularized_blocks = is_regularized(mc.sequence.matrices);

  // witness: strictly positive diagonal on the terminal face
  const std::vector<int> active = mc.face.active();
  std::vector<int> remaining_with_diag;
  for (int j : out.remaining) {
    SymMat<Rat> r = mats[j]->restrict_to(active);
    bool has_diag = false;
    for (size_t k = 0; k < active.size(); ++k)
      if (r(static_cast<int>(k), static_cast<int>(k)) != 0) has_diag = true;
    if (has_diag || rhs[j] != 0) remaining_with_diag.push_back(j);
  }
  std::vector<Rat> y;
  if (remaining_with_diag.empty()) {
    y.assign(active.size(), Rat(1));
  } else if (remaining_with_diag.size() == 1) {
    const int j = remaining_with_diag.front();
    auto sol = positive_diag_solution(mats[j]->restrict_to(active).diagonal(), rhs[j]);
    if (!sol)
      throw std::runtime_error("minimal_cone: no strictly positive witness; the feasible set appears " +
                               std::string(rhs[j] == 0 ? "degenerate" : "empty (dual infeasible)"));
    y = *sol;
  } else {
    throw std::runtime_error("unstructured: several constraints remain on the terminal face");
  }
  mc.witness = embed_diagonal(inst.n, active, y);
  mc.witness_verified = true;
  for (size_t j = 0; j < mats.size(); ++j)
    if (inner(*mats[j], mc.witness) != rhs[j]) mc.witness_verified = false;
  if (rank_psd(mc.witness) != mc.face.rank()) mc.witness_verified = false;
  if (!mc.witness_verified) throw std::logic_error("minimal_cone: witness verification failed");
  return mc;
}

SingularityReport singularity_degree(const ExactInstance& inst, DualKind which) {
  SingularityReport rep;
  MinimalCone mc = minimal_cone(inst, which);
  const int len = static_cast<int>(mc.sequence.matrices.size());
  rep.upper_bound = len;
  rep.regularized_blocks = mc.sequence.regularized_blocks;
  rep.cone = std::move(mc);

  const bool clean = !inst.meta.mess.has_value();
  const Family fam = clean ? inst.meta.family : Family::Unknown;
  if (which == DualKind::DualD) {
    if (fam == Family::Small || fam == Family::SingleFinite || fam == Family::Double) {
      rep.value = inst.m - 1;
      rep.basis = "family";
    } else if (fam == Family::Example51) {
      rep.value = 0;
      rep.basis = "strict-feasibility";
    }
  } else {
    if (fam == Family::Double) {
      rep.value = inst.m;
      rep.basis = "family";
    } else if (fam == Family::Example51) {
      rep.value = 3;
      rep.basis = "sampled-uniqueness";
    }
  }
  if (!rep.value) {
    if (len == 0) {
      rep.value = 0;
      rep.basis = "strict-feasibility";
    } else if (len == 1) {
      rep.value = 1;  // the terminal face is proper, so at least one step is needed
      rep.basis = "proper-face";
    } else {
      rep.basis = "upper-only";
    }
  }
  if (rep.value && *rep.value != len && rep.basis == "family")
    throw std::logic_error("singularity_degree: verified sequence length disagrees with the family value");
  return rep;
}

// ---------------------------------------------------------------------------
// Claim checks: sampled falsification of the canonical face chains

namespace {

struct ClaimSpec {
  std::vector<SymMat<Rat>> span;
  std::vector<std::vector<int>> step_zeroed;  // 0-based canonical zero set per step
  std::vector<int> generator;                 // span index giving the canonical step
  std::vector<int> generator_sign;
  std::vector<std::vector<int>> forbidden;    // span coords that kill psd-ness, per depth
};

ClaimSpec claim_spec_for(const ExactInstance& inst, DualKind which) {
  const Family fam = inst.meta.family;
  const int m = inst.m;
  ClaimSpec spec;
  auto range = [](int lo, int hi) {
    std::vector<int> v;
    for (int k = lo; k < hi; ++k) v.push_back(k);
    return v;
  };
  if (which == DualKind::DualD &&
      (fam == Family::Small || fam == Family::SingleFinite || fam == Family::SingleInfinite)) {
    spec.span = inst.a;
    for (int i = 0; i < m - 1; ++i) {
      spec.step_zeroed.push_back({i});
      spec.generator.push_back(i);
      spec.generator_sign.push_back(1);
      spec.forbidden.push_back(range(i + 1, m));
    }
  } else if (which == DualKind::DualD && fam == Family::Double) {
    spec.span = inst.a;
    for (int i = 0; i < m - 1; ++i) {
      spec.step_zeroed.push_back({i, m + i});
      spec.generator.push_back(i);
      spec.generator_sign.push_back(1);
      spec.forbidden.push_back(range(i + 1, m));
    }
  } else if (which == DualKind::HomogeneousHD && fam == Family::Double) {
    spec.span.push_back(inst.b);
    for (int i = 1; i < m; ++i) spec.span.push_back(inst.a[i]);
    spec.step_zeroed.push_back(range(0, m + 1));
    spec.generator.push_back(0);
    spec.generator_sign.push_back(1);
    for (int i = 2; i <= m; ++i) {
      spec.step_zeroed.push_back({m + i - 1});
      spec.generator.push_back(i - 1);
      spec.generator_sign.push_back(i == m ? -1 : 1);
    }
    for (int d = 0; d < m; ++d) spec.forbidden.push_back(range(d + 1, m));
  } else if (which == DualKind::HomogeneousHD && fam == Family::Example51) {
    spec.span.push_back(inst.b);
    spec.span.push_back(inst.a[0]);
    spec.span.push_back(inst.a[1]);
    for (int i = 0; i < 3; ++i) {
      spec.step_zeroed.push_back({i});
      spec.generator.push_back(i);
      spec.generator_sign.push_back(1);
      spec.forbidden.push_back(range(i + 1, 3));
    }
  } else {
    throw std::invalid_argument("claim_check: no face-chain claim recorded for this family/dual pair");
  }
  return spec;
}

}  // namespace

ClaimCheckReport claim_check(const ExactInstance& inst, DualKind which, int trials, uint64_t rng_seed) {
  inst.validate();
  const ClaimSpec spec = claim_spec_for(inst, which);
  const int n = inst.n;
  const int depths = static_cast<int>(spec.step_zeroed.size());
  const int k = static_cast<int>(spec.span.size());
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<int> coeff(-5, 5);
  std::uniform_int_distribution<int> pos_coeff(1, 5);

  ClaimCheckReport rep;
  rep.detail = "family=" + to_string(inst.meta.family) +
               " which=" + (which == DualKind::DualD ? std::string("D") : std::string("HD"));
  const int per_depth = std::max(1, trials / std::max(1, depths));

  std::vector<int> zero;
  for (int depth = 0; depth < depths; ++depth) {
    AxisFace face{n, zero};
    const auto active = face.active();
    const auto& forbidden = spec.forbidden[depth];

    for (int t = 0; t < per_depth; ++t) {
      std::vector<Rat> lam(k);
      bool nonzero = false;
      for (int j = 0; j < k; ++j) {
        lam[j] = rat(coeff(rng));
        if (lam[j] != 0) nonzero = true;
      }
      if (!forbidden.empty()) {
        const int f = forbidden[std::uniform_int_distribution<int>(
            0, static_cast<int>(forbidden.size()) - 1)(rng)];
        if (lam[f] == 0) lam[f] = rat(pos_coeff(rng) * (coeff(rng) >= 0 ? 1 : -1));
        nonzero = true;
      }
      if (!nonzero) {
        --t;
        continue;
      }
      SymMat<Rat> combo(n);
      {
        Mat<Rat> acc(n, n);
        for (int j = 0; j < k; ++j) {
          if (lam[j] == 0) continue;
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) acc(r, c) += lam[j] * spec.span[j](r, c);
        }
        combo = SymMat<Rat>::from_matrix(acc);
      }
      SymMat<Rat> rstr = combo.restrict_to(active);
      const PsdStatus st = psd_status(rstr);
      if (!forbidden.empty()) {
        if (st.cls != PsdClass::Indefinite) {
          rep.detail += "; counterexample at depth " + std::to_string(depth) +
                        ": a combination with forbidden coordinates is " + to_string(st.cls);
          rep.trials = rep.indefinite_checks + rep.step_checks;
          return rep;
        }
        ++rep.indefinite_checks;
      } else if (st.cls != PsdClass::Zero && st.cls != PsdClass::Indefinite) {
        SymMat<Rat> r2 = st.is_psd() ? rstr : -rstr;
        auto zeroed = positive_diag_support(r2, active);
        if (!r2.is_diagonal() || zeroed != spec.step_zeroed[depth]) {
          rep.detail += "; counterexample at depth " + std::to_string(depth) +
                        ": accepted step does not reproduce the canonical face";
          rep.trials = rep.indefinite_checks + rep.step_checks;
          return rep;
        }
        ++rep.indefinite_checks;
      } else {
        ++rep.indefinite_checks;  // zero or indefinite restriction: vacuous sample
      }
    }

    // canonical step re-verification
    for (int t = 0; t < 10; ++t) {
      std::vector<Rat> lam(k, Rat(0));
      for (int j = 0; j < k; ++j) {
        const bool is_forbidden = std::find(forbidden.begin(), forbidden.end(), j) != forbidden.end();
        if (!is_forbidden && j != spec.generator[depth]) lam[j] = rat(coeff(rng));
      }
      lam[spec.generator[depth]] = rat(spec.generator_sign[depth] * pos_coeff(rng));
      SymMat<Rat> combo(n);
      {
        Mat<Rat> acc(n, n);
        for (int j = 0; j < k; ++j) {
          if (lam[j] == 0) continue;
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) acc(r, c) += lam[j] * spec.span[j](r, c);
        }
        combo = SymMat<Rat>::from_matrix(acc);
      }
      SymMat<Rat> rstr = combo.restrict_to(active);
      auto zeroed = positive_diag_support(rstr, active);
      if (!psd_status(rstr).is_psd() || !rstr.is_diagonal() || zeroed != spec.step_zeroed[depth]) {
        rep.detail += "; canonical step failed at depth " + std::to_string(depth);
        rep.trials = rep.indefinite_checks + rep.step_checks;
        return rep;
      }
      ++rep.step_checks;
    }

    zero.insert(zero.end(), spec.step_zeroed[depth].begin(), spec.step_zeroed[depth].end());
    std::sort(zero.begin(), zero.end());
  }
  rep.trials = rep.indefinite_checks + rep.step_checks;
  rep.passed = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Bounds d(D) <= m, d(HD) <= m+1 and the extremal consequences

BoundsReport bounds_check(const ExactInstance& inst) {
  BoundsReport rep;
  rep.passed = true;
  auto check = [&rep](bool ok, const std::string& what) {
    rep.checks.push_back(std::string(ok ? "ok: " : "FAIL: ") + what);
    if (!ok) rep.passed = false;
  };

  try {
    MinimalCone mc = minimal_cone(inst, DualKind::DualD);
    const int len = static_cast<int>(mc.sequence.matrices.size());
    rep.d_upper_dual = len;
    check(len <= inst.m, "d(D) <= m  (" + std::to_string(len) + " <= " + std::to_string(inst.m) + ")");
  } catch (const std::exception& e) {
    rep.checks.push_back(std::string("skipped (D): ") + e.what());
  }

  try {
    MinimalCone mc = minimal_cone(inst, DualKind::HomogeneousHD);
    const int len = static_cast<int>(mc.sequence.matrices.size());
    rep.d_upper_hd = len;
    check(len <= inst.m + 1,
          "d(HD) <= m+1  (" + std::to_string(len) + " <= " + std::to_string(inst.m + 1) + ")");
    if (len == inst.m + 1) {
      rep.hd_extremal = true;
      // extremal case: x = 0 is the only feasible point and (D) is strictly
      // feasible, so both optimal values are 0
      GapCertificate cert = certify_gap(inst);
      bool x_forced_zero = static_cast<int>(cert.primal_equations.size()) == inst.m;
      for (const auto& row : cert.primal_equations)
        if (row.rhs != 0) x_forced_zero = false;
      check(x_forced_zero, "d(HD) = m+1: derived equations force x = 0");
      check(cert.primal_value && *cert.primal_value == ExtendedRat(Rat(0)),
            "d(HD) = m+1: val(P) = 0 certified");
      bool strict_dual = false;
      if (inst.meta.dual_point) {
        bool resid_zero = true;
        for (const Rat& r : dual_residual(inst, *inst.meta.dual_point))
          if (r != 0) resid_zero = false;
        strict_dual = resid_zero && psd_status(*inst.meta.dual_point).cls == PsdClass::PositiveDefinite;
      }
      if (!strict_dual) {
        // numeric fallback: project to the affine set and check a pd point
        ProbeResult pr = weak_infeasibility_probe(inst, 2000);
        strict_dual = pr.final_distance < 1e-9;
      }
      check(strict_dual, "d(HD) = m+1: (D) strictly feasible, hence val(D) = val(P) = 0");
    }
  } catch (const std::exception& e) {
    rep.checks.push_back(std::string("skipped (HD): ") + e.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Alternating-projection probe

namespace {

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& y) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (y + y.transpose()));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

ProbeResult weak_infeasibility_probe(const ExactInstance& inst, int max_iters, const Tolerances& tol) {
  (void)tol;
  inst.validate();
  const int n = inst.n, m = inst.m;
  std::vector<Eigen::MatrixXd> a(m);
  for (int i = 0; i < m; ++i) a[i] = to_eigen(sym_to_float(inst.a[i]).matrix());
  Eigen::VectorXd c(m);
  for (int i = 0; i < m; ++i) c(i) = to_double(inst.c[i]);

  Eigen::MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) gram(i, j) = gram(j, i) = (a[i].array() * a[j].array()).sum();
  Eigen::FullPivLU<Eigen::MatrixXd> gram_lu(gram);

  auto project_affine = [&](const Eigen::MatrixXd& y) {
    Eigen::VectorXd resid(m);
    for (int i = 0; i < m; ++i) resid(i) = (a[i].array() * y.array()).sum() - c(i);
    Eigen::VectorXd w = gram_lu.solve(resid);
    Eigen::MatrixXd out = y;
    for (int i = 0; i < m; ++i) out -= w(i) * a[i];
    return out;
  };
  // projection onto the parallel linear subspace {D : A_i . D = 0}
  auto project_affine0 = [&](const Eigen::MatrixXd& y) {
    Eigen::VectorXd resid(m);
    for (int i = 0; i < m; ++i) resid(i) = (a[i].array() * y.array()).sum();
    Eigen::VectorXd w = gram_lu.solve(resid);
    Eigen::MatrixXd out = y;
    for (int i = 0; i < m; ++i) out -= w(i) * a[i];
    return out;
  };
  auto cone_distance = [&](const Eigen::MatrixXd& y) { return (y - psd_clip(y)).norm(); };

  // A psd recession direction of the affine set, when one exists, is where
  // weakly infeasible iterates must escape; find the best one by subgradient
  // ascent of lambda_min over the unit sphere of the parallel subspace.
  // Weakly infeasible iterates escape along a psd direction of the parallel
  // subspace {D : A_i . D = 0}. On structured instances the elimination
  // machinery produces that direction exactly; otherwise a renormalized
  // projection iteration refines a heuristic one as the probe runs.
  std::optional<Eigen::MatrixXd> exact_ray;
  {
    std::vector<const SymMat<Rat>*> mats;
    for (const auto& ai : inst.a) mats.push_back(&ai);
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    ElimOutcome out = run_elimination(mats, std::vector<Rat>(m, Rat(0)), n, order);
    if (!out.infeasible && !out.stalled_nondiagonal && !out.active.empty()) {
      AxisFace face{n, {}};
      for (const auto& st : out.steps) face.zero.insert(face.zero.end(), st.zeroed.begin(), st.zeroed.end());
      std::sort(face.zero.begin(), face.zero.end());
      const std::vector<int> active = face.active();
      std::vector<int> with_diag;
      for (int j : out.remaining) {
        SymMat<Rat> r = inst.a[j].restrict_to(active);
        for (size_t k = 0; k < active.size(); ++k)
          if (r(static_cast<int>(k), static_cast<int>(k)) != 0) {
            with_diag.push_back(j);
            break;
          }
      }
      std::optional<std::vector<Rat>> diag;
      if (with_diag.empty())
        diag = std::vector<Rat>(active.size(), Rat(1));
      else if (with_diag.size() == 1)
        diag = positive_diag_solution(inst.a[with_diag[0]].restrict_to(active).diagonal(), Rat(0));
      if (diag) {
        SymMat<Rat> witness = embed_diagonal(n, active, *diag);
        bool ok = true;
        for (const auto& ai : inst.a)
          if (inner(ai, witness) != 0) ok = false;
        if (ok) {
          Eigen::MatrixXd ray = to_eigen(sym_to_float(witness).matrix());
          exact_ray = ray / ray.norm();
        }
      }
    }
  }
  Eigen::MatrixXd heuristic_dir = project_affine0(Eigen::MatrixXd::Identity(n, n));
  bool heuristic_alive = heuristic_dir.norm() > 1e-10;
  if (heuristic_alive) heuristic_dir /= heuristic_dir.norm();
  auto refine_heuristic = [&](int rounds) {
    for (int k = 0; heuristic_alive && k < rounds; ++k) {
      heuristic_dir = project_affine0(psd_clip(heuristic_dir));
      const double norm = heuristic_dir.norm();
      if (norm < 1e-10) {
        heuristic_alive = false;
        return;
      }
      heuristic_dir /= norm;
    }
  };
  refine_heuristic(200);

  ProbeResult res;
  Eigen::MatrixXd y = project_affine(Eigen::MatrixXd::Zero(n, n));
  // eigenvalue noise grows like eps * |Y|, so iterates are kept below a norm
  // cap to keep computed distances trustworthy down to ~1e-8
  const double norm_cap = 1e8 * std::max(1.0, y.norm());
  for (int t = 0; t < max_iters; ++t) {
    const double d = cone_distance(y);
    res.distances.push_back(d);
    res.iterations = t + 1;
    if (d < 1e-13) break;
    Eigen::MatrixXd ynew = project_affine(psd_clip(y));
    Eigen::MatrixXd best = ynew;
    double bestd = cone_distance(ynew);
    // one-step drift extension (distance is convex along affine lines)
    {
      Eigen::MatrixXd dir = ynew - y;
      for (double kappa = 2.0; kappa <= 1e15; kappa *= 2.0) {
        Eigen::MatrixXd cand = y + kappa * dir;
        if (cand.norm() > norm_cap) break;
        const double cd = cone_distance(cand);
        if (cd < bestd * (1.0 - 1e-12)) {
          best = cand;
          bestd = cd;
        } else {
          break;
        }
      }
    }
    // jump along the recession ray, then repair the remaining coordinates
    // with two plain alternating-projection rounds
    auto jump = [&](const Eigen::MatrixXd& ray) {
      const double base = std::max(1.0, y.norm());
      for (double step = base; step <= 1e16 * base; step *= 2.0) {
        Eigen::MatrixXd cand = ynew + step * ray;
        if (cand.norm() > norm_cap) break;
        cand = project_affine(psd_clip(cand));
        cand = project_affine(psd_clip(cand));
        const double cd = cone_distance(cand);
        if (cd < bestd * (1.0 - 1e-12)) {
          best = cand;
          bestd = cd;
        } else if (cd > 2.0 * bestd) {
          break;
        }
      }
    };
    if (exact_ray) {
      jump(*exact_ray);
    } else if (heuristic_alive) {
      refine_heuristic(20);  // keeps sharpening the ray as the probe runs
      jump(heuristic_dir);
    }
    if (bestd <= d) y = best;  // monotone safeguard
  }
  res.final_distance = res.distances.empty() ? 0.0 : res.distances.back();
  return res;
}

}  // namespace gapforge
