#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gapforge/instance.hpp"

namespace gapforge {

// ---------------------------------------------------------------------------
// Faces of the psd cone: T (S^r_+ (+) 0) T^T. Axis faces (T a permutation)
// carry the zeroed index set; general faces keep the float transform.

struct AxisFace {
  int n = 0;
  std::vector<int> zero;  // sorted, 0-based

  int rank() const { return n - static_cast<int>(zero.size()); }
  std::vector<int> active() const;
  friend bool operator==(const AxisFace&, const AxisFace&) = default;
};

struct GeneralFace {
  Mat<double> t;  // columns spanning the face's range space come first
  int r = 0;
};

using Face = std::variant<AxisFace, GeneralFace>;

int face_rank(const Face& f);

// M restricted to the non-zeroed indices of an axis face. M lies in the
// face's dual cone iff the restriction is psd, and in its orthogonal
// complement iff the restriction is zero.
template <class S>
SymMat<S> face_dual_restrict(const SymMat<S>& m, const AxisFace& f) {
  return m.restrict_to(f.active());
}

// ---------------------------------------------------------------------------
// Facial reduction sequences

struct FrSequence {
  std::vector<SymMat<Rat>> matrices;
  // coefficients of each member in the span basis it was checked against
  std::vector<std::vector<Rat>> span_coefficients;
  bool strict = false;
  std::optional<std::vector<int>> regularized_blocks;
};

struct FaceChain {
  std::vector<Face> faces;  // faces[0] is the full cone
  FrSequence sequence;
  const Face& terminal() const { return faces.back(); }
};

// Checks that every member lies in span(span_basis) (exact solve) and that
// each one restricted to the current face is psd (strictly so when
// require_strict: restriction nonzero). Faces stay exact while the
// restrictions are diagonal; otherwise continuation uses float eigenvectors.
FaceChain verify_fr_sequence(const std::vector<SymMat<Rat>>& seq, const std::vector<SymMat<Rat>>& span_basis,
                             bool require_strict, const Tolerances& tol = {});

// Block sizes (r_0, r_1, ...) when the sequence matches the regularized
// template: identity block per step, zeros below and to the right.
std::optional<std::vector<int>> is_regularized(const std::vector<SymMat<Rat>>& seq);

// ---------------------------------------------------------------------------
// Structural gap certificates

struct LinearRelation {
  std::vector<Rat> coeff;  // length m
  Rat rhs;
};

struct ElimStep {
  int constraint = 0;  // 0-based; m denotes B in homogeneous mode
  std::vector<int> zeroed;
  bool negated = false;
};

struct ReducedDual {
  std::vector<Rat> sigma;  // diagonal of the terminal constraint on unit-cost indices
  int s = 0;               // count of -1 entries on zero-cost indices
  int zero_cost_pos = 0;   // count of positive entries on zero-cost indices
  Rat c2prime;
  int terminal_constraint = -1;
};

struct GapCertificate {
  std::optional<ExtendedRat> primal_value;  // nullopt: inconclusive
  std::optional<ExtendedRat> dual_value;
  std::vector<ElimStep> elimination_trace;
  std::optional<ReducedDual> reduced_dual;
  std::vector<LinearRelation> primal_equations;
  bool weakly_infeasible_dual = false;
  std::string primal_note, dual_note;

  bool conclusive() const { return primal_value && dual_value; }
};

// Exact structural certifier. Never returns a wrong value: structure it
// cannot match yields nullopt values with a note.
GapCertificate certify_gap(const ExactInstance& inst);

// Re-derives the certified values from a recorded trace; used to check
// replay determinism.
GapCertificate replay_certificate(const ExactInstance& inst, const GapCertificate& cert);

// Optimal value of  min sum y_i  s.t.  sigma.y - sum z_j = c2, y,z >= 0
// (the reduced dual with an order-s negative identity block).
ExtendedRat solve_diagonal_lp(const std::vector<Rat>& sigma, int s, const Rat& c2prime);

// General weighted form used by the terminal elimination step:
// min b.y s.t. sigma.y = c, y >= 0, with b >= 0 entrywise.
ExtendedRat diagonal_lp_value(const std::vector<Rat>& cost, const std::vector<Rat>& sigma, const Rat& c);

// ---------------------------------------------------------------------------
// Minimal cones and singularity degree

enum class DualKind { DualD, HomogeneousHD };

struct MinimalCone {
  AxisFace face;
  FrSequence sequence;
  std::vector<ElimStep> steps;
  SymMat<Rat> witness;  // feasible point of rank face.rank()
  bool witness_verified = false;
};

// Runs the structured elimination chain ((B, ...) in homogeneous mode) and
// confirms minimality with a max-rank feasible witness. Throws
// std::runtime_error("unstructured ...") when the chain stalls.
MinimalCone minimal_cone(const ExactInstance& inst, DualKind which);

struct SingularityReport {
  int upper_bound = 0;                // length of the verified sequence
  std::optional<int> value;           // established exact value
  std::string basis;                  // "family", "strict-feasibility", ...
  std::optional<MinimalCone> cone;
  std::optional<std::vector<int>> regularized_blocks;
};

SingularityReport singularity_degree(const ExactInstance& inst, DualKind which);

// ---------------------------------------------------------------------------
// Sampled falsification of the face-chain claims

struct ClaimCheckReport {
  int trials = 0;
  int indefinite_checks = 0;  // random combinations proven not psd/nsd
  int step_checks = 0;        // canonical steps re-verified
  bool passed = false;
  std::string detail;
};

ClaimCheckReport claim_check(const ExactInstance& inst, DualKind which, int trials, uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Singularity-degree bounds and the extremal-case consequences

struct BoundsReport {
  bool passed = false;
  std::optional<int> d_upper_dual;
  std::optional<int> d_upper_hd;
  bool hd_extremal = false;  // d(HD) = m+1 established and consequences checked
  std::vector<std::string> checks;
};

BoundsReport bounds_check(const ExactInstance& inst);

// ---------------------------------------------------------------------------
// Weak-infeasibility probe: alternating projections between the dual
// affine subspace and the psd cone, with monotone extrapolation along the
// drift direction. Distances are exact distances of affine-feasible
// iterates to the cone.

struct ProbeResult {
  std::vector<double> distances;
  double final_distance = 0.0;
  int iterations = 0;
};

ProbeResult weak_infeasibility_probe(const ExactInstance& inst, int max_iters, const Tolerances& tol = {});

}  // namespace gapforge
