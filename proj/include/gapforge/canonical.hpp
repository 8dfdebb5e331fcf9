#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gapforge/facial.hpp"
#include "gapforge/instance.hpp"

namespace gapforge {

struct CanonicalizeOptions {
  Tolerances tol;
  int n_angles = 4096;       // pencil grid for the objective-free search
  int subgrad_iters = 200;   // relative-interior search
  int rank_samples = 200;    // max-rank slack sampling
  uint64_t rng_seed = 20240001;
};

// The two-variable standard form: after the logged reformulations
//   A1' = diag(Lambda) (+) 0,  B = I_r (+) 0,
//   A2' = [ x  x      x     M ]
//         [ x  Sigma  0     0 ]
//         [ x  0     -I_s   0 ]
//         [ M^T 0     0     0 ],   c' = (0, c2prime),
// with Lambda > 0 diagonal of order p, M != 0 and c2prime > 0. In this
// shape x_2 = 0 is forced, so the positive gap is read off by inspection.
struct CanonicalForm {
  int p = 0, r = 0, s = 0;
  std::vector<Rat> lambda;
  std::vector<Rat> sigma;
  Mat<Rat> m_block;  // p x (n-r-s)
  Rat c2prime;
  std::vector<ReformOp> transform_log;
  bool exact_backend = false;
  double residual = 0.0;  // largest magnitude left in blocks that must vanish
};

enum class NoGapReason {
  DualStrictlyFeasible,
  PrimalStrictlyFeasible,
  SIndefinite,          // trailing block of A2' indefinite: dual value 0
  WNonzeroGapZero,      // W != 0: dual values arbitrarily close to 0
  MWZeroLpEquality,     // M = W = 0: the problem reduces to an LP
  ObjectiveZero,        // c = 0 up to row operations
  NegativeC2WithSlack,  // s > 0 and c2' < 0: explicit dual point of value 0
  PencilWitnessNotFound
};

std::string to_string(NoGapReason r);

struct NoGapVerdict {
  NoGapReason reason;
  std::string detail;
  std::optional<SymMat<Rat>> dual_witness;  // point certifying the verdict, when one exists
};

struct Inconclusive {
  std::string detail;
};

using CanonicalizeOutcome = std::variant<CanonicalForm, NoGapVerdict, Inconclusive>;

// ---------------------------------------------------------------------------
// Pipeline stages

struct NormalizedInstance {
  ExactInstance inst;  // B exactly I_r (+) 0; float-derived entries are dyadic rationals
  std::vector<ReformOp> ops;
  int r = 0;
  double residual = 0.0;
  bool exact = false;
};

// Brings B to I_r (+) 0 with r the maximum slack rank: finds a relative
// interior feasible point by subgradient ascent on the smallest slack
// eigenvalue, then rescales its eigenvectors. Instances already in
// normalized shape pass through exactly.
NormalizedInstance normalize_b(const ExactInstance& inst, const CanonicalizeOptions& opts = {});

struct PencilWitness {
  std::vector<Rat> coeff;  // combination giving the psd pencil element
  SymMat<Rat> matrix;
  double min_eig = 0.0;
  bool exact = false;
};

struct WitnessNotFound {
  std::string detail;  // strongest negative eigenvalue seen, etc.
};
struct AmbiguousBoundary {
  std::string detail;
};

using WitnessOutcome = std::variant<PencilWitness, WitnessNotFound, AmbiguousBoundary>;

// Searches span{A1,A2} ∩ Y0-perp (the homogeneous flag drops the Y0
// constraint, for the objective-free system question) for a nonzero psd
// element. With an objective present the search space is a line, so the
// decision is exact whenever the instance is; the 2-dimensional search
// uses an angle grid with local refinement.
WitnessOutcome pencil_witness_search(const ExactInstance& inst, bool homogeneous, const CanonicalizeOptions& opts = {});

struct RotationResult {
  Mat<Rat> t;  // invertible; entries dyadic when computed in floats
  int s = 0;
  std::vector<Rat> sigma;  // diagonal of the leading r1 block after rotation
  Mat<Rat> w;              // r1 x (r2 - s) coupling block
  double residual = 0.0;
  bool exact = false;
};

// For G with psd trailing block of order r2 produces T with
// T^T G T = [Sigma 0 W; 0 I_s 0; W^T 0 0] and T^T (I_r1 (+) 0) T = I_r1 (+) 0.
RotationResult tail_block_rotation(const SymMat<Rat>& g, int r1, int r2, const CanonicalizeOptions& opts = {});
RotationResult tail_block_rotation(const SymMat<double>& g, int r1, int r2, const CanonicalizeOptions& opts = {});

// The full two-variable pipeline. Tries the exact track first and falls
// back to floats when a stage needs irrational eigenvectors.
CanonicalizeOutcome canonicalize(const ExactInstance& inst, const CanonicalizeOptions& opts = {});

// Gap certificate read off the canonical form: val(P) = 0 and the reduced
// dual value, which is guaranteed positive (possibly +inf).
GapCertificate canonical_certificate(const CanonicalForm& form);

struct AttainmentReport {
  bool primal_attained = false;  // at x = 0 with value 0
  ExtendedRat primal_value{0};
  bool dual_feasible = false;
  bool dual_attained = false;
  ExtendedRat dual_value{0};
  bool objective_identically_zero = false;  // c.x = 0 forced on the feasible set
  std::string detail;
};

AttainmentReport attainment_report(const ExactInstance& inst, const CanonicalizeOptions& opts = {});

struct GapInducingC {
  enum class Verdict { Yes, No, Inconclusive } verdict = Verdict::Inconclusive;
  std::vector<Rat> c;  // witness objective in the original coordinates
  std::optional<CanonicalForm> form;
  std::string detail;
};

// Objective-free variant: does some c give the system a positive gap?
GapInducingC exists_gap_inducing_c(const SymMat<Rat>& a1, const SymMat<Rat>& a2, const SymMat<Rat>& b,
                                   const CanonicalizeOptions& opts = {});

// Replays a transform log on an instance (exact arithmetic).
ExactInstance replay_transform_log(const ExactInstance& inst, const std::vector<ReformOp>& log);

}  // namespace gapforge
