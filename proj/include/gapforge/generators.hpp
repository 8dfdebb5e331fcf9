#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapforge/instance.hpp"

namespace gapforge {

struct FamilySpec {
  Family family = Family::SingleFinite;
  int m = 2;
  Rat scale = Rat(1);
  std::optional<uint64_t> mess_seed;
  int mess_ops = -1;       // -1: default 3n
  int mess_entry_bound = 2;
};

// P_small: m=2, n=3, c=(0,scale); val(P)=0, val(D)=scale.
ExactInstance gen_small(const Rat& scale);

// Single-sequence family, n=m+1: A_1=E_1, A_i=E_i+E_{i-1,n};
// the infinite variant replaces A_m by -E_m+E_{m-1,n}. c = scale*e_m.
ExactInstance gen_single(int m, const Rat& scale, bool infinite);

// Double-sequence family, n=2m+1, c=e_m, gap (0,1). With
// positive_e2m the -E_{2m} term of A_m flips sign and the gap closes.
ExactInstance gen_double(int m, bool positive_e2m = false);

// The 4x4 instance with d(HD)=m+1=3: sup 13x_1 - 3x_2, together with
// its known strictly feasible dual point in meta.
ExactInstance gen_example51();

ExactInstance generate(const FamilySpec& spec);

struct MessTransform {
  Mat<Rat> t;  // integer, det = +-1
  uint64_t seed = 0;
  int num_ops = 0;
  int entry_bound = 0;
  std::vector<std::string> ops;  // generation log
};

struct MessResult {
  ExactInstance instance;
  MessTransform transform;
};

// Obscures the readable structure by an integer unimodular congruence:
// A_i <- T^T A_i T, B <- T^T B T. T is a product of num_ops random
// elementary row-additions (multipliers in [-entry_bound, entry_bound]),
// transpositions and sign flips. num_ops < 0 selects the default 3n.
MessResult mess(const ExactInstance& inst, uint64_t seed, int num_ops = -1, int entry_bound = 2);

// Exact inverse congruence by T^{-1}; restores the pre-mess entries.
ExactInstance unmess(const ExactInstance& inst, const MessTransform& transform);

// Folds the substitution Y <- Y + eps*I into the right hand side:
// c_i' = c_i - eps*trace(A_i). The perturbed dual is strictly feasible
// for the gap instances once eps > 0.
ExactInstance perturb_dual(const ExactInstance& inst, const Rat& eps);

struct LibraryEntry {
  std::string name;
  int m = 0, n = 0;
  ExtendedRat primal_value{0}, dual_value{0};
  std::optional<uint64_t> mess_seed;
  std::string json_file;
  std::string sedumi_prefix;
};

struct LibraryManifest {
  std::vector<LibraryEntry> entries;
};

// Emits the 40-instance library (single finite/infinite x clean/messy,
// m=2..11, objective scaled by 10) as JSON plus SeDuMi-style text, and a
// manifest.json. include_double adds the double-sequence family (scale 1).
LibraryManifest build_library(const std::string& out_dir, bool include_double = false);

}  // namespace gapforge
