// Acceptance suite: one check per shipped guarantee, each printed as a
// single pass/fail line. Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <bit>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "gapforge/canonical.hpp"
#include "gapforge/facial.hpp"
#include "gapforge/generators.hpp"
#include "gapforge/io.hpp"

using namespace gapforge;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string label;
  std::function<void()> body;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --------------------------------------------------------------------------

void criterion1_small_exact_gap() {
  for (long scale : {1L, 10L}) {
    const auto t0 = std::chrono::steady_clock::now();
    GapCertificate cert = certify_gap(gen_small(rat(scale)));
    const double dt = seconds_since(t0);
    require(cert.conclusive(), "certificate inconclusive");
    require(*cert.primal_value == ExtendedRat(rat(0)), "primal value != 0");
    require(*cert.dual_value == ExtendedRat(rat(scale)), "dual value != scale");
    require(dt < 0.1, "runtime " + std::to_string(dt) + "s exceeds 0.1s");
  }
}

void criterion2_single_finite() {
  for (int m = 2; m <= 11; ++m) {
    const auto t0 = std::chrono::steady_clock::now();
    GapCertificate cert = certify_gap(gen_single(m, rat(10), false));
    const double dt = seconds_since(t0);
    require(cert.conclusive(), "m=" + std::to_string(m) + ": inconclusive");
    require(*cert.primal_value == ExtendedRat(rat(0)), "m=" + std::to_string(m) + ": primal != 0");
    require(*cert.dual_value == ExtendedRat(rat(10)), "m=" + std::to_string(m) + ": dual != 10");
    require(static_cast<int>(cert.elimination_trace.size()) == m - 1,
            "m=" + std::to_string(m) + ": trace length != m-1");
    require(dt < 1.0, "m=" + std::to_string(m) + ": runtime " + std::to_string(dt) + "s exceeds 1s");
  }
}

void criterion3_single_infinite() {
  for (int m = 2; m <= 11; ++m) {
    GapCertificate cert = certify_gap(gen_single(m, rat(10), true));
    require(cert.primal_value && *cert.primal_value == ExtendedRat(rat(0)),
            "m=" + std::to_string(m) + ": primal != 0");
    require(cert.dual_value && cert.dual_value->is_infinite(), "m=" + std::to_string(m) + ": dual != +inf");
    require(cert.weakly_infeasible_dual, "m=" + std::to_string(m) + ": weak infeasibility flag unset");
  }
  for (int m = 2; m <= 6; ++m) {
    ProbeResult probe = weak_infeasibility_probe(gen_single(m, rat(10), true), 10000);
    require(probe.final_distance < 1e-6, "m=" + std::to_string(m) + ": probe distance " +
                                             std::to_string(probe.final_distance) + " >= 1e-6");
    require(probe.iterations <= 10000, "iteration budget exceeded");
  }
}

void criterion4_double_family() {
  for (int m = 2; m <= 8; ++m) {
    GapCertificate cert = certify_gap(gen_double(m));
    require(cert.conclusive(), "m=" + std::to_string(m) + ": inconclusive");
    require(*cert.primal_value == ExtendedRat(rat(0)), "m=" + std::to_string(m) + ": primal != 0");
    require(*cert.dual_value == ExtendedRat(rat(1)), "m=" + std::to_string(m) + ": dual != 1");

    GapCertificate flipped = certify_gap(gen_double(m, true));
    require(flipped.conclusive(), "m=" + std::to_string(m) + ": flipped control inconclusive");
    require(*flipped.primal_value == *flipped.dual_value,
            "m=" + std::to_string(m) + ": flipped control has unequal values");
  }
}

void criterion5_singularity_degrees() {
  for (int m = 2; m <= 11; ++m) {
    SingularityReport rep = singularity_degree(gen_single(m, rat(10), false), DualKind::DualD);
    require(rep.value && *rep.value == m - 1, "single m=" + std::to_string(m) + ": d(D) != m-1");
    require(rep.cone && rep.cone->face.rank() == 2,
            "single m=" + std::to_string(m) + ": terminal face is not 0_(m-1) (+) S^2_+");
    require(rep.regularized_blocks && *rep.regularized_blocks == std::vector<int>(m - 1, 1),
            "single m=" + std::to_string(m) + ": sequence not regularized with unit blocks");
  }
  for (int m = 2; m <= 6; ++m) {
    ClaimCheckReport claims = claim_check(gen_single(m, rat(10), false), DualKind::DualD, 1000, 500 + m);
    require(claims.passed && claims.trials >= 1000, "single m=" + std::to_string(m) + ": claim check failed");
  }
  for (int m = 2; m <= 8; ++m) {
    SingularityReport rep = singularity_degree(gen_double(m), DualKind::HomogeneousHD);
    require(rep.value && *rep.value == m, "double m=" + std::to_string(m) + ": d(HD) != m");
    require(rep.cone && rep.cone->face.rank() == 1,
            "double m=" + std::to_string(m) + ": terminal face is not 0_2m (+) S^1_+");
    ExactInstance d = gen_double(m);
    require(rep.cone->sequence.matrices.front() == d.b && rep.cone->sequence.matrices.back() == -d.a[m - 1],
            "double m=" + std::to_string(m) + ": sequence is not (B, A2, ..., -Am)");
  }
  for (int m = 2; m <= 3; ++m) {
    ClaimCheckReport claims = claim_check(gen_double(m), DualKind::HomogeneousHD, 1000, 700 + m);
    require(claims.passed && claims.trials >= 1000, "double m=" + std::to_string(m) + ": claim check failed");
  }
}

void criterion6_example51() {
  ExactInstance ex = gen_example51();
  require(ex.meta.dual_point.has_value(), "missing recorded dual point");
  for (const Rat& r : dual_residual(ex, *ex.meta.dual_point)) require(r == 0, "dual residual nonzero");
  require(psd_status(*ex.meta.dual_point).cls == PsdClass::PositiveDefinite, "dual point not pd");

  GapCertificate cert = certify_gap(ex);
  require(static_cast<int>(cert.primal_equations.size()) == ex.m, "equations do not pin x");
  for (const auto& row : cert.primal_equations) require(row.rhs == 0, "equations do not force x = 0");
  require(cert.primal_value && *cert.primal_value == ExtendedRat(rat(0)), "primal value != 0");

  BoundsReport bounds = bounds_check(ex);
  require(bounds.passed, "bounds_check failed");
  require(bounds.d_upper_hd && *bounds.d_upper_hd == 3, "d(HD) evidence != 3 = m+1");
  require(bounds.hd_extremal, "extremal d(HD) = m+1 consequences not checked");
}

void criterion7_canonicalizer() {
  // exact footnote values on the unmessed instance
  CanonicalizeOutcome clean = canonicalize(gen_small(rat(1)));
  const auto* cf = std::get_if<CanonicalForm>(&clean);
  require(cf != nullptr, "gen_small(1) did not canonicalize");
  require(cf->exact_backend, "gen_small(1) left the exact track");
  require(cf->sigma == std::vector<Rat>{rat(1)} && cf->s == 0, "footnote values Sigma=[1], s=0 not recovered");

  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    ExactInstance messy = mess(gen_small(rat(10)), seed, 8, 2).instance;
    CanonicalizeOutcome out = canonicalize(messy);
    const double dt = seconds_since(t0);
    const auto* form = std::get_if<CanonicalForm>(&out);
    require(form != nullptr, "seed " + std::to_string(seed) + ": no canonical form");
    require(form->residual <= 1e-7,
            "seed " + std::to_string(seed) + ": residual " + std::to_string(form->residual) + " > 1e-7");
    GapCertificate pref = canonical_certificate(*form);
    require(!pref.dual_value->is_infinite(), "seed " + std::to_string(seed) + ": dual value infinite");
    const double dual = to_double(pref.dual_value->finite());
    require(std::abs(dual - 10.0) <= 1e-6,
            "seed " + std::to_string(seed) + ": dual value " + std::to_string(dual) + " not within 1e-6 of 10");
    require(dt < 2.0, "seed " + std::to_string(seed) + ": runtime " + std::to_string(dt) + "s exceeds 2s");
  }
}

void criterion8_reformulation_invariance() {
  std::mt19937_64 rng(2024);
  std::vector<ExactInstance> instances = {gen_small(rat(10))};
  for (int m = 2; m <= 6; ++m) {
    instances.push_back(gen_single(m, rat(10), false));
    instances.push_back(gen_single(m, rat(10), true));
    instances.push_back(gen_double(m));
  }
  for (const ExactInstance& inst : instances) {
    GapCertificate base = certify_gap(inst);
    require(base.conclusive(), inst.meta.name + ": base certificate inconclusive");
    for (int trial = 0; trial < 10; ++trial) {
      ExactInstance cur = inst;
      // which original rows each current constraint mixes; combines only add
      // unmixed rows, so an elimination order always survives
      std::vector<uint32_t> mask(inst.m);
      for (int j = 0; j < inst.m; ++j) mask[j] = 1u << j;
      const int ops = 1 + static_cast<int>(rng() % 5);
      for (int k = 0; k < ops; ++k) {
        // value-preserving pool: swaps, scalings, row combines along
        // zero-rhs rows, permutation congruences, and B-shifts along
        // diagonal psd zero-rhs rows supported where B is positive
        switch (rng() % 5) {
          case 0: {
            int i = static_cast<int>(rng() % inst.m), j = static_cast<int>(rng() % inst.m);
            if (i == j) j = (j + 1) % inst.m;
            cur = apply_reform(cur, OpSwap{i, j});
            std::swap(mask[i], mask[j]);
            break;
          }
          case 1: {
            int i = static_cast<int>(rng() % inst.m);
            Rat lam = rat(1 + static_cast<long>(rng() % 3));
            if (rng() % 2) lam = -lam;
            cur = apply_reform(cur, OpCombine{i, lam, (i + 1) % inst.m, rat(0)});
            break;
          }
          case 2: {
            // the families eliminate their rows in index order, so a row may
            // absorb only rows whose highest original index lies strictly
            // below its own: every chain position keeps an eliminator
            auto top = [](uint32_t m) { return 31 - std::countl_zero(m); };
            int i = static_cast<int>(rng() % inst.m);
            std::vector<int> sources;
            for (int j = 0; j < inst.m; ++j)
              if (j != i && cur.c[j] == 0 && top(mask[j]) < top(mask[i])) sources.push_back(j);
            if (sources.empty()) break;
            const int j = sources[rng() % sources.size()];
            Rat lam = rat(1 + static_cast<long>(rng() % 2));
            Rat mu = rat(static_cast<long>(rng() % 5) - 2);
            cur = apply_reform(cur, OpCombine{i, lam, j, mu});
            mask[i] |= mask[j];
            break;
          }
          case 3: {
            // permutation congruence: relabels coordinates, keeps structure
            Mat<Rat> t(inst.n, inst.n);
            std::vector<int> perm(inst.n);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (int r = 0; r < inst.n; ++r) t(perm[r], r) = 1;
            cur = apply_reform(cur, OpCongruence{t});
            break;
          }
          default: {
            // B += lambda * A_j needs c_j = 0 and a diagonal psd A_j living
            // inside the positive block of B, so val(P), val(D) and the
            // feasibility of x = 0 are all untouched
            std::vector<int> eligible;
            for (int j = 0; j < inst.m; ++j) {
              if (cur.c[j] != 0 || !cur.a[j].is_diagonal()) continue;
              if (!psd_status(cur.a[j]).is_psd()) continue;
              bool inside = true;
              for (int d = 0; d < inst.n; ++d)
                if (cur.a[j](d, d) != 0 && cur.b(d, d) == 0) inside = false;
              if (inside) eligible.push_back(j);
            }
            if (eligible.empty()) break;
            const int j = eligible[rng() % eligible.size()];
            cur = apply_reform(cur, OpAddToB{j, rat(1 + static_cast<long>(rng() % 3))});
            break;
          }
        }
      }
      GapCertificate reformed = certify_gap(cur);
      require(reformed.conclusive(), inst.meta.name + ": reformed certificate inconclusive");
      require(*reformed.primal_value == *base.primal_value, inst.meta.name + ": primal value changed");
      require(*reformed.dual_value == *base.dual_value, inst.meta.name + ": dual value changed");
    }
  }
}

void criterion9_bound_suite() {
  std::vector<ExactInstance> instances = {gen_small(rat(1)), gen_small(rat(10)), gen_example51()};
  for (int m = 2; m <= 11; ++m) {
    instances.push_back(gen_single(m, rat(10), false));
    instances.push_back(gen_single(m, rat(10), true));
    instances.push_back(mess(gen_single(m, rat(10), false), 40 + static_cast<uint64_t>(m)).instance);
  }
  for (int m = 2; m <= 8; ++m) {
    instances.push_back(gen_double(m));
    instances.push_back(gen_double(m, true));
  }
  for (const ExactInstance& inst : instances) {
    BoundsReport rep = bounds_check(inst);
    if (!rep.passed) {
      std::string detail;
      for (const auto& c : rep.checks) detail += "\n    " + c;
      throw Failure(inst.meta.name + ": bound suite failed" + detail);
    }
  }
}

void criterion10_io() {
  const fs::path dir = fs::temp_directory_path() / "gapforge_acceptance_library";
  fs::remove_all(dir);
  const auto t0 = std::chrono::steady_clock::now();
  LibraryManifest manifest = build_library(dir.string());
  const double dt = seconds_since(t0);
  require(dt < 10.0, "library build took " + std::to_string(dt) + "s (>= 10s)");
  require(manifest.entries.size() == 40, "manifest does not hold exactly 40 instances");
  for (const auto& entry : manifest.entries) {
    const std::string jpath = (dir / entry.json_file).string();
    ExactInstance inst = load_instance(jpath);
    std::ifstream in(jpath);
    std::stringstream buf;
    buf << in.rdbuf();
    require(instance_to_json(inst) + "\n" == buf.str(), entry.name + ": JSON round trip not bit-exact");

    const std::string prefix = (dir / entry.sedumi_prefix).string();
    std::ifstream a(prefix + ".A.txt");
    require(a.good(), entry.name + ": missing SeDuMi export");
    std::string line;
    int rows = 0;
    while (std::getline(a, line))
      if (!line.empty()) {
        ++rows;
        int cols = 1;
        for (char ch : line)
          if (ch == ' ') ++cols;
        require(cols == inst.n * inst.n, entry.name + ": SeDuMi row width != n^2");
      }
    require(rows == inst.m, entry.name + ": SeDuMi export must have m rows");

    ExactInstance back = import_sedumi(prefix);
    for (int i = 0; i < inst.m; ++i)
      require(back.a[i] == inst.a[i], entry.name + ": SeDuMi reimport differs in A");
    require(back.b == inst.b && back.c == inst.c, entry.name + ": SeDuMi reimport differs in B or c");
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact gap certificates for the small instance (values (0,1) and (0,10))",
       criterion1_small_exact_gap},
      {2, "single finite family m=2..11: gap (0,10) with trace length m-1", criterion2_single_finite},
      {3, "single infinite family m=2..11: gap (0,+inf), weak infeasibility, probe < 1e-6",
       criterion3_single_infinite},
      {4, "double family m=2..8: gap (0,1); sign-flipped control closes the gap", criterion4_double_family},
      {5, "singularity degrees: d(D)=m-1 (single), d(HD)=m (double), 1000-trial claim checks",
       criterion5_singularity_degrees},
      {6, "order-4 extremal instance: pd dual point, x=0 forced, d(HD)=3=m+1", criterion6_example51},
      {7, "canonicalizer: exact footnote values and 20 messed seeds within 1e-6", criterion7_canonicalizer},
      {8, "exact certificate values invariant under random reformulations", criterion8_reformulation_invariance},
      {9, "bound suite: d(D) <= m and d(HD) <= m+1 on every generated instance", criterion9_bound_suite},
      {10, "library of 40 instances in < 10s with bit-exact JSON and SeDuMi round trips", criterion10_io},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double dt = seconds_since(t0);
    if (error.empty()) {
      std::printf("[PASS] criterion %2d (%5.2fs): %s\n", c.id, dt, c.label.c_str());
    } else {
      ++failures;
      std::printf("[FAIL] criterion %2d (%5.2fs): %s\n       %s\n", c.id, dt, c.label.c_str(), error.c_str());
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
