#include "gapforge/generators.hpp"

#include <filesystem>
#include <random>
#include <sstream>

#include "gapforge/io.hpp"

namespace gapforge {

namespace {

SymMat<Rat> unit(int n, int i, int j) { return SymMat<Rat>::unit(n, i, j); }

SymMat<Rat> identity_block(int n, int r) {
  SymMat<Rat> b(n);
  for (int i = 0; i < r; ++i) b.set(i, i, Rat(1));
  return b;
}

}  // namespace

ExactInstance gen_small(const Rat& scale) {
  if (sgn(scale) <= 0) throw std::invalid_argument("gen_small: scale must be positive");
  ExactInstance inst = gen_single(2, scale, false);
  inst.meta.name = "gap_small";
  inst.meta.family = Family::Small;
  return inst;
}

ExactInstance gen_single(int m, const Rat& scale, bool infinite) {
  if (m < 2) throw std::invalid_argument("gen_single: m must be >= 2");
  const int n = m + 1;
  ExactInstance inst;
  inst.m = m;
  inst.n = n;
  inst.a.push_back(unit(n, 0, 0));
  for (int i = 2; i <= m; ++i) {
    SymMat<Rat> ai = unit(n, i - 1, i - 1) + unit(n, i - 2, n - 1);
    inst.a.push_back(ai);
  }
  if (infinite) inst.a[m - 1] = Rat(-1) * unit(n, m - 1, m - 1) + unit(n, m - 2, n - 1);
  inst.b = identity_block(n, m);
  inst.c.assign(m, Rat(0));
  inst.c[m - 1] = scale;
  inst.meta.family = infinite ? Family::SingleInfinite : Family::SingleFinite;
  inst.meta.name = std::string("gap_single_") + (infinite ? "inf" : "finite") + "_m" + std::to_string(m);
  inst.meta.known_gap = {ExtendedRat(Rat(0)), infinite ? ExtendedRat::infinity() : ExtendedRat(scale)};
  inst.meta.assumption11_holds = true;
  inst.validate();
  return inst;
}

ExactInstance gen_double(int m, bool positive_e2m) {
  if (m < 2) throw std::invalid_argument("gen_double: m must be >= 2");
  const int n = 2 * m + 1;
  ExactInstance inst;
  inst.m = m;
  inst.n = n;
  inst.a.push_back(unit(n, 0, 0) + unit(n, m, m));
  for (int i = 2; i <= m - 1; ++i) {
    SymMat<Rat> ai = unit(n, i - 1, i - 1) + unit(n, m + i - 1, m + i - 1) + unit(n, i - 2, n - 1) +
                     unit(n, m + i - 2, n - 1);
    inst.a.push_back(ai);
  }
  SymMat<Rat> am = unit(n, m - 1, m - 1) + (positive_e2m ? Rat(1) : Rat(-1)) * unit(n, 2 * m - 1, 2 * m - 1) +
                   unit(n, m - 2, n - 1) + unit(n, 2 * m - 2, n - 1);
  inst.a.push_back(am);
  inst.b = identity_block(n, m + 1);
  inst.c.assign(m, Rat(0));
  inst.c[m - 1] = Rat(1);
  inst.meta.family = positive_e2m ? Family::DoubleFlipped : Family::Double;
  inst.meta.name = std::string(positive_e2m ? "nogap_double_flipped" : "gap_double") + "_m" + std::to_string(m);
  inst.meta.known_gap = {ExtendedRat(Rat(0)), ExtendedRat(Rat(positive_e2m ? 0 : 1))};
  inst.meta.assumption11_holds = true;
  inst.validate();
  return inst;
}

ExactInstance gen_example51() {
  const int n = 4;
  ExactInstance inst;
  inst.m = 2;
  inst.n = n;
  SymMat<Rat> a1(n), a2(n);
  a1.set(0, 2, Rat(2));
  a1.set(0, 3, Rat(2));
  a1.set(1, 1, Rat(1));
  a2.set(1, 3, Rat(2));
  a2.set(2, 2, Rat(1));
  inst.a = {a1, a2};
  inst.b = identity_block(n, 1);
  inst.c = {Rat(13), Rat(-3)};
  inst.meta.family = Family::Example51;
  inst.meta.name = "example51";
  inst.meta.known_gap = {ExtendedRat(Rat(0)), ExtendedRat(Rat(0))};
  inst.meta.assumption11_holds = true;
  SymMat<Rat> y(n);
  y.set(0, 0, Rat(1));
  y.set(1, 1, Rat(1));
  y.set(2, 2, Rat(5));
  y.set(3, 3, Rat(25));
  y.set(0, 2, Rat(2));
  y.set(0, 3, Rat(1));
  y.set(1, 3, Rat(-2));
  inst.meta.dual_point = y;
  inst.validate();
  return inst;
}

ExactInstance generate(const FamilySpec& spec) {
  ExactInstance inst;
  switch (spec.family) {
    case Family::Small: inst = gen_small(spec.scale); break;
    case Family::SingleFinite: inst = gen_single(spec.m, spec.scale, false); break;
    case Family::SingleInfinite: inst = gen_single(spec.m, spec.scale, true); break;
    case Family::Double: inst = gen_double(spec.m, false); break;
    case Family::DoubleFlipped: inst = gen_double(spec.m, true); break;
    case Family::Example51: inst = gen_example51(); break;
    default: throw std::invalid_argument("generate: unknown family");
  }
  if (spec.mess_seed) {
    MessResult r = mess(inst, *spec.mess_seed, spec.mess_ops, spec.mess_entry_bound);
    inst = std::move(r.instance);
  }
  return inst;
}

namespace {

// Caps |T| entries so that messed instances stay certifiable in exact
// arithmetic and storable as small integers.
constexpr long kMessEntryCap = 1000;

long max_abs_entry(const Mat<Rat>& t) {
  long best = 0;
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j) {
      const Rat& v = t(i, j);
      if (!is_integer(v)) throw std::logic_error("mess transform must stay integer");
      long a = std::labs(v.get_num().get_si());
      best = std::max(best, a);
    }
  return best;
}

}  // namespace

MessResult mess(const ExactInstance& inst, uint64_t seed, int num_ops, int entry_bound) {
  inst.validate();
  if (entry_bound < 1) throw std::invalid_argument("mess: entry_bound must be >= 1");
  const int n = inst.n;
  if (num_ops < 0) num_ops = 3 * n;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_row(0, n - 1);
  std::uniform_int_distribution<int> pick_kind(0, 9);
  std::uniform_int_distribution<int> pick_mult(1, entry_bound);

  Mat<Rat> t = Mat<Rat>::identity(n);
  std::vector<std::string> log;
  for (int k = 0; k < num_ops; ++k) {
    bool applied = false;
    for (int attempt = 0; attempt < 50 && !applied; ++attempt) {
      const int kind = pick_kind(rng);
      if (kind < 7 && n >= 2) {
        int i = pick_row(rng), j = pick_row(rng);
        while (j == i) j = pick_row(rng);
        long lam = pick_mult(rng);
        if (pick_kind(rng) % 2) lam = -lam;
        Mat<Rat> cand = t;
        // column op: col_j += lam * col_i  (right-multiplication by an
        // elementary matrix keeps det(T) = +-1)
        for (int r = 0; r < n; ++r) cand(r, j) += rat(lam) * cand(r, i);
        if (max_abs_entry(cand) > kMessEntryCap) continue;
        t = cand;
        log.push_back("col" + std::to_string(j + 1) + " += " + std::to_string(lam) + "*col" + std::to_string(i + 1));
        applied = true;
      } else if (kind < 9 && n >= 2) {
        int i = pick_row(rng), j = pick_row(rng);
        while (j == i) j = pick_row(rng);
        for (int r = 0; r < n; ++r) std::swap(t(r, i), t(r, j));
        log.push_back("swap cols " + std::to_string(i + 1) + "," + std::to_string(j + 1));
        applied = true;
      } else {
        int i = pick_row(rng);
        for (int r = 0; r < n; ++r) t(r, i) = -t(r, i);
        log.push_back("flip col " + std::to_string(i + 1));
        applied = true;
      }
    }
    if (!applied) break;  // entry cap reached; T is scrambled enough
  }

  const Rat d = det(t);
  if (d != 1 && d != -1) throw std::logic_error("mess: transform is not unimodular");

  MessResult out;
  out.transform = {t, seed, num_ops, entry_bound, log};
  out.instance = inst;
  for (int k = 0; k < inst.m; ++k) out.instance.a[k] = congruence_unchecked(inst.a[k], t);
  out.instance.b = congruence_unchecked(inst.b, t);
  out.instance.meta.mess = MessLog{seed, num_ops, entry_bound, t};
  out.instance.meta.assumption11_holds = b_is_normalized(out.instance.b);
  out.instance.meta.name = inst.meta.name + "_messy";
  return out;
}

ExactInstance unmess(const ExactInstance& inst, const MessTransform& transform) {
  auto tinv = inverse(transform.t);
  if (!tinv) throw std::invalid_argument("unmess: transform not invertible");
  ExactInstance out = inst;
  for (int k = 0; k < inst.m; ++k) out.a[k] = congruence_unchecked(inst.a[k], *tinv);
  out.b = congruence_unchecked(inst.b, *tinv);
  out.meta.mess.reset();
  out.meta.assumption11_holds = b_is_normalized(out.b);
  return out;
}

ExactInstance perturb_dual(const ExactInstance& inst, const Rat& eps) {
  if (sgn(eps) < 0) throw std::invalid_argument("perturb_dual: eps must be >= 0");
  ExactInstance out = inst;
  if (eps == 0) return out;
  for (int i = 0; i < inst.m; ++i) {
    Rat tr(0);
    for (int d = 0; d < inst.n; ++d) tr += inst.a[i](d, d);
    out.c[i] = inst.c[i] - eps * tr;
  }
  out.meta.perturb_eps = eps;
  out.meta.known_gap.reset();  // values of the perturbed pair differ
  out.meta.name = inst.meta.name + "_perturbed";
  return out;
}

LibraryManifest build_library(const std::string& out_dir, bool include_double) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  LibraryManifest manifest;

  auto emit = [&](ExactInstance inst, const std::string& name, std::optional<uint64_t> mess_seed) {
    inst.meta.name = name;
    LibraryEntry e;
    e.name = name;
    e.m = inst.m;
    e.n = inst.n;
    e.mess_seed = mess_seed;
    if (inst.meta.known_gap) {
      e.primal_value = inst.meta.known_gap->first;
      e.dual_value = inst.meta.known_gap->second;
    }
    e.json_file = name + ".json";
    e.sedumi_prefix = name;
    save_instance(inst, (fs::path(out_dir) / e.json_file).string());
    export_sedumi(inst, (fs::path(out_dir) / e.sedumi_prefix).string());
    manifest.entries.push_back(e);
  };

  const Rat scale = rat(10);
  for (bool infinite : {false, true}) {
    const std::string kind = infinite ? "inf" : "finite";
    for (int m = 2; m <= 11; ++m) {
      ExactInstance clean = gen_single(m, scale, infinite);
      emit(clean, "gap_single_" + kind + "_clean_" + std::to_string(m), std::nullopt);
      const uint64_t seed = 1000 * (infinite ? 2 : 1) + static_cast<uint64_t>(m);
      MessResult messy = mess(clean, seed);
      emit(messy.instance, "gap_single_" + kind + "_messy_" + std::to_string(m), seed);
    }
  }
  if (include_double) {
    for (int m = 2; m <= 8; ++m) {
      ExactInstance clean = gen_double(m);
      emit(clean, "gap_double_clean_" + std::to_string(m), std::nullopt);
      const uint64_t seed = 3000 + static_cast<uint64_t>(m);
      MessResult messy = mess(clean, seed);
      emit(messy.instance, "gap_double_messy_" + std::to_string(m), seed);
    }
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

}  // namespace gapforge
