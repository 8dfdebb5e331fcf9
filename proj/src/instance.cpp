#include "gapforge/instance.hpp"

#include <sstream>

namespace gapforge {

std::string to_string(Family f) {
  switch (f) {
    case Family::Small: return "small";
    case Family::SingleFinite: return "single_finite";
    case Family::SingleInfinite: return "single_infinite";
    case Family::Double: return "double";
    case Family::DoubleFlipped: return "double_flipped";
    case Family::Example51: return "example51";
    case Family::Unknown: return "unknown";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "small") return Family::Small;
  if (s == "single_finite") return Family::SingleFinite;
  if (s == "single_infinite") return Family::SingleInfinite;
  if (s == "double") return Family::Double;
  if (s == "double_flipped") return Family::DoubleFlipped;
  if (s == "example51") return Family::Example51;
  return Family::Unknown;
}

FloatInstance instance_to_float(const ExactInstance& inst) {
  FloatInstance f;
  f.m = inst.m;
  f.n = inst.n;
  for (const auto& ai : inst.a) f.a.push_back(sym_to_float(ai));
  f.b = sym_to_float(inst.b);
  for (const auto& ci : inst.c) f.c.push_back(to_double(ci));
  f.meta = inst.meta;
  return f;
}

std::string describe(const ReformOp& op) {
  std::ostringstream out;
  if (const auto* p = std::get_if<OpAddToB>(&op))
    out << "B += " << p->lambda.get_str() << "*A" << (p->j + 1);
  else if (const auto* p = std::get_if<OpSwap>(&op))
    out << "swap constraints " << (p->i + 1) << "," << (p->j + 1);
  else if (const auto* p = std::get_if<OpCombine>(&op))
    out << "(A" << (p->i + 1) << ",c" << (p->i + 1) << ") <- " << p->lambda.get_str() << "*(A" << (p->i + 1)
        << ",c" << (p->i + 1) << ") + " << p->mu.get_str() << "*(A" << (p->j + 1) << ",c" << (p->j + 1) << ")";
  else
    out << "congruence T^T()T";
  return out.str();
}

ExactInstance apply_reform(const ExactInstance& inst, const ReformOp& op) {
  inst.validate();
  ExactInstance out = inst;
  auto shift_known_gap = [&out](const Rat& delta) {
    if (delta == 0 || !out.meta.known_gap) return;
    auto& [p, d] = *out.meta.known_gap;
    if (!p.is_infinite()) p = ExtendedRat(p.finite() + delta);
    if (!d.is_infinite()) d = ExtendedRat(d.finite() + delta);
  };

  if (const auto* p = std::get_if<OpAddToB>(&op)) {
    if (p->j < 0 || p->j >= inst.m) throw std::invalid_argument("AddToB: index out of range");
    if (p->lambda == 0) throw std::invalid_argument("AddToB: lambda must be nonzero");
    out.b = inst.b + p->lambda * inst.a[p->j];
    shift_known_gap(p->lambda * inst.c[p->j]);
    out.meta.assumption11_holds = b_is_normalized(out.b);
  } else if (const auto* p = std::get_if<OpSwap>(&op)) {
    if (p->i == p->j) throw std::invalid_argument("Swap: indices must differ");
    if (p->i < 0 || p->j < 0 || p->i >= inst.m || p->j >= inst.m)
      throw std::invalid_argument("Swap: index out of range");
    std::swap(out.a[p->i], out.a[p->j]);
    std::swap(out.c[p->i], out.c[p->j]);
  } else if (const auto* p = std::get_if<OpCombine>(&op)) {
    if (p->i == p->j) throw std::invalid_argument("Combine: indices must differ");
    if (p->i < 0 || p->j < 0 || p->i >= inst.m || p->j >= inst.m)
      throw std::invalid_argument("Combine: index out of range");
    if (p->lambda == 0) throw std::invalid_argument("Combine: lambda must be nonzero");
    out.a[p->i] = p->lambda * inst.a[p->i] + p->mu * inst.a[p->j];
    out.c[p->i] = p->lambda * inst.c[p->i] + p->mu * inst.c[p->j];
  } else {
    const auto& t = std::get<OpCongruence>(op).t;
    if (t.rows() != inst.n) throw std::invalid_argument("Congruence: T order mismatch");
    if (det(t) == 0) throw std::invalid_argument("Congruence: singular T");
    for (int k = 0; k < inst.m; ++k) out.a[k] = congruence_unchecked(inst.a[k], t);
    out.b = congruence_unchecked(inst.b, t);
    out.meta.assumption11_holds = b_is_normalized(out.b);
  }
  out.meta.reform_history.push_back(describe(op));
  return out;
}

}  // namespace gapforge
