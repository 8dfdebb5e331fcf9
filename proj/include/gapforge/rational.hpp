#pragma once

#include <gmpxx.h>

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>

namespace gapforge {

// Exact rational scalar. mpq_class keeps values in lowest terms with a
// positive denominator once canonicalized; every constructor below
// canonicalizes, so downstream code can rely on that invariant.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rat q(num, den);
  q.canonicalize();
  return q;
}

// Parses "-3", "22/7" etc. Rejects empty strings and zero denominators.
inline Rat rat_from_string(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  Rat q;
  if (q.set_str(text, 10) != 0)
    throw std::invalid_argument("bad rational literal: '" + text + "'");
  if (q.get_den() == 0)
    throw std::invalid_argument("zero denominator in rational literal: '" + text + "'");
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rat& q) { return q.get_str(); }

inline double to_double(const Rat& q) { return q.get_d(); }

// binary64 values are dyadic rationals, so this conversion is exact.
inline Rat rat_from_double(double x) { return Rat(x); }

inline bool is_integer(const Rat& q) { return q.get_den() == 1; }

// sqrt(q) when it is rational, nullopt otherwise.
inline std::optional<Rat> rat_sqrt(const Rat& q) {
  if (sgn(q) < 0) return std::nullopt;
  const mpz_class num = q.get_num(), den = q.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
    return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
  Rat r(rn, rd);
  r.canonicalize();
  return r;
}

// A rational extended with +infinity (infinite duality gaps).
class ExtendedRat {
 public:
  ExtendedRat() = default;
  ExtendedRat(Rat v) : value_(std::move(v)) {}  // NOLINT: implicit by design
  ExtendedRat(long v) : value_(rat(v)) {}       // NOLINT

  static ExtendedRat infinity() {
    ExtendedRat e;
    e.infinite_ = true;
    return e;
  }

  bool is_infinite() const { return infinite_; }
  const Rat& finite() const {
    if (infinite_) throw std::logic_error("ExtendedRat: +inf has no finite value");
    return value_;
  }

  friend bool operator==(const ExtendedRat& a, const ExtendedRat& b) {
    if (a.infinite_ != b.infinite_) return false;
    return a.infinite_ || a.value_ == b.value_;
  }
  friend bool operator<(const ExtendedRat& a, const ExtendedRat& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator<=(const ExtendedRat& a, const ExtendedRat& b) { return a < b || a == b; }

  std::string str() const { return infinite_ ? "inf" : value_.get_str(); }

 private:
  Rat value_{0};
  bool infinite_ = false;
};

inline ExtendedRat extended_from_string(const std::string& text) {
  if (text == "inf" || text == "+inf") return ExtendedRat::infinity();
  return ExtendedRat(rat_from_string(text));
}

}  // namespace gapforge
