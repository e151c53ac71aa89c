#pragma once

// Exact rational arithmetic on 128-bit integers.  Used for the small-sample
// closed forms where results should be exact integers over integers, not
// floats.  All operations are overflow-checked and throw rather than wrap.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace phi {

class RationalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline unsigned __int128 uabs128(__int128 v) {
  return v < 0 ? ~static_cast<unsigned __int128>(v) + 1
               : static_cast<unsigned __int128>(v);
}

inline unsigned __int128 gcd128(unsigned __int128 a, unsigned __int128 b) {
  while (b != 0) {
    const unsigned __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline __int128 checked_mul(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw RationalError("rational overflow");
  return r;
}

inline __int128 checked_add(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw RationalError("rational overflow");
  return r;
}

inline std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = uabs128(v);
  std::string s;
  while (u != 0) {
    s.insert(s.begin(), char('0' + int(u % 10)));
    u /= 10;
  }
  return neg ? "-" + s : s;
}

}  // namespace detail

class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t v) : num_(v), den_(1) {}  // NOLINT: implicit by design
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    normalize();
  }

  static Rational from_int128(__int128 num, __int128 den) {
    Rational r;
    r.num_ = num;
    r.den_ = den;
    r.normalize();
    return r;
  }

  // Accepts "p", "p/q", and decimal "d.ddd" forms, optionally signed.
  static Rational parse(const std::string& text) {
    if (text.empty()) throw RationalError("empty rational literal");
    std::size_t i = 0;
    bool neg = false;
    if (text[i] == '+' || text[i] == '-') {
      neg = text[i] == '-';
      ++i;
    }
    auto digits = [&](__int128& out) {
      bool any = false;
      out = 0;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        out = detail::checked_add(detail::checked_mul(out, 10), text[i] - '0');
        any = true;
        ++i;
      }
      return any;
    };
    __int128 whole = 0;
    if (!digits(whole)) throw RationalError("bad rational literal: " + text);
    __int128 num = whole;
    __int128 den = 1;
    if (i < text.size() && text[i] == '/') {
      ++i;
      if (!digits(den) || i != text.size() || den == 0)
        throw RationalError("bad rational literal: " + text);
    } else if (i < text.size() && text[i] == '.') {
      ++i;
      const std::size_t start = i;
      __int128 frac = 0;
      digits(frac);  // a trailing dot ("2.") is a zero fraction
      if (i != text.size()) throw RationalError("bad rational literal: " + text);
      for (std::size_t k = start; k < text.size(); ++k)
        den = detail::checked_mul(den, 10);
      num = detail::checked_add(detail::checked_mul(whole, den), frac);
    } else if (i != text.size()) {
      throw RationalError("bad rational literal: " + text);
    }
    return from_int128(neg ? -num : num, den);
  }

  __int128 num() const { return num_; }
  __int128 den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  int sign() const { return num_ < 0 ? -1 : (num_ > 0 ? 1 : 0); }

  Rational operator-() const { return from_int128(-num_, den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    // cross-reduce first so the common small-denominator cases stay small
    const auto g = detail::gcd128(detail::uabs128(a.den_),
                                  detail::uabs128(b.den_));
    const __int128 bd = b.den_ / __int128(g);
    const __int128 ad = a.den_ / __int128(g);
    const __int128 n = detail::checked_add(detail::checked_mul(a.num_, bd),
                                           detail::checked_mul(b.num_, ad));
    return from_int128(n, detail::checked_mul(a.den_, bd));
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return a + (-b);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    // reduce across the diagonal before multiplying
    const auto g1 =
        detail::gcd128(detail::uabs128(a.num_), detail::uabs128(b.den_));
    const auto g2 =
        detail::gcd128(detail::uabs128(b.num_), detail::uabs128(a.den_));
    const __int128 n = detail::checked_mul(a.num_ / __int128(g1 ? g1 : 1),
                                           b.num_ / __int128(g2 ? g2 : 1));
    const __int128 d = detail::checked_mul(a.den_ / __int128(g2 ? g2 : 1),
                                           b.den_ / __int128(g1 ? g1 : 1));
    return from_int128(n, d);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw RationalError("rational division by zero");
    return a * from_int128(b.den_, b.num_);
  }

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) {
    return !(a == b);
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return detail::checked_mul(a.num_, b.den_) <
           detail::checked_mul(b.num_, a.den_);
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) {
    return !(b < a);
  }
  friend bool operator>=(const Rational& a, const Rational& b) {
    return !(a < b);
  }

  double to_double() const {
    return double(static_cast<long double>(num_) /
                  static_cast<long double>(den_));
  }

  std::string to_string() const {
    if (den_ == 1) return detail::int128_to_string(num_);
    return detail::int128_to_string(num_) + "/" + detail::int128_to_string(den_);
  }

 private:
  void normalize() {
    if (den_ == 0) throw RationalError("rational with zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    if (num_ == 0) {
      den_ = 1;
      return;
    }
    const auto g = detail::gcd128(detail::uabs128(num_), detail::uabs128(den_));
    num_ /= __int128(g);
    den_ /= __int128(g);
  }

  __int128 num_ = 0;
  __int128 den_ = 1;
};

}  // namespace phi
