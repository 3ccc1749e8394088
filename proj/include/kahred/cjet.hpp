#pragma once

// Complex values carried as a pair of real jets.

#include "kahred/jet.hpp"

namespace kahred {

struct CJet {
  Jet re;
  Jet im;

  CJet() = default;
  CJet(Jet r, Jet i) : re(std::move(r)), im(std::move(i)) {}
  static CJet real(const Jet& r) { return {r, Jet(r.nvars(), r.order())}; }

  CJet& operator+=(const CJet& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  CJet& operator-=(const CJet& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
};

inline CJet operator+(CJet a, const CJet& b) { return a += b; }
inline CJet operator-(CJet a, const CJet& b) { return a -= b; }
inline CJet operator-(const CJet& a) { return {-a.re, -a.im}; }
inline CJet operator*(const CJet& a, const CJet& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline CJet operator*(const CJet& a, const Jet& s) { return {a.re * s, a.im * s}; }
inline CJet operator*(const CJet& a, double s) { return {a.re * s, a.im * s}; }

inline CJet conj(const CJet& a) { return {a.re, -a.im}; }
inline Jet abs2(const CJet& a) { return a.re * a.re + a.im * a.im; }

inline CJet operator/(const CJet& a, const CJet& b) {
  const Jet inv = reciprocal(abs2(b));
  return (a * conj(b)) * inv;
}

/// e^{i theta}.
inline CJet expi(const Jet& theta) { return {cos(theta), sin(theta)}; }

}  // namespace kahred
