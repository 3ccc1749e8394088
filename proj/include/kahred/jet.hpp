#pragma once

// Truncated multivariate Taylor arithmetic.
//
// A Jet stores the Taylor coefficients (partial derivative divided by the
// multi-index factorial) of a function of `nvars` variables, up to total
// degree `order`, around an implicit expansion point. Storage is dense in
// graded-lexicographic order, so multiplication is a plain truncated
// convolution driven by a precomputed product table.

#include <span>
#include <vector>

namespace kahred {

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetVars = 8;

/// Exponent vector, one entry per active variable.
using MultiIndex = std::vector<int>;

int degree(const MultiIndex& m);
double factorial(const MultiIndex& m);

/// Index tables shared by every jet of a given (nvars, order).
struct JetLayout {
  struct Product {
    int lhs;
    int rhs;
    int out;
  };
  struct DerivTerm {
    int src;     // index in this layout
    int dst;     // index in the (nvars, order - 1) layout
    double mul;  // exponent of the differentiated variable
  };

  int nvars = 0;
  int order = 0;
  std::vector<MultiIndex> monomials;
  std::vector<int> degree_begin;  // degree_begin[d] = first index of degree d
  std::vector<Product> products;
  std::vector<std::vector<DerivTerm>> derivative;  // per variable
  std::vector<int> lookup;                         // base-(order+1) encoding -> index

  std::size_t size() const { return monomials.size(); }
  int index(const MultiIndex& m) const;  // -1 when degree(m) > order
};

/// Shared layout for (nvars, order). Thread-safe; references stay valid.
const JetLayout& jet_layout(int nvars, int order);

class Jet {
 public:
  Jet() : Jet(0, 0) {}
  Jet(int nvars, int order);

  static Jet constant(int nvars, int order, double c);
  static Jet variable(int nvars, int order, int var, double value);

  int nvars() const { return layout_->nvars; }
  int order() const { return layout_->order; }
  const JetLayout& layout() const { return *layout_; }

  double value() const { return c_[0]; }
  void set_value(double v) { c_[0] = v; }
  double coeff(const MultiIndex& m) const;
  std::span<const double> coeffs() const { return c_; }
  std::span<double> coeffs() { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }

  /// True partial derivative: coefficient times factorial(m).
  double partial(const MultiIndex& m) const;
  /// First partial with respect to one variable (the gradient entry).
  double d(int var) const;
  /// Second partial with respect to (a, b).
  double dd(int a, int b) const;

  /// Derivative as a jet of one lower order.
  Jet derivative(int var) const;
  /// Drop every coefficient above `order`.
  Jet truncated(int order) const;
  /// Keep the first `keep` variables, evaluating the rest at zero displacement.
  Jet restricted(int keep) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);

 private:
  const JetLayout* layout_;
  std::vector<double> c_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, const Jet& a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator/(Jet a, double s);
Jet operator/(double s, const Jet& a);

Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet sqrt(const Jet& x);
Jet pow(const Jet& x, double p);
Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet reciprocal(const Jet& x);
Jet square(const Jet& x);

/// Compose a Taylor expansion with inner jets: outer(inner(y)).
/// `outer` is expanded around `base`; inner[i].value() must equal base[i].
Jet compose(const Jet& outer, std::span<const Jet> inner, std::span<const double> base);

/// Independent variables at `values`: jet i has value values[i] and unit slope in i.
std::vector<Jet> seed_variables(std::span<const double> values, int order);

/// The arithmetic table of the kernel, exposed by name for table-driven callers.
enum class JetOp { Add, Sub, Mul, Div, Exp, Log, Sqrt, Pow };
/// Binary ops use `b`; unary ops ignore it, except Pow which reads b.value() as the exponent.
Jet jet_arith(const Jet& a, const Jet& b, JetOp op);

}  // namespace kahred
