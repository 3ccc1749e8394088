#include "kahred/jet.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "kahred/errors.hpp"

namespace kahred {

int degree(const MultiIndex& m) {
  int d = 0;
  for (int e : m) d += e;
  return d;
}

double factorial(const MultiIndex& m) {
  double f = 1.0;
  for (int e : m)
    for (int k = 2; k <= e; ++k) f *= k;
  return f;
}

namespace {

void monomials_of_degree(int nvars, int d, int var, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (var == nvars - 1) {
    cur[var] = d;
    out.push_back(cur);
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[var] = e;
    monomials_of_degree(nvars, d - e, var + 1, cur, out);
  }
  cur[var] = 0;
}

int encode(const MultiIndex& m, int base) {
  int code = 0;
  for (int e : m) code = code * base + e;
  return code;
}

std::unique_ptr<JetLayout> build_layout(int nvars, int order) {
  auto L = std::make_unique<JetLayout>();
  L->nvars = nvars;
  L->order = order;
  if (nvars == 0) {
    L->monomials.push_back({});
  } else {
    MultiIndex cur(nvars, 0);
    for (int d = 0; d <= order; ++d) {
      L->degree_begin.push_back(static_cast<int>(L->monomials.size()));
      monomials_of_degree(nvars, d, 0, cur, L->monomials);
    }
  }
  if (nvars == 0) L->degree_begin = {0};
  L->degree_begin.push_back(static_cast<int>(L->monomials.size()));

  const int base = order + 1;
  std::size_t table = 1;
  for (int v = 0; v < nvars; ++v) table *= static_cast<std::size_t>(base);
  L->lookup.assign(table, -1);
  for (std::size_t i = 0; i < L->monomials.size(); ++i)
    L->lookup[static_cast<std::size_t>(encode(L->monomials[i], base))] = static_cast<int>(i);

  const int n = static_cast<int>(L->monomials.size());
  std::vector<int> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = degree(L->monomials[i]);
  MultiIndex sum(nvars);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (deg[i] + deg[j] > order) continue;
      for (int v = 0; v < nvars; ++v) sum[v] = L->monomials[i][v] + L->monomials[j][v];
      L->products.push_back({i, j, L->lookup[static_cast<std::size_t>(encode(sum, base))]});
    }
  }

  L->derivative.resize(nvars);
  if (order > 0) {
    const int lower_base = order;
    for (int v = 0; v < nvars; ++v) {
      for (int i = 0; i < n; ++i) {
        const MultiIndex& m = L->monomials[i];
        if (m[v] == 0) continue;
        MultiIndex r = m;
        r[v] -= 1;
        // index in the (nvars, order - 1) layout, which shares graded-lex ordering
        // but uses a smaller encoding base; resolved lazily below.
        L->derivative[v].push_back({i, encode(r, lower_base), static_cast<double>(m[v])});
      }
    }
  }
  return L;
}

struct LayoutRegistry {
  std::array<std::array<std::once_flag, kMaxJetOrder + 1>, kMaxJetVars + 1> once;
  std::array<std::array<std::unique_ptr<JetLayout>, kMaxJetOrder + 1>, kMaxJetVars + 1> slot;
};

LayoutRegistry& registry() {
  static LayoutRegistry r;
  return r;
}

const JetLayout& layout_unchecked(int nvars, int order);

void resolve_derivative_targets(JetLayout& L) {
  if (L.order == 0) return;
  const JetLayout& lower = layout_unchecked(L.nvars, L.order - 1);
  for (auto& terms : L.derivative)
    for (auto& t : terms) t.dst = lower.lookup[static_cast<std::size_t>(t.dst)];
}

const JetLayout& layout_unchecked(int nvars, int order) {
  auto& r = registry();
  std::call_once(r.once[nvars][order], [&] {
    auto L = build_layout(nvars, order);
    resolve_derivative_targets(*L);
    r.slot[nvars][order] = std::move(L);
  });
  return *r.slot[nvars][order];
}

void require_same(const Jet& a, const Jet& b) {
  if (&a.layout() != &b.layout())
    throw ConfigError("jet layout mismatch: (" + std::to_string(a.nvars()) + "," +
                      std::to_string(a.order()) + ") vs (" + std::to_string(b.nvars()) + "," +
                      std::to_string(b.order()) + ")");
}

// sum_k taylor[k] * (x - x0)^k, Horner form.
Jet apply_series(const Jet& x, const std::array<double, kMaxJetOrder + 1>& taylor) {
  Jet delta = x;
  delta.set_value(0.0);
  const int K = x.order();
  Jet r = Jet::constant(x.nvars(), x.order(), taylor[K]);
  for (int k = K - 1; k >= 0; --k) {
    r = r * delta;
    r += taylor[k];
  }
  return r;
}

}  // namespace

int JetLayout::index(const MultiIndex& m) const {
  if (static_cast<int>(m.size()) != nvars) throw ConfigError("multi-index arity mismatch");
  int d = 0;
  for (int e : m) {
    if (e < 0) throw ConfigError("negative exponent in multi-index");
    d += e;
  }
  if (d > order) return -1;
  return lookup[static_cast<std::size_t>(encode(m, order + 1))];
}

const JetLayout& jet_layout(int nvars, int order) {
  if (nvars < 0 || nvars > kMaxJetVars)
    throw ConfigError("jet variable count out of range: " + std::to_string(nvars));
  if (order < 0 || order > kMaxJetOrder)
    throw ConfigError("jet order out of range: " + std::to_string(order));
  return layout_unchecked(nvars, order);
}

Jet::Jet(int nvars, int order) : layout_(&jet_layout(nvars, order)), c_(layout_->size(), 0.0) {}

Jet Jet::constant(int nvars, int order, double c) {
  Jet j(nvars, order);
  j.c_[0] = c;
  return j;
}

Jet Jet::variable(int nvars, int order, int var, double value) {
  if (var < 0 || var >= nvars) throw ConfigError("seed variable index out of range");
  Jet j(nvars, order);
  j.c_[0] = value;
  if (order >= 1) j.c_[static_cast<std::size_t>(1 + var)] = 1.0;
  return j;
}

double Jet::coeff(const MultiIndex& m) const {
  const int i = layout_->index(m);
  return i < 0 ? 0.0 : c_[static_cast<std::size_t>(i)];
}

double Jet::partial(const MultiIndex& m) const {
  const int i = layout_->index(m);
  if (i < 0)
    throw ConfigError("partial of degree " + std::to_string(degree(m)) + " exceeds jet order " +
                      std::to_string(order()));
  return c_[static_cast<std::size_t>(i)] * factorial(m);
}

double Jet::d(int var) const {
  if (order() < 1) throw ConfigError("first partial needs jet order >= 1");
  return c_[static_cast<std::size_t>(1 + var)];
}

double Jet::dd(int a, int b) const {
  if (order() < 2) throw ConfigError("second partial needs jet order >= 2");
  MultiIndex m(nvars(), 0);
  m[a] += 1;
  m[b] += 1;
  return partial(m);
}

Jet Jet::derivative(int var) const {
  if (order() < 1) throw ConfigError("cannot differentiate an order-0 jet");
  Jet r(nvars(), order() - 1);
  for (const auto& t : layout_->derivative[static_cast<std::size_t>(var)])
    r.c_[static_cast<std::size_t>(t.dst)] += t.mul * c_[static_cast<std::size_t>(t.src)];
  return r;
}

Jet Jet::truncated(int new_order) const {
  if (new_order > order()) throw ConfigError("cannot raise jet order by truncation");
  Jet r(nvars(), new_order);
  std::copy_n(c_.begin(), r.c_.size(), r.c_.begin());
  return r;
}

Jet Jet::restricted(int keep) const {
  if (keep > nvars()) throw ConfigError("cannot restrict to more variables");
  Jet r(keep, order());
  const auto& mons = layout_->monomials;
  for (std::size_t i = 0; i < mons.size(); ++i) {
    bool drop = false;
    for (int v = keep; v < nvars(); ++v) drop = drop || mons[i][v] != 0;
    if (drop) continue;
    MultiIndex m(mons[i].begin(), mons[i].begin() + keep);
    r.c_[static_cast<std::size_t>(r.layout_->index(m))] = c_[i];
  }
  return r;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& v : r.c_) v = -v;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  *this = *this * o;
  return *this;
}

Jet& Jet::operator/=(const Jet& o) {
  *this = *this / o;
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}

Jet& Jet::operator-=(double s) {
  c_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Jet& Jet::operator/=(double s) {
  for (double& v : c_) v /= s;
  return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }

Jet operator*(const Jet& a, const Jet& b) {
  require_same(a, b);
  Jet r(a.nvars(), a.order());
  auto out = r.coeffs();
  const auto x = a.coeffs();
  const auto y = b.coeffs();
  for (const auto& p : a.layout().products)
    out[static_cast<std::size_t>(p.out)] +=
        x[static_cast<std::size_t>(p.lhs)] * y[static_cast<std::size_t>(p.rhs)];
  return r;
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a -= s; }
Jet operator-(double s, const Jet& a) { return (-a) + s; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }
Jet operator/(Jet a, double s) { return a /= s; }
Jet operator/(double s, const Jet& a) { return s * reciprocal(a); }

Jet reciprocal(const Jet& x) {
  const double x0 = x.value();
  if (x0 == 0.0) throw NumericDomainError("division by a jet with zero constant term", x0);
  std::array<double, kMaxJetOrder + 1> t{};
  double p = 1.0 / x0;
  for (int k = 0; k <= x.order(); ++k) {
    t[k] = (k % 2 == 0 ? 1.0 : -1.0) * p;
    p /= x0;
  }
  return apply_series(x, t);
}

Jet square(const Jet& x) { return x * x; }

Jet exp(const Jet& x) {
  std::array<double, kMaxJetOrder + 1> t{};
  const double e = std::exp(x.value());
  double f = 1.0;
  for (int k = 0; k <= x.order(); ++k) {
    if (k > 0) f *= k;
    t[k] = e / f;
  }
  return apply_series(x, t);
}

Jet log(const Jet& x) {
  const double x0 = x.value();
  if (!(x0 > 0.0)) throw NumericDomainError("log of a jet with non-positive constant term", x0);
  std::array<double, kMaxJetOrder + 1> t{};
  t[0] = std::log(x0);
  double p = x0;
  for (int k = 1; k <= x.order(); ++k) {
    t[k] = (k % 2 == 1 ? 1.0 : -1.0) / (k * p);
    p *= x0;
  }
  return apply_series(x, t);
}

Jet pow(const Jet& x, double p) {
  const double x0 = x.value();
  if (!(x0 > 0.0)) throw NumericDomainError("pow of a jet with non-positive constant term", x0);
  std::array<double, kMaxJetOrder + 1> t{};
  double binom = 1.0;
  for (int k = 0; k <= x.order(); ++k) {
    t[k] = binom * std::pow(x0, p - k);
    binom *= (p - k) / (k + 1);
  }
  return apply_series(x, t);
}

Jet sqrt(const Jet& x) {
  if (!(x.value() > 0.0))
    throw NumericDomainError("sqrt of a jet with non-positive constant term", x.value());
  return pow(x, 0.5);
}

Jet sin(const Jet& x) {
  std::array<double, kMaxJetOrder + 1> t{};
  const double s = std::sin(x.value());
  const double c = std::cos(x.value());
  const double cyc[4] = {s, c, -s, -c};
  double f = 1.0;
  for (int k = 0; k <= x.order(); ++k) {
    if (k > 0) f *= k;
    t[k] = cyc[k % 4] / f;
  }
  return apply_series(x, t);
}

Jet cos(const Jet& x) {
  std::array<double, kMaxJetOrder + 1> t{};
  const double s = std::sin(x.value());
  const double c = std::cos(x.value());
  const double cyc[4] = {c, -s, -c, s};
  double f = 1.0;
  for (int k = 0; k <= x.order(); ++k) {
    if (k > 0) f *= k;
    t[k] = cyc[k % 4] / f;
  }
  return apply_series(x, t);
}

Jet compose(const Jet& outer, std::span<const Jet> inner, std::span<const double> base) {
  if (static_cast<int>(inner.size()) != outer.nvars() || inner.size() != base.size())
    throw ConfigError("compose: inner arity does not match outer jet");
  if (inner.empty()) throw ConfigError("compose: no inner jets");
  const int q = inner[0].nvars();
  const int K = inner[0].order();
  std::vector<std::vector<Jet>> powers(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) {
    Jet delta = inner[i];
    const double gap = delta.value() - base[i];
    if (std::abs(gap) > 1e-12 * (1.0 + std::abs(base[i])))
      throw ArgumentError("compose: inner jet is not centered at the expansion point");
    delta.set_value(0.0);
    powers[i].push_back(Jet::constant(q, K, 1.0));
    for (int e = 1; e <= std::min(K, outer.order()); ++e) powers[i].push_back(powers[i].back() * delta);
  }
  Jet r(q, K);
  const auto& mons = outer.layout().monomials;
  for (std::size_t a = 0; a < mons.size(); ++a) {
    const double c = outer[a];
    if (c == 0.0 || degree(mons[a]) > K) continue;
    Jet term = Jet::constant(q, K, c);
    for (std::size_t i = 0; i < inner.size(); ++i)
      if (mons[a][i] > 0) term = term * powers[i][static_cast<std::size_t>(mons[a][i])];
    r += term;
  }
  return r;
}

std::vector<Jet> seed_variables(std::span<const double> values, int order) {
  if (order < 1 || order > kMaxJetOrder)
    throw ConfigError("seed order must be in 1..4, got " + std::to_string(order));
  if (values.empty()) throw ConfigError("seed_variables needs at least one value");
  const int n = static_cast<int>(values.size());
  std::vector<Jet> out;
  out.reserve(values.size());
  for (int i = 0; i < n; ++i) out.push_back(Jet::variable(n, order, i, values[static_cast<std::size_t>(i)]));
  return out;
}

Jet jet_arith(const Jet& a, const Jet& b, JetOp op) {
  switch (op) {
    case JetOp::Add: return a + b;
    case JetOp::Sub: return a - b;
    case JetOp::Mul: return a * b;
    case JetOp::Div: return a / b;
    case JetOp::Exp: return exp(a);
    case JetOp::Log: return log(a);
    case JetOp::Sqrt: return sqrt(a);
    case JetOp::Pow: return pow(a, b.value());
  }
  throw ConfigError("unknown jet operation");
}

}  // namespace kahred
