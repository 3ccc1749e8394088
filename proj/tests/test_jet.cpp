#include <chrono>
#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "kahred/cjet.hpp"
#include "kahred/errors.hpp"
#include "kahred/jet.hpp"
#include "support/fd_oracle.hpp"
#include "support/random_expr.hpp"

using namespace kahred;
using kahred::testing::fd_oracle_sweep;

namespace {

std::vector<MultiIndex> all_indices(int nvars, int order) {
  return jet_layout(nvars, order).monomials;
}

}  // namespace

TEST_CASE("seed_variables produces unit slopes") {
  const double v[] = {3.0};
  auto x = seed_variables(v, 2);
  REQUIRE(x.size() == 1);
  CHECK(x[0].coeff({0}) == 3.0);
  CHECK(x[0].coeff({1}) == 1.0);
  CHECK(x[0].coeff({2}) == 0.0);

  const double w[] = {1.0, 2.0};
  auto y = seed_variables(w, 1);
  CHECK(y[1].value() == 2.0);
  CHECK(y[1].d(1) == 1.0);
  CHECK(y[1].d(0) == 0.0);
  CHECK(y[0].partial({1, 0}) == 1.0);

  const double z[] = {2.0};
  auto s = seed_variables(z, 2);
  CHECK((s[0] * s[0]).partial({2}) == 2.0);
}

TEST_CASE("seed_variables rejects bad orders") {
  const double v[] = {1.0};
  CHECK_THROWS_AS(seed_variables(v, 0), ConfigError);
  CHECK_THROWS_AS(seed_variables(v, 5), ConfigError);
  CHECK_THROWS_AS(seed_variables(std::span<const double>{}, 2), ConfigError);
}

TEST_CASE("elementary functions") {
  const double v[] = {0.7};
  auto x = seed_variables(v, 4)[0];
  Jet id = log(exp(x));
  for (std::size_t i = 0; i < id.coeffs().size(); ++i) CHECK(std::abs(id[i] - x[i]) < 1e-14);

  const double z[] = {0.0};
  auto e = exp(seed_variables(z, 3)[0]);
  CHECK(e.coeff({0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.coeff({1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.coeff({2}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.coeff({3}) == doctest::Approx(1.0 / 6).epsilon(1e-15));

  auto t = seed_variables(z, 3)[0];
  Jet g = 1.0 / (1.0 - t);
  const double jet_val = g.partial({3});
  const int m3[] = {3};
  const double fd = fd_oracle_sweep([](std::span<const double> p) { return 1.0 / (1.0 - p[0]); }, z, m3);
  CHECK(jet_val == doctest::Approx(6.0).epsilon(1e-13));
  CHECK(std::abs(fd - 6.0) < 1e-5);
}

TEST_CASE("sin, cos, sqrt and pow match closed forms") {
  const double v[] = {0.3};
  auto x = seed_variables(v, 4)[0];
  Jet s = sin(x), c = cos(x);
  Jet one = s * s + c * c;
  CHECK(one.value() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < one.coeffs().size(); ++i) CHECK(std::abs(one[i]) < 1e-15);
  CHECK(s.partial({3}) == doctest::Approx(-std::cos(0.3)));
  Jet r = sqrt(x);
  Jet back = r * r;
  for (std::size_t i = 0; i < back.coeffs().size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-14);
  CHECK(pow(x, 3.0).partial({3}) == doctest::Approx(6.0));
}

TEST_CASE("domain errors carry the offending value") {
  const double v[] = {-0.5};
  auto x = seed_variables(v, 2)[0];
  try {
    (void)log(x);
    FAIL("log of negative should throw");
  } catch (const NumericDomainError& e) {
    CHECK(e.value() == -0.5);
  }
  CHECK_THROWS_AS((void)sqrt(x), NumericDomainError);
  Jet zero = x + 0.5;
  CHECK_THROWS_AS((void)(x / zero), NumericDomainError);
  CHECK_NOTHROW((void)jet_arith(x, x, JetOp::Exp));
  CHECK_THROWS_AS((void)jet_arith(x, x, JetOp::Log), NumericDomainError);
}

TEST_CASE("partial derivatives") {
  const double v[] = {0.4, -1.2};
  auto x = seed_variables(v, 3);
  Jet c = Jet::constant(2, 3, 5.0);
  for (const auto& m : all_indices(2, 3))
    if (degree(m) > 0) CHECK(c.partial(m) == 0.0);
  CHECK((x[0] * x[1]).partial({1, 1}) == 1.0);
  Jet r2 = x[0] * x[0] + x[1] * x[1];
  CHECK(r2.partial({2, 0}) == 2.0);
  CHECK_THROWS_AS((void)r2.partial({2, 2}), ConfigError);
  CHECK(x[1].partial({0, 1}) == 1.0);
}

TEST_CASE("multiplication is commutative and associative") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  auto random_jet = [&] {
    Jet j(3, 4);
    for (auto& c : j.coeffs()) c = u(rng);
    return j;
  };
  for (int trial = 0; trial < 20; ++trial) {
    Jet a = random_jet(), b = random_jet(), c = random_jet();
    Jet ab = a * b, ba = b * a;
    Jet l = (a * b) * c, r = a * (b * c);
    for (std::size_t i = 0; i < ab.coeffs().size(); ++i) {
      CHECK(std::abs(ab[i] - ba[i]) < 1e-14);
      CHECK(std::abs(l[i] - r[i]) < 1e-14);
    }
  }
}

TEST_CASE("derivative, restriction and composition") {
  const double v[] = {0.3, 0.5};
  auto x = seed_variables(v, 4);
  Jet f = exp(x[0]) * sin(x[1]);
  Jet fx = f.derivative(0);
  CHECK(fx.order() == 3);
  CHECK(fx.partial({1, 1}) == doctest::Approx(f.partial({2, 1})));
  CHECK(fx.partial({0, 2}) == doctest::Approx(f.partial({1, 2})));

  Jet g = f.restricted(1);
  CHECK(g.nvars() == 1);
  CHECK(g.partial({3}) == doctest::Approx(f.partial({3, 0})));

  // outer(u, w) = u * w, expanded at (0.2, 0.9); inner = (cos t, 1 + t^2) at t = 0
  const double b[] = {1.0, 1.0};
  auto uw = seed_variables(b, 3);
  Jet outer = uw[0] * uw[1] * uw[1];
  const double t0[] = {0.0};
  auto t = seed_variables(t0, 3)[0];
  std::vector<Jet> inner = {cos(t), 1.0 + t * t};
  Jet composed = compose(outer, inner, b);
  Jet direct = cos(t) * (1.0 + t * t) * (1.0 + t * t);
  for (std::size_t i = 0; i < direct.coeffs().size(); ++i) CHECK(std::abs(composed[i] - direct[i]) < 1e-14);
}

TEST_CASE("complex jets obey field arithmetic") {
  const double v[] = {0.3, -0.4, 1.1, 0.2};
  auto x = seed_variables(v, 3);
  CJet a{x[0], x[1]}, b{x[2], x[3]};
  CJet q = (a * b) / b;
  for (std::size_t i = 0; i < q.re.coeffs().size(); ++i) {
    CHECK(std::abs(q.re[i] - a.re[i]) < 1e-14);
    CHECK(std::abs(q.im[i] - a.im[i]) < 1e-14);
  }
  Jet m = abs2(a * b) - abs2(a) * abs2(b);
  for (double c : m.coeffs()) CHECK(std::abs(c) < 1e-14);
}

TEST_CASE("random composites match the finite-difference oracle") {
  std::mt19937_64 rng(20240611);
  int checked = 0, failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto expr = kahred::testing::random_expression(rng, 3, 4);
    const int nv = expr.nvars;
    std::vector<double> p = kahred::testing::random_point(rng, nv);
    auto jets = seed_variables(p, 4);
    Jet j = expr.eval(std::span<const Jet>(jets));
    auto f = [&](std::span<const double> q) { return expr.eval(q); };
    for (const auto& m : all_indices(nv, 4)) {
      if (degree(m) == 0) continue;
      const double a = j.partial(m);
      const double b = fd_oracle_sweep(f, p, m);
      ++checked;
      if (std::abs(a - b) > 1e-5 * std::max(std::abs(a), 1.0)) ++failures;
    }
  }
  CHECK(checked > 1000);
  CHECK(failures == 0);
}
