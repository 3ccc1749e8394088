#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kahred/actions.hpp"
#include "kahred/errors.hpp"
#include "kahred/potentials.hpp"
#include "support/fd_oracle.hpp"

using namespace kahred;
using kahred::testing::fd_oracle_sweep;

namespace {

std::span<const double> sp(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::vector<Vec> random_points(int dim, int count, double radius, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius);
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i) {
    Vec p(dim);
    for (int k = 0; k < dim; ++k) p(k) = u(rng);
    pts.push_back(p);
  }
  return pts;
}

GroupAction hopf(int n) { return GroupAction::torus(n, Mat::Ones(1, n), unitary_algebra(n)); }
GroupAction sphere_action(int n) {
  return GroupAction::torus(n, Mat::Constant(1, n, -(n + 1.0)), unitary_algebra(n));
}

// mu~ of the scalar circle w -> e^{i m theta} w on CP^n, worked out by hand from
// mu = -(1/2) d^c K(X~) + const with K = (1/2) log(1 + t)
double sphere_moment_closed_form(int n, const Vec& p) {
  const double t = p.squaredNorm(), m = -(n + 1.0), C = 2.0 * (n + 1);
  return m / C * (n - t) / (1 + t);
}

Vec torus_point(const std::vector<double>& moduli, const std::vector<double>& angles) {
  Vec p(2 * static_cast<int>(moduli.size()));
  for (std::size_t j = 0; j < moduli.size(); ++j) {
    p(2 * static_cast<int>(j)) = moduli[j] * std::cos(angles[j]);
    p(2 * static_cast<int>(j) + 1) = moduli[j] * std::sin(angles[j]);
  }
  return p;
}

Mat flow_differential(const GroupAction& a, const Vec& p, const Vec& theta) {
  const int d = a.dim();
  std::vector<Jet> x = seed_at(sp(p), 1);
  std::vector<Jet> th;
  for (int i = 0; i < theta.size(); ++i) th.push_back(Jet::constant(d, 1, theta(i)));
  std::vector<Jet> y = a.flow(x, th);
  Mat D(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) D(r, c) = y[static_cast<std::size_t>(r)].d(c);
  return D;
}

}  // namespace

TEST_CASE("fundamental fields") {
  Vec p(2);
  p << 1.0, 0.0;
  Vec X = hopf(1).fundamental_field(0, sp(p));
  CHECK(std::abs(X(0)) < 1e-15);
  CHECK(std::abs(X(1) - 1.0) < 1e-15);
  CHECK(sphere_action(2).fundamental_field(0, sp(Vec::Zero(4))).norm() == 0.0);

  // pushforward of X~ by the flow is X~ at the image (abelian action)
  GroupAction a = sphere_action(2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-3, 3);
  for (const Vec& q : random_points(4, 20, 1.0, 4)) {
    Vec theta(1);
    theta << ang(rng);
    const Vec image = a.flow(q, theta);
    const Mat D = flow_differential(a, q, theta);
    CHECK((a.fundamental_field(0, sp(image)) - D * a.fundamental_field(0, sp(q))).norm() < 1e-9);
  }
}

TEST_CASE("fundamental field jets match differences of the flow") {
  GroupAction a = GroupAction::torus(2, (Mat(2, 2) << 1, -2, 3, 1).finished());
  Vec p(4);
  p << 0.3, -0.4, 0.7, 0.2;
  for (int i = 0; i < 2; ++i) {
    std::vector<Jet> X = a.fundamental_field(i, sp(p), 2);
    for (int k = 0; k < 4; ++k) {
      const int m[4] = {k == 0 ? 1 : 0, k == 1 ? 1 : 0, k == 2 ? 1 : 0, k == 3 ? 1 : 0};
      auto comp = [&](std::span<const double> x) {
        Vec q = Eigen::Map<const Vec>(x.data(), 4);
        return a.fundamental_field(i, sp(q))(1);
      };
      CHECK(std::abs(X[1].d(k) - fd_oracle_sweep(comp, sp(p), m)) < 1e-8);
    }
  }
}

TEST_CASE("flows are isometric holomorphic group actions") {
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  GroupAction a = GroupAction::torus(2, (Mat(2, 2) << -3, -3, 1, 0).finished(), unitary_algebra(2));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-3, 3);
  const Mat J = standard_j(2);
  for (const Vec& p : random_points(4, 20, 1.0, 12)) {
    Vec t1(2), t2(2);
    t1 << ang(rng), ang(rng);
    t2 << ang(rng), ang(rng);
    CHECK((a.flow(p, Vec::Zero(2)) - p).norm() == 0.0);
    CHECK((a.flow(a.flow(p, t1), t2) - a.flow(p, t1 + t2)).norm() < 1e-10);
    const Mat D = flow_differential(a, p, t1);
    const Vec image = a.flow(p, t1);
    CHECK(max_abs(D.transpose() * cp2.metric(sp(image)) * D - cp2.metric(sp(p))) < 1e-9);
    CHECK(max_abs(D * J - J * D) < 1e-9);
  }
  // ambient generators are isometries too
  for (const UnitaryGenerator& u : unitary_algebra(2)) {
    Vec p(4);
    p << 0.2, 0.5, -0.3, 0.1;
    std::vector<Jet> x = seed_at(sp(p), 1);
    std::vector<Jet> y = u.flow(x, Jet::constant(4, 1, 0.9));
    Mat D(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) D(r, c) = y[static_cast<std::size_t>(r)].d(c);
    CHECK(max_abs(D.transpose() * cp2.metric(sp(values(y))) * D - cp2.metric(sp(p))) < 1e-9);
  }
}

TEST_CASE("divergence") {
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  GroupAction a = sphere_action(2);
  for (const Vec& p : random_points(4, 10, 1.0, 14)) CHECK(std::abs(divergence_at(cp2, a.field(0), sp(p))) < 1e-9);

  // J X~ of the Hopf generator on flat C^n is -z, divergence -2n
  for (int n : {1, 2}) {
    ChartModel flat = flat_chart(n);
    for (const Vec& p : random_points(2 * n, 5, 1.0, 15))
      CHECK(std::abs(divergence_at(flat, j_field(flat, hopf(n), 0), sp(p)) + 2.0 * n) < 1e-12);
  }

  // a radial field on CP^1 against the oracle applied to sqrt(det g) V^a
  ChartModel cp1 = fubini_study_chart(1, 0.5);
  FieldJets V = [](std::span<const double> p, int order) {
    auto x = seed_at(p, order);
    Jet s = exp(-(x[0] * x[0] + x[1] * x[1]));
    return std::vector<Jet>{x[0] * s, x[1] * s};
  };
  for (const Vec& p : {Vec(Vec::Zero(2)), Vec((Vec(2) << 0.4, -0.3).finished())}) {
    double sum = 0.0;
    for (int k = 0; k < 2; ++k) {
      auto flux = [&](std::span<const double> x) {
        return std::sqrt(cp1.metric(x).determinant()) * V(x, 0)[static_cast<std::size_t>(k)].value();
      };
      const int m[2] = {k == 0 ? 1 : 0, k == 1 ? 1 : 0};
      sum += fd_oracle_sweep(flux, sp(p), m);
    }
    CHECK(std::abs(divergence_at(cp1, V, sp(p)) - sum / std::sqrt(cp1.metric(sp(p)).determinant())) < 1e-6);
  }
}

TEST_CASE("canonical moment on CP^n") {
  for (int n : {1, 2}) {
    ChartModel c = fubini_study_chart(n, 0.5);
    const double C = 2.0 * (n + 1);
    MomentMap m = MomentMap::canonical(c, sphere_action(n), C);
    CHECK(m.kind() == MomentKind::Canonical);
    for (const Vec& p : random_points(2 * n, 30, 1.5, 20 + n))
      CHECK(std::abs(m.value(0, sp(p)) - sphere_moment_closed_form(n, p)) < 1e-9);
  }
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  GroupAction a = sphere_action(2);
  const Vec clifford = torus_point({1.0, 1.0}, {0.3, -1.1});
  CHECK(std::abs(canonical_moment(cp2, a, 6.0, {}, sp(clifford), 0)) < 1e-9);
  CHECK_THROWS_AS(MomentMap::canonical(cp2, a, 0.0), ArgumentError);
  CHECK_THROWS_AS(canonical_moment(cp2, a, 0.0, {}, sp(clifford), 0), ArgumentError);

  // the fixed point at the centre is a critical minimum, and 0 lies strictly inside the image along a ray
  MomentMap m = MomentMap::canonical(cp2, a, 6.0);
  CHECK(m.differential(sp(Vec::Zero(4))).norm() < 1e-12);
  Vec ray = Vec::Zero(4);
  ray(0) = 1.0;
  const double centre_value = m.value(0, sp(Vec::Zero(4)));
  for (double r : {0.5, 1.0, 1.5, 2.5}) CHECK(m.value(0, sp(Vec(r * ray))) > centre_value);
  CHECK(m.value(0, sp(Vec(0.5 * ray))) * m.value(0, sp(Vec(2.5 * ray))) < 0.0);
}

TEST_CASE("moment property") {
  for (int n : {1, 2}) {
    ChartModel flat = flat_chart(n);
    MomentMap q = MomentMap::quadratic(flat, hopf(n), {1.0});
    for (const Vec& p : random_points(2 * n, 100, 1.2, 30 + n)) CHECK(moment_property_residual(q, sp(p)) < 1e-10);
    ChartModel c = fubini_study_chart(n, 0.5);
    MomentMap m = MomentMap::canonical(c, sphere_action(n), 2.0 * (n + 1));
    for (const Vec& p : random_points(2 * n, 100, 1.2, 40 + n)) CHECK(moment_property_residual(m, sp(p)) < 1e-8);
  }
  // rank-2 quadratic map
  GroupAction t2 = GroupAction::torus(2, (Mat(2, 2) << 1, 2, -1, 1).finished());
  MomentMap q2 = MomentMap::quadratic(flat_chart(2), t2, {0.3, -0.2});
  for (const Vec& p : random_points(4, 20, 1.2, 33)) CHECK(moment_property_residual(q2, sp(p)) < 1e-10);
}

TEST_CASE("moment maps are constant along orbits") {
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  MomentMap m = MomentMap::canonical(cp2, sphere_action(2), 6.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-3, 3);
  for (const Vec& p : random_points(4, 20, 1.0, 51)) {
    Vec th(1);
    th << ang(rng);
    CHECK(orbit_invariance_residual(m, sp(p), th) < 1e-9);
  }
}

TEST_CASE("quadratic moment levels") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ang(-3, 3);
  for (int n : {1, 2}) {
    const std::vector<int> ones(static_cast<std::size_t>(n), 1);
    Vec p = random_points(2 * n, 1, 1.0, 60 + n)[0];
    p.normalize();
    CHECK(std::abs(quadratic_moment(sp(p), ones, 0.5)) < 1e-15);
    CHECK(std::abs(quadratic_moment(sp(Vec(2.0 * p)), ones, 0.5)) > 1.0);
  }
  for (int k = 0; k < 5; ++k) {
    const double r = 0.2 + 0.3 * k;
    const Vec p = torus_point({r, r}, {ang(rng), ang(rng)});
    CHECK(std::abs(quadratic_moment(sp(p), {1, -1}, 0.0)) < 1e-15);
  }
  MomentMap q = MomentMap::quadratic(flat_chart(2), hopf(2), {1.0});
  CHECK(std::abs(q.value(0, sp(torus_point({std::sqrt(0.5), std::sqrt(0.5)}, {0.1, 0.2}))) - 0.5) < 1e-15);
}

TEST_CASE("level sampling") {
  MomentMap q = MomentMap::quadratic(flat_chart(2), hopf(2), {0.5});
  auto seeds = random_points(4, 20, 1.0, 70);
  for (Vec& s : seeds) s *= 2.0;
  Vec c = Vec::Zero(1);
  for (const Vec& p : level_sample(q, c, seeds)) CHECK(std::abs(p.norm() - 1.0) < 1e-11);

  const Vec on = torus_point({0.6, 0.8}, {0.4, 2.0});
  auto same = level_sample(q, c, {on});
  CHECK((same[0] - on).norm() == 0.0);

  ChartModel cp2 = fubini_study_chart(2, 0.5);
  MomentMap m = MomentMap::canonical(cp2, sphere_action(2), 6.0);
  std::vector<Vec> torus_seeds;
  for (int k = 0; k < 10; ++k) torus_seeds.push_back(torus_point({0.5 + 0.1 * k, 1.5 - 0.05 * k}, {0.3 * k, -0.2 * k}));
  for (const Vec& p : level_sample(m, c, torus_seeds)) {
    CHECK(std::abs(m.value(0, sp(p))) < 1e-11);
    CHECK(std::abs(p.squaredNorm() - 2.0) < 1e-9);
  }

  Vec unreachable(1);
  unreachable << 2.0;
  CHECK_THROWS_AS(level_sample(q, unreachable, {on}), RootFindError);
}

TEST_CASE("Laplacian by differences agrees with -div J X~") {
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  GroupAction a = sphere_action(2);
  MomentMap m = MomentMap::canonical(cp2, a, 6.0);
  for (const Vec& p : random_points(4, 10, 1.0, 80))
    CHECK(std::abs(moment_laplacian_fd(m, 0, sp(p)) + divergence_at(cp2, j_field(cp2, a, 0), sp(p))) < 1e-8);
}

TEST_CASE("invariance residuals on the CP^2 zero level") {
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  MomentMap m = MomentMap::canonical(cp2, sphere_action(2), 6.0);
  auto seeds = random_points(4, 200, 1.0, 90);
  auto level = level_sample(m, Vec::Zero(1), seeds);
  InvarianceReport r = invariance_residuals(m, level);
  CHECK(r.used == 200);
  CHECK(r.s_invariance < 1e-8);
  CHECK(r.transnormal_spread < 1e-8);
  CHECK(r.laplacian_spread < 1e-8);
  CHECK(r.eigenfunction < 1e-7);
  CHECK(r.isotropy < 1e-9);

  std::vector<Vec> mixed = {level[0], Vec::Constant(4, 0.1)};
  CHECK_THROWS_AS(invariance_residuals(m, mixed), ArgumentError);
}

TEST_CASE("eigenfunction identity with a non-trivial conformal factor") {
  ChartModel pert = ChartModel::from_potential("pert", 1, perturbed_fubini_study_potential(0.5, 0.02, 0.4, 0.45));
  PointJet f = conformal_factor(pert, 4.0);
  MomentMap m = MomentMap::canonical(pert, sphere_action(1), 4.0, f);
  auto level = level_sample(m, Vec::Zero(1), random_points(2, 40, 1.0, 95));
  InvarianceReport r = invariance_residuals(m, level);
  CHECK(r.eigenfunction < 1e-7);
  for (const Vec& p : random_points(2, 30, 1.3, 96)) CHECK(moment_property_residual(m, sp(p)) < 1e-8);
  // the zero level moved off the unperturbed circle t = 1
  CHECK(std::abs(level[0].squaredNorm() - 1.0) > 1e-4);
}

TEST_CASE("isotropy of rank-2 torus levels") {
  GroupAction t2 = GroupAction::torus(2, Mat::Identity(2, 2));
  MomentMap q = MomentMap::quadratic(flat_chart(2), t2, {0.5, 0.5});
  auto level = level_sample(q, Vec::Zero(2), random_points(4, 20, 1.0, 97));
  InvarianceReport r = invariance_residuals(q, level);
  CHECK(r.isotropy < 1e-9);
  CHECK(r.used == 20);
  for (const Vec& p : level) {
    CHECK(std::abs(p.segment(0, 2).norm() - 1.0) < 1e-11);
    CHECK(std::abs(p.segment(2, 2).norm() - 1.0) < 1e-11);
  }
}

TEST_CASE("near-singular orbits are excluded") {
  ChartModel cp2 = fubini_study_chart(2, 0.5);
  GroupAction a = GroupAction::torus(2, (Mat(1, 2) << 1, 0).finished());
  MomentMap q = MomentMap::canonical(cp2, a, 6.0);
  Vec p(4);
  p << 0.0, 0.0, 0.5, 0.5;
  CHECK(near_singular(a, cp2, sp(p)));
  InvarianceReport r = invariance_residuals(q, {p});
  CHECK(r.excluded == 1);
  CHECK(r.used == 0);
}
