#include "kahred/reduction.hpp"

#include <cmath>
#include <sstream>

#include "kahred/errors.hpp"

namespace kahred {

namespace {

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// what the quotient charts need from the setup, copied into their closures
struct Core {
  ChartModel chart;
  GroupAction action;
  JetMap section;
  JetMap projection;
  PointJet f;
};

struct Lifted {
  std::vector<Jet> s;  // section point jets, truncated to `order`
  Vec p;
  JetMatrix Ds;  // 2n x 2m
  JetMatrix g;   // ambient metric composed with the section
  JetMatrix X;   // fundamental fields composed with the section
};

Lifted lift(const Core& c, const Vec& x, int order) {
  const int m2 = static_cast<int>(x.size());
  const std::vector<Jet> s = c.section(seed_at(as_span(x), order + 1));
  const int d = c.chart.dim();
  if (static_cast<int>(s.size()) != d) throw ConfigError("section returns the wrong number of coordinates");
  Lifted L;
  L.p = values(s);
  L.s = truncated(s, order);
  L.Ds = JetMatrix(d, m2, m2, order);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < m2; ++b) L.Ds(a, b) = s[static_cast<std::size_t>(a)].derivative(b);
  const std::span<const double> ps = as_span(L.p);
  L.g = compose(c.chart.metric_jets(ps, order), L.s, ps);
  const int l = c.action.rank();
  L.X = JetMatrix(d, l, m2, order);
  for (int i = 0; i < l; ++i) {
    const std::vector<Jet> Xi = compose(c.action.fundamental_field(i, ps, order), L.s, ps);
    for (int a = 0; a < d; ++a) L.X(a, i) = Xi[static_cast<std::size_t>(a)];
  }
  return L;
}

JetMatrix metric_of(const Core& c, const Vec& x, int order) {
  const Lifted L = lift(c, x, order);
  const JetMatrix gDs = L.g * L.Ds;
  const JetMatrix B = L.X.transpose() * gDs;
  const JetMatrix G = L.X.transpose() * (L.g * L.X);
  return L.Ds.transpose() * gDs - B.transpose() * (inverse(G) * B);
}

JetMatrix structure_of(const Core& c, const Vec& x, int order) {
  const Lifted L = lift(c, x, order);
  const std::span<const double> ps = as_span(L.p);
  const int d = c.chart.dim(), m2 = static_cast<int>(x.size());
  const std::vector<Jet> pi = c.projection(seed_at(ps, order + 1));
  JetMatrix Dpi(m2, d, d, order);
  for (int a = 0; a < m2; ++a)
    for (int b = 0; b < d; ++b) Dpi(a, b) = pi[static_cast<std::size_t>(a)].derivative(b);
  const JetMatrix Dpi_s = compose(Dpi, L.s, ps);
  const JetMatrix J = compose(c.chart.complex_structure_jets(ps, order), L.s, ps);
  const JetMatrix G = L.X.transpose() * (L.g * L.X);
  const JetMatrix horizontal =
      JetMatrix::constant(Mat::Identity(d, d), m2, order) - L.X * (inverse(G) * (L.X.transpose() * L.g));
  return Dpi_s * (J * (horizontal * L.Ds));
}

Jet log_nu_of(const Core& c, const Vec& x, int order) {
  const std::vector<Jet> s = c.section(seed_at(as_span(x), order));
  const Vec p = values(s);
  const std::span<const double> ps = as_span(p);
  const int d = c.chart.dim(), l = c.action.rank(), m2 = static_cast<int>(x.size());
  const JetMatrix g = compose(c.chart.metric_jets(ps, order), s, ps);
  JetMatrix X(d, l, m2, order);
  for (int i = 0; i < l; ++i) {
    const std::vector<Jet> Xi = compose(c.action.fundamental_field(i, ps, order), s, ps);
    for (int a = 0; a < d; ++a) X(a, i) = Xi[static_cast<std::size_t>(a)];
  }
  const Jet G = det(X.transpose() * (g * X));
  if (!(G.value() > 0.0)) throw GeometryError("singular orbit over the quotient point");
  return 0.5 * log(G);
}

Jet f_of(const Core& c, const Vec& x, int order) {
  const int m2 = static_cast<int>(x.size());
  if (!c.f) return Jet(m2, order);
  const std::vector<Jet> s = c.section(seed_at(as_span(x), order));
  const Vec p = values(s);
  return compose(c.f(as_span(p), order), s, as_span(p));
}

Vec to_vec(std::span<const double> x) { return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())); }

Core core_of(const ReductionSetup& s) {
  return Core{s.chart(), s.action(),
              s.section_map(), s.projection_map(), s.conformal()};
}

JetMatrix field_jets(const GroupAction& a, std::span<const double> p, int order) {
  const int d = a.dim(), l = a.rank();
  JetMatrix X(d, l, d, order);
  for (int i = 0; i < l; ++i) {
    const std::vector<Jet> Xi = a.fundamental_field(i, p, order);
    for (int k = 0; k < d; ++k) X(k, i) = Xi[static_cast<std::size_t>(k)];
  }
  return X;
}

Vec pulled_back_form(const Mat& PT, const MeanCurvatureData& mc, const ChartModel& q) {
  // pi^* (omega_q(H, .)) on the L tangent basis
  const Mat omega = frame_at(q, as_span(mc.point)).omega;
  return (mc.H.transpose() * omega * PT).transpose();
}

}  // namespace

ReductionSetup::ReductionSetup(std::string name, MomentMap moment, Vec level, JetMap section, JetMap projection,
                               std::optional<ChartModel> quotient_model, Domain quotient_domain)
    : name_(std::move(name)),
      moment_(std::move(moment)),
      level_(std::move(level)),
      section_(std::move(section)),
      projection_(std::move(projection)),
      quotient_model_(std::move(quotient_model)) {
  if (level_.size() != rank()) throw ConfigError("reduction " + name_ + ": one level value per generator");
  if (quotient_n() < 0) throw ConfigError("reduction " + name_ + ": rank exceeds the complex dimension");
  if (quotient_n() == 0) return;
  if (!section_ || !projection_) throw ConfigError("reduction " + name_ + " needs a section and a projection");
  const Core c = core_of(*this);
  quotient_ = ChartModel::from_metric(
      name_ + "/quotient", quotient_n(),
      [c](std::span<const double> x, int order) { return metric_of(c, to_vec(x), order); },
      [c](std::span<const double> x, int order) { return structure_of(c, to_vec(x), order); },
      std::move(quotient_domain));
}

std::vector<Jet> ReductionSetup::section_jets(const Vec& x, int order) const {
  if (!section_) throw GeometryError("reduction " + name_ + " has no section");
  return section_(seed_at(as_span(x), order));
}

Vec ReductionSetup::section(const Vec& x) const { return values(section_jets(x, 0)); }

std::vector<Jet> ReductionSetup::projection_jets(const Vec& p, int order) const {
  if (!projection_) throw GeometryError("reduction " + name_ + " has no projection");
  return projection_(seed_at(as_span(p), order));
}

Vec ReductionSetup::project(const Vec& p) const { return values(projection_jets(p, 0)); }

Mat ReductionSetup::projection_differential(const Vec& p) const {
  const std::vector<Jet> y = projection_jets(p, 1);
  Mat D(static_cast<Eigen::Index>(y.size()), p.size());
  for (std::size_t a = 0; a < y.size(); ++a)
    for (int b = 0; b < p.size(); ++b) D(static_cast<Eigen::Index>(a), b) = y[a].d(b);
  return D;
}

const ChartModel& ReductionSetup::quotient() const {
  if (!quotient_) throw GeometryError("reduction " + name_ + ": the quotient is a point");
  return *quotient_;
}

PointJet ReductionSetup::conformal() const { return moment_.conformal(); }

SetupResiduals check_setup(const ReductionSetup& s, const std::vector<Vec>& xs) {
  SetupResiduals r;
  const Vec theta = Vec::LinSpaced(s.rank(), 0.7, 0.7 + 0.1 * (s.rank() - 1));
  for (const Vec& x : xs) {
    const Vec z = s.section(x);
    r.round_trip = std::max(r.round_trip, max_abs(s.project(z) - x));
    r.level = std::max(r.level, max_abs(s.moment().values(as_span(z)) - s.level()));
    r.invariance = std::max(r.invariance, max_abs(s.project(s.action().flow(z, theta)) - x));
  }
  return r;
}

Splitting splitting_at(const ReductionSetup& s, const Vec& p) {
  const std::span<const double> ps = as_span(p);
  const double off = max_abs(s.moment().values(ps) - s.level());
  if (off > 1e-10) throw GeometryError("splitting: point off the level set, level residual " + num(off));
  const PointFrame fr = frame_at(s.chart(), ps);
  const Mat X = s.action().fields(ps);
  const int d = s.chart().dim(), l = s.rank();
  for (int i = 0; i < l; ++i)
    if (std::sqrt(X.col(i).dot(fr.g * X.col(i))) < 1e-6) throw GeometryError("splitting: singular orbit");
  const Mat D = s.moment().differential(ps);
  const Mat grad = fr.g_inv * D.transpose();

  Mat cand(d, 2 * l + d);
  cand << X, grad, Mat::Identity(d, d);
  const Mat Q = gram_schmidt(cand, fr.g);
  if (Q.cols() != d) throw GeometryError("splitting: orbit and normal directions are degenerate");

  Splitting sp;
  sp.point = p;
  sp.k_basis = X;
  sp.jk_basis = fr.J * X;
  sp.e_basis = Q.rightCols(d - 2 * l);
  sp.P_k = orthogonal_projector(X, fr.g);
  sp.P_jk = orthogonal_projector(sp.jk_basis, fr.g);
  sp.P_e = orthogonal_projector(sp.e_basis, fr.g);
  const Mat& E = sp.e_basis;
  sp.orthogonality = std::max({max_abs(E.transpose() * fr.g * X), max_abs(E.transpose() * fr.g * sp.jk_basis),
                               max_abs(X.transpose() * fr.g * sp.jk_basis), max_abs(D * E)});
  sp.j_invariance = max_abs(fr.J * E - sp.P_e * (fr.J * E));
  sp.normal = max_abs(sp.jk_basis - orthogonal_projector(grad, fr.g) * sp.jk_basis);
  for (const Mat* P : {&sp.P_k, &sp.P_jk, &sp.P_e}) sp.idempotency = std::max(sp.idempotency, max_abs(*P * *P - *P));
  return sp;
}

JetMatrix quotient_metric_jets(const ReductionSetup& s, const Vec& x, int order) {
  return s.quotient().metric_jets(as_span(x), order);
}

JetMatrix quotient_complex_structure_jets(const ReductionSetup& s, const Vec& x, int order) {
  return s.quotient().complex_structure_jets(as_span(x), order);
}

PointJet log_nu_check(const ReductionSetup& s) {
  const Core c = core_of(s);
  return [c](std::span<const double> x, int order) { return log_nu_of(c, to_vec(x), order); };
}

PointJet f_check(const ReductionSetup& s) {
  const Core c = core_of(s);
  return [c](std::span<const double> x, int order) { return f_of(c, to_vec(x), order); };
}

HLMetric hl_metric(const ReductionSetup& s, HLVariant variant, double shift) {
  if (variant == HLVariant::Tilde && !s.canonical())
    throw ConfigError("reduction " + s.name() + ": the conformal Hsiang-Lawson metric needs a canonical moment");
  const Core c = core_of(s);
  const ChartModel q = s.quotient();
  const int m = s.quotient_n(), n = s.n();
  const bool tilde = variant == HLVariant::Tilde;
  HLMetric hl;
  hl.variant = variant;
  hl.shift = shift;
  hl.exponent = [c, m, n, tilde, shift](std::span<const double> x, int order) {
    const Vec xv = to_vec(x);
    Jet e = log_nu_of(c, xv, order);
    if (tilde) e += n * f_of(c, xv, order);
    return e / m + shift;
  };
  const PointJet exponent = hl.exponent;
  hl.chart = ChartModel::from_metric(
      q.name() + (tilde ? "/hl~" : "/hl"), m,
      [q, exponent](std::span<const double> x, int order) {
        return q.metric_jets(x, order) * exp(2.0 * exponent(x, order));
      },
      [q](std::span<const double> x, int order) { return q.complex_structure_jets(x, order); },
      [q](std::span<const double> x) { return q.contains(x); });
  return hl;
}

std::vector<Jet> gamma_prime_form_jets(const ReductionSetup& s, const Vec& p, int order) {
  if (order > 1) throw ConfigError("gamma' form jets are available up to order 1");
  const ChartModel& chart = s.chart();
  const std::span<const double> ps = as_span(p);
  const int d = chart.dim(), l = s.rank();
  const JetMatrix X = field_jets(s.action(), ps, order);
  const JetMatrix g = chart.metric_jets(ps, order);
  JetMatrix gam(l, 1, d, order);
  for (int i = 0; i < l; ++i) gam(i, 0) = -0.5 * divergence_jets(chart, j_field(chart, s.action(), i), ps, order);
  const JetMatrix gX = g * X;
  const JetMatrix form = gX * (inverse(X.transpose() * gX) * gam);
  std::vector<Jet> out;
  for (int a = 0; a < d; ++a) out.push_back(form(a, 0));
  return out;
}

GammaPrime gamma_prime(const ReductionSetup& s, const Vec& p) {
  const ChartModel& chart = s.chart();
  const std::span<const double> ps = as_span(p);
  const int l = s.rank();
  GammaPrime r;
  r.values = Vec(l);
  for (int i = 0; i < l; ++i) r.values(i) = -0.5 * divergence_at(chart, j_field(chart, s.action(), i), ps);
  const Mat g = chart.metric(ps);
  const Mat X = s.action().fields(ps);
  const Mat gX = g * X;
  r.form = gX * (X.transpose() * gX).ldlt().solve(r.values);
  if (s.canonical()) {
    const MomentMap& m = s.moment();
    Vec dcf = Vec::Zero(chart.dim());
    if (m.conformal()) dcf = dc_form(chart, m.conformal(), ps);
    for (int i = 0; i < l; ++i)
      r.level_value = std::max(r.level_value, std::abs(r.values(i) - m.C() * s.level()(i) + s.n() * dcf.dot(X.col(i))));
  }
  return r;
}

Slice slice_at(const ReductionSetup& s, const Immersion& imm, const Vec& u0) {
  const Mat T = imm.differential(u0);
  const Vec p = imm.point(u0);
  const Mat X = s.action().fields(as_span(p));
  Slice sl;
  sl.u0 = u0;
  sl.W = T.colPivHouseholderQr().solve(X);
  sl.invariance = max_abs(T * sl.W - X);
  if (sl.invariance > 1e-8)
    throw GeometryError("immersion " + imm.name + " is not invariant: orbit residual " + num(sl.invariance));
  const int m = imm.param_dim, l = s.rank();
  const Mat Q = Eigen::HouseholderQR<Mat>(sl.W).householderQ() * Mat::Identity(m, m);
  sl.S = Q.rightCols(m - l);
  return sl;
}

Immersion reduced_immersion(const ReductionSetup& s, const Immersion& imm, const Vec& u0) {
  if (s.quotient_n() == 0) throw GeometryError("reduction " + s.name() + ": the quotient is a point");
  if (imm.param_dim - s.rank() != s.quotient_n())
    throw ConfigError("immersion " + imm.name + " does not have the Lagrangian dimension");
  const Slice sl = slice_at(s, imm, u0);
  const int k = s.quotient_n();
  Immersion r;
  r.name = imm.name + "/reduced";
  r.param_dim = k;
  r.counts.assign(static_cast<std::size_t>(k), 1);
  r.extent = Vec::Ones(k);
  r.periodic.assign(static_cast<std::size_t>(k), false);
  r.origin = Vec::Zero(k);
  const JetMap inner = imm.map;
  const Mat S = sl.S;
  const JetMap proj = s.projection_map();
  r.map = [proj, inner, S, u0](std::span<const Jet> v) {
    std::vector<Jet> u;
    for (int a = 0; a < u0.size(); ++a) {
      Jet ua = Jet::constant(v[0].nvars(), v[0].order(), u0(a));
      for (int b = 0; b < S.cols(); ++b) ua += S(a, b) * v[static_cast<std::size_t>(b)];
      u.push_back(ua);
    }
    return proj(inner(u));
  };
  return r;
}

ImmersionCheck check_immersion(const ReductionSetup& s, const Immersion& imm) {
  const std::vector<Vec> grid = imm.grid();
  struct Pair {
    double level, inv;
  };
  const std::vector<Pair> r = map_points<Pair>(grid.size(), [&](std::size_t i) {
    const Vec p = imm.point(grid[i]);
    const double level = max_abs(s.moment().values(as_span(p)) - s.level());
    const Mat T = imm.differential(grid[i]);
    const Mat X = s.action().fields(as_span(p));
    const Mat W = T.colPivHouseholderQr().solve(X);
    return Pair{level, max_abs(T * W - X)};
  });
  ImmersionCheck c;
  for (const Pair& q : r) {
    c.level = std::max(c.level, q.level);
    c.invariance = std::max(c.invariance, q.inv);
  }
  if (c.level > 1e-9) throw GeometryError("immersion " + imm.name + " leaves the level set, level residual " + num(c.level));
  if (c.invariance > 1e-8)
    throw GeometryError("immersion " + imm.name + " is not invariant: orbit residual " + num(c.invariance));
  return c;
}

PointForms forms_at(const ReductionSetup& s, const Immersion& imm, const Vec& u, double hl_shift) {
  const ChartModel& chart = s.chart();
  const PointJet f = s.conformal();
  const MeanCurvatureData mc = mean_curvature(chart, imm, u, f);
  const Vec& p = mc.point;
  const std::span<const double> ps = as_span(p);
  const PointFrame fr = frame_at(chart, ps);
  const Mat& T = mc.tangent;
  const int m = imm.param_dim;

  PointForms F;
  F.level = max_abs(s.moment().values(ps) - s.level());
  F.alpha_H = mc.alpha_H;
  F.alpha_tilde = mc.alpha_tilde;
  F.dc_f = f ? Vec(T.transpose() * dc_form(chart, f, ps)) : Vec::Zero(m);

  const Mat X = s.action().fields(ps);
  const Mat G = X.transpose() * fr.g * X;
  F.nu = std::sqrt(G.determinant());
  // h(xi_i, xi_j) = 2 g_C(conj xi_i, xi_j) with xi = (X - i J X) / 2
  const Mat JX = fr.J * X;
  const int l = s.rank();
  Eigen::MatrixXcd h(l, l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) {
      const Vec ar = 0.5 * X.col(i), ai = -0.5 * JX.col(i);
      const Vec br = 0.5 * X.col(j), bi = -0.5 * JX.col(j);
      const double re = ar.dot(fr.g * br) + ai.dot(fr.g * bi);
      const double im = ar.dot(fr.g * bi) - ai.dot(fr.g * br);
      h(i, j) = 2.0 * std::complex<double>(re, im);
    }
  F.xi_norm = std::sqrt(std::abs(h.determinant()));

  const Vec H_prime = mc.H - orthogonal_projector(JX, fr.g) * mc.H;
  F.alpha_H_prime = (H_prime.transpose() * fr.omega * T).transpose();
  F.gamma = T.transpose() * gamma_prime(s, p).form;

  F.beta = F.beta_prime = F.dc_log_nu = Vec::Zero(m);
  if (s.canonical()) F.beta_tilde = Vec::Zero(m);
  if (s.quotient_n() == 0) return F;

  const Immersion red = reduced_immersion(s, imm, u);
  const Mat PT = s.projection_differential(p) * T;
  const ChartModel& q = s.quotient();
  const MeanCurvatureData mq = mean_curvature(q, red, Vec::Zero(red.param_dim));
  const std::span<const double> xs = as_span(mq.point);
  F.reduced_lagrangian = lagrangian_residual(q, red, Vec::Zero(red.param_dim));
  F.beta = pulled_back_form(PT, mq, q);
  F.dc_log_nu = PT.transpose() * dc_form(q, log_nu_check(s), xs);
  const HLMetric hl = hl_metric(s, HLVariant::Plain, hl_shift);
  F.beta_prime = pulled_back_form(PT, mean_curvature(hl.chart, red, Vec::Zero(red.param_dim)), hl.chart);
  if (s.canonical()) {
    const HLMetric ht = hl_metric(s, HLVariant::Tilde, hl_shift);
    F.beta_tilde = pulled_back_form(PT, mean_curvature(ht.chart, red, Vec::Zero(red.param_dim)), ht.chart);
  }
  return F;
}

void Stat::add(double v) {
  max = count == 0 ? v : std::max(max, v);
  mean += (v - mean) / (count + 1);
  ++count;
}

void Stat::merge(const Stat& o) {
  if (o.count == 0) return;
  if (count == 0) {
    *this = o;
    return;
  }
  max = std::max(max, o.max);
  mean = (mean * count + o.mean * o.count) / (count + o.count);
  count += o.count;
}

IdentityReport verify_identities(const ReductionSetup& s, const Immersion& imm, double tol, Execution ex) {
  check_immersion(s, imm);
  const std::vector<Vec> grid = imm.grid();
  const std::vector<PointForms> forms =
      map_points<PointForms>(grid.size(), [&](std::size_t i) { return forms_at(s, imm, grid[i]); }, ex);
  IdentityReport r;
  r.has_tilde = s.canonical();
  for (const PointForms& F : forms) {
    r.hl_form.add(max_abs(F.beta_prime - F.alpha_H_prime));
    r.reduced_form.add(max_abs(F.beta - F.alpha_H - F.gamma - F.dc_log_nu));
    r.level_form.add(max_abs(F.alpha_H_prime - F.alpha_H - F.gamma));
    r.orbit_volume.add(std::abs(F.xi_norm - F.nu));
    r.alpha_prime.add(max_abs(F.alpha_H_prime));
    r.beta_prime.add(max_abs(F.beta_prime));
    if (r.has_tilde) {
      r.conformal_form.add(max_abs(F.beta_tilde - F.alpha_tilde));
      r.alpha_tilde.add(max_abs(F.alpha_tilde));
      r.beta_tilde.add(max_abs(F.beta_tilde));
    }
    r.level.add(F.level);
    r.reduced_lagrangian.add(F.reduced_lagrangian);
  }
  const Stat& up = r.has_tilde ? r.alpha_tilde : r.alpha_prime;
  const Stat& down = r.has_tilde ? r.beta_tilde : r.beta_prime;
  r.minimal_upstream = up.max < tol;
  r.minimal_downstream = down.max < tol;
  return r;
}

double gauge_residual(const ReductionSetup& a, const ReductionSetup& b, const Immersion& imm, const Vec& u) {
  const PointForms fa = forms_at(a, imm, u), fb = forms_at(b, imm, u);
  if (a.canonical() && b.canonical()) return max_abs(fa.beta_tilde - fb.beta_tilde);
  return max_abs(fa.beta - fb.beta);
}

double quotient_symplectic_residual(const ReductionSetup& s, const Vec& p) {
  const Splitting sp = splitting_at(s, p);
  const Vec x = s.project(p);
  const Mat lifted = s.projection_differential(p) * sp.e_basis;
  const Mat wc = frame_at(s.quotient(), as_span(x)).omega;
  const Mat w = frame_at(s.chart(), as_span(p)).omega;
  return max_abs(lifted.transpose() * wc * lifted - sp.e_basis.transpose() * w * sp.e_basis);
}

double quotient_j_residual(const ReductionSetup& s, const Vec& x) {
  const Mat J = s.quotient().complex_structure(as_span(x));
  return max_abs(J * J + Mat::Identity(J.rows(), J.cols()));
}

double einstein_quotient_residual(const ReductionSetup& s, const Vec& x) {
  if (!s.canonical()) throw ConfigError("the Einstein quotient check needs a canonical moment map");
  const ChartModel& q = s.quotient();
  const std::span<const double> xs = as_span(x);
  const Mat rho = curvature_at(q, xs).ricci_form;
  const Mat omega = frame_at(q, xs).omega;
  const PointJet ln = log_nu_check(s), fc = f_check(s);
  const int n = s.n();
  const PointJet potential = [ln, fc, n](std::span<const double> y, int order) { return ln(y, order) + n * fc(y, order); };
  return max_abs(rho - s.moment().C() * omega - ddc(q, potential, xs));
}

Vec level_second_fundamental_form(const ReductionSetup& s, const Vec& p, const Vec& Z, const Vec& V) {
  const std::span<const double> ps = as_span(p);
  const ChartModel& chart = s.chart();
  const PointFrame fr = frame_at(chart, ps);
  const JetMatrix JX = chart.complex_structure_jets(ps, 1) * field_jets(s.action(), ps, 1);
  const int d = chart.dim(), l = s.rank();
  const Mat JXv = JX.value();
  const Mat G = JXv.transpose() * fr.g * JXv;
  Vec coef(l);
  for (int i = 0; i < l; ++i) {
    Vec nabla = fr.gamma(Z, JXv.col(i));
    for (int k = 0; k < d; ++k)
      for (int b = 0; b < d; ++b) nabla(k) += JX(k, i).d(b) * Z(b);
    coef(i) = -V.dot(fr.g * nabla);
  }
  return JXv * G.ldlt().solve(coef);
}

double gamma_curvature_residual(const ReductionSetup& s, const Vec& p) {
  const Splitting sp = splitting_at(s, p);
  const Mat dG = exterior_derivative(gamma_prime_form_jets(s, p, 1));
  const Vec form = gamma_prime(s, p).form;
  const Mat J = s.chart().complex_structure(as_span(p));
  const Mat& E = sp.e_basis;
  double worst = 0.0;
  for (int i = 0; i < E.cols(); ++i)
    for (int j = 0; j < E.cols(); ++j) {
      const double lhs = E.col(i).dot(dG * E.col(j));
      const Vec B = level_second_fundamental_form(s, p, E.col(i), J * E.col(j));
      worst = std::max(worst, std::abs(lhs - 2.0 * form.dot(J * B)));
    }
  return worst;
}

ShapeLaw shape_law(const ReductionSetup& s, const Vec& p) {
  if (s.rank() != 1) throw ConfigError("the geodesic sphere law needs a circle action");
  const Splitting sp = splitting_at(s, p);
  const std::span<const double> ps = as_span(p);
  const ChartModel& chart = s.chart();
  const PointFrame fr = frame_at(chart, ps);
  const int d = chart.dim();
  const JetMatrix g = chart.metric_jets(ps, 1);
  const JetMatrix JX = chart.complex_structure_jets(ps, 1) * field_jets(s.action(), ps, 1);
  std::vector<Jet> N;
  {
    std::vector<Jet> v;
    for (int k = 0; k < d; ++k) v.push_back(JX(k, 0));
    const Jet len = sqrt(dot(v, g * std::span<const Jet>(v)));
    for (const Jet& c : v) N.push_back(c / len);
  }
  const Vec Nv = values(N);
  const Mat& E = sp.e_basis;
  const int k = static_cast<int>(E.cols());
  Mat A(k, k);
  for (int j = 0; j < k; ++j) {
    Vec nabla = fr.gamma(E.col(j), Nv);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) nabla(a) += N[static_cast<std::size_t>(a)].d(b) * E(b, j);
    for (int i = 0; i < k; ++i) A(i, j) = -E.col(i).dot(fr.g * nabla);
  }
  ShapeLaw law;
  law.a = A.trace() / k;
  law.umbilicity = max_abs(A - law.a * Mat::Identity(k, k));
  const CurvatureData curv = curvature_at(chart, ps);
  const Vec x = s.project(p);
  const ChartModel& q = s.quotient();
  const PointFrame fq = frame_at(q, as_span(x));
  const CurvatureData cq = curvature_at(q, as_span(x));
  const Mat Dpi = s.projection_differential(p);
  for (int i = 0; i < k; ++i) {
    const double K = hol_sect_curv(fr, curv, E.col(i));
    const double K0 = hol_sect_curv(fq, cq, Dpi * E.col(i));
    if (i == 0) {
      law.K_ambient = K;
      law.K0 = K0;
    }
    law.residual = std::max(law.residual, std::abs(K0 - K - 4.0 * law.a * law.a));
  }
  return law;
}

ScaleFit fit_metric_scale(const ChartModel& a, const ChartModel& b, const std::vector<Vec>& samples) {
  if (samples.empty()) throw ArgumentError("metric scale fit needs samples");
  std::vector<Mat> ga, gb;
  double num_ = 0.0, den = 0.0;
  for (const Vec& x : samples) {
    ga.push_back(a.metric(as_span(x)));
    gb.push_back(b.metric(as_span(x)));
    num_ += (ga.back().array() * gb.back().array()).sum();
    den += gb.back().squaredNorm();
  }
  ScaleFit fit;
  fit.lambda = num_ / den;
  for (std::size_t i = 0; i < ga.size(); ++i) fit.residual = std::max(fit.residual, max_abs(ga[i] - fit.lambda * gb[i]));
  return fit;
}

JetMap sphere_section(int n, double t) {
  if (n < 2) throw ConfigError("sphere section needs n >= 2");
  if (!(t > 0.0)) throw ConfigError("sphere section needs a positive radius");
  return [n, t](std::span<const Jet> y) {
    Jet q = Jet::constant(y[0].nvars(), y[0].order(), 1.0);
    for (const Jet& c : y) q += c * c;
    const Jet r = sqrt(t / q);
    std::vector<Jet> z;
    for (const Jet& c : y) z.push_back(r * c);
    z.push_back(r);
    z.push_back(Jet(y[0].nvars(), y[0].order()));
    (void)n;
    return z;
  };
}

JetMap affine_projection(int n) {
  if (n < 2) throw ConfigError("affine projection needs n >= 2");
  return [n](std::span<const Jet> z) {
    const Jet& c = z[static_cast<std::size_t>(2 * n - 2)];
    const Jet& d = z[static_cast<std::size_t>(2 * n - 1)];
    const Jet inv = reciprocal(c * c + d * d);
    std::vector<Jet> y;
    for (int j = 0; j < n - 1; ++j) {
      const Jet& a = z[static_cast<std::size_t>(2 * j)];
      const Jet& b = z[static_cast<std::size_t>(2 * j + 1)];
      y.push_back((a * c + b * d) * inv);
      y.push_back((b * c - a * d) * inv);
    }
    return y;
  };
}

JetMap rotated_section(JetMap section) {
  return [section](std::span<const Jet> y) {
    std::vector<Jet> z = section(y);
    const Jet r = reciprocal(sqrt(y[0] * y[0] + y[1] * y[1]));
    const Jet ur = y[0] * r, ui = -1.0 * (y[1] * r);
    for (std::size_t k = 0; k + 1 < z.size(); k += 2) {
      const Jet a = z[k], b = z[k + 1];
      z[k] = ur * a - ui * b;
      z[k + 1] = ur * b + ui * a;
    }
    return z;
  };
}

}  // namespace kahred
