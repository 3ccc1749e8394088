#include "kahred/kahler.hpp"

#include <cmath>
#include <sstream>

#include "kahred/errors.hpp"

namespace kahred {

namespace {

std::string describe(std::span<const double> p) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

void check_order(int order, int max, const char* what) {
  if (order < 0 || order > max)
    throw ConfigError(std::string(what) + " jets of order " + std::to_string(order) +
                      " requested; at most " + std::to_string(max) + " available");
}

}  // namespace

std::vector<Jet> seed_at(std::span<const double> p, int order) {
  if (order == 0) {
    std::vector<Jet> r;
    for (double v : p) r.push_back(Jet::constant(static_cast<int>(p.size()), 0, v));
    return r;
  }
  return seed_variables(p, order);
}

Mat standard_j(int n) {
  Mat J = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    J(2 * j + 1, 2 * j) = 1.0;
    J(2 * j, 2 * j + 1) = -1.0;
  }
  return J;
}

ChartModel ChartModel::from_potential(std::string name, int n_complex, JetFn potential, Domain domain) {
  if (n_complex < 1 || 2 * n_complex > kMaxJetVars) throw ConfigError("potential chart dimension out of range");
  Data d;
  d.name = std::move(name);
  d.kind = ChartKind::Potential;
  d.n = n_complex;
  d.potential = std::move(potential);
  d.domain = std::move(domain);
  ChartModel c;
  c.d_ = std::make_shared<const Data>(std::move(d));
  return c;
}

ChartModel ChartModel::from_metric(std::string name, int m, PointJetMatrix metric,
                                   PointJetMatrix complex_structure, Domain domain) {
  if (m < 1 || 2 * m > kMaxJetVars) throw ConfigError("metric chart dimension out of range");
  Data d;
  d.name = std::move(name);
  d.kind = ChartKind::DirectMetric;
  d.n = m;
  d.metric = std::move(metric);
  d.complex_structure = std::move(complex_structure);
  d.domain = std::move(domain);
  ChartModel c;
  c.d_ = std::make_shared<const Data>(std::move(d));
  return c;
}

bool ChartModel::contains(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dim()) return false;
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return !d_->domain || d_->domain(p);
}

void ChartModel::require(std::span<const double> p, const char* op) const {
  if (!contains(p)) throw GeometryError(std::string(op) + ": point " + describe(p) + " outside chart " + d_->name);
}

Jet ChartModel::potential_jet(std::span<const double> p, int order) const {
  if (kind() != ChartKind::Potential) throw ConfigError("chart " + d_->name + " has no potential");
  check_order(order, kMaxJetOrder, "potential");
  return d_->potential(seed_at(p, order));
}

JetMatrix ChartModel::metric_jets(std::span<const double> p, int order) const {
  check_order(order, max_metric_order(), "metric");
  if (kind() == ChartKind::DirectMetric) return d_->metric(p, order);
  const Jet K = potential_jet(p, order + 2);
  const int d = dim();
  JetMatrix H(d, d, d, order);
  for (int a = 0; a < d; ++a) {
    const Jet Ka = K.derivative(a);
    for (int b = a; b < d; ++b) {
      H(a, b) = Ka.derivative(b);
      if (b != a) H(b, a) = H(a, b);
    }
  }
  const Mat J = standard_j(n());
  return (H + J.transpose() * H * J) * 0.5;
}

JetMatrix ChartModel::complex_structure_jets(std::span<const double> p, int order) const {
  check_order(order, max_metric_order(), "complex structure");
  if (kind() == ChartKind::DirectMetric) return d_->complex_structure(p, order);
  return JetMatrix::constant(standard_j(n()), dim(), order);
}

Mat ChartModel::metric(std::span<const double> p) const { return metric_jets(p, 0).value(); }
Mat ChartModel::complex_structure(std::span<const double> p) const {
  return complex_structure_jets(p, 0).value();
}

Vec PointFrame::gamma(const Vec& u, const Vec& v) const {
  Vec r(u.size());
  for (std::size_t a = 0; a < christoffel.size(); ++a) r(static_cast<Eigen::Index>(a)) = u.dot(christoffel[a] * v);
  return r;
}

std::vector<JetMatrix> christoffel_jets(const ChartModel& chart, std::span<const double> p, int order) {
  const JetMatrix g = chart.metric_jets(p, order + 1);
  const JetMatrix ginv = inverse(g.truncated(order));
  const int d = chart.dim();
  std::vector<JetMatrix> dg;  // dg[c](a, b) = ∂_c g_ab
  for (int c = 0; c < d; ++c) dg.push_back(g.derivative(c));
  std::vector<JetMatrix> G(static_cast<std::size_t>(d), JetMatrix(d, d, d, order));
  for (int b = 0; b < d; ++b)
    for (int c = b; c < d; ++c) {
      // lowered symbol Γ_{e,bc}
      std::vector<Jet> low;
      for (int e = 0; e < d; ++e) low.push_back((dg[b](e, c) + dg[c](e, b) - dg[e](b, c)) * 0.5);
      for (int a = 0; a < d; ++a) {
        Jet s(d, order);
        for (int e = 0; e < d; ++e) s += ginv(a, e) * low[static_cast<std::size_t>(e)];
        G[static_cast<std::size_t>(a)](b, c) = s;
        G[static_cast<std::size_t>(a)](c, b) = s;
      }
    }
  return G;
}

PointFrame frame_at(const ChartModel& chart, std::span<const double> p) {
  chart.require(p, "frame_at");
  PointFrame f;
  f.point = Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
  const JetMatrix gj = chart.metric_jets(p, 1);
  f.g = gj.value();
  if (max_abs(f.g - f.g.transpose()) > 1e-10 * std::max(1.0, max_abs(f.g)))
    throw GeometryError("metric not symmetric at " + describe(p) + " in chart " + chart.name());
  Eigen::LLT<Mat> llt(f.g);
  if (llt.info() != Eigen::Success)
    throw GeometryError("metric not positive definite at " + describe(p) + " in chart " + chart.name());
  f.g_inv = llt.solve(Mat::Identity(chart.dim(), chart.dim()));
  f.J = chart.complex_structure(p);
  f.omega = f.J.transpose() * f.g;
  for (const JetMatrix& G : christoffel_jets(chart, p, 0)) f.christoffel.push_back(G.value());
  return f;
}

CurvatureData curvature_at(const ChartModel& chart, std::span<const double> p) {
  chart.require(p, "curvature_at");
  const int d = chart.dim();
  const std::vector<JetMatrix> G = christoffel_jets(chart, p, 1);
  CurvatureData k;
  k.dim = d;
  k.riemann.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
  auto val = [&](int a, int b, int c) { return G[static_cast<std::size_t>(a)](b, c).value(); };
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) {
          double r = G[static_cast<std::size_t>(a)](e, b).d(c) - G[static_cast<std::size_t>(a)](c, b).d(e);
          for (int m = 0; m < d; ++m) r += val(a, c, m) * val(m, e, b) - val(a, e, m) * val(m, c, b);
          k.riemann[static_cast<std::size_t>(((a * d + b) * d + c) * d + e)] = r;
        }
  k.ricci = Mat::Zero(d, d);
  for (int b = 0; b < d; ++b)
    for (int e = 0; e < d; ++e)
      for (int a = 0; a < d; ++a) k.ricci(b, e) += k.R(a, b, a, e);
  const Mat g = chart.metric(p);
  const Mat J = chart.complex_structure(p);
  k.ricci_form = J.transpose() * k.ricci;
  k.scalar = (g.inverse() * k.ricci).trace();
  if (chart.kind() == ChartKind::Potential) k.ricci_form_potential = -0.5 * ddc(chart, half_log_det_metric(chart), p);
  return k;
}

double CurvatureData::bianchi_residual() const {
  double worst = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d)
          worst = std::max(worst, std::abs(R(a, b, c, d) + R(a, c, d, b) + R(a, d, b, c)));
  return worst;
}

double CurvatureData::ricci_path_residual() const {
  if (ricci_form_potential.size() == 0) return 0.0;
  return max_abs(ricci_form - ricci_form_potential);
}

double hol_sect_curv(const PointFrame& frame, const CurvatureData& curv, const Vec& v) {
  const double vv = v.dot(frame.g * v);
  if (!(vv > 0.0)) throw ArgumentError("holomorphic sectional curvature of a zero vector");
  const Vec w = frame.J * v;
  const int d = curv.dim;
  // R_{abcd} X^a Y^b X^c Y^d with the first index lowered
  Vec gx = frame.g * v;
  double num = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) num += gx(a) * curv.R(a, b, c, e) * w(b) * v(c) * w(e);
  const double ww = w.dot(frame.g * w);
  const double vw = v.dot(frame.g * w);
  return num / (vv * ww - vw * vw);
}

double hol_sect_curv(const ChartModel& chart, std::span<const double> p, const Vec& v) {
  if (v.norm() == 0.0) throw ArgumentError("holomorphic sectional curvature of a zero vector");
  return hol_sect_curv(frame_at(chart, p), curvature_at(chart, p), v);
}

PointJet half_log_det_metric(const ChartModel& chart) {
  return [chart](std::span<const double> p, int order) {
    const Jet d = det(chart.metric_jets(p, order));
    if (!(d.value() > 0.0)) throw GeometryError("metric determinant not positive at " + describe(p));
    return 0.5 * log(d);
  };
}

std::vector<Jet> dc_jets(const ChartModel& chart, const PointJet& f, std::span<const double> p, int order) {
  const Jet F = f(p, order + 1);
  const JetMatrix J = chart.complex_structure_jets(p, order);
  const int d = chart.dim();
  std::vector<Jet> dF;
  for (int b = 0; b < d; ++b) dF.push_back(F.derivative(b));
  std::vector<Jet> r;
  for (int a = 0; a < d; ++a) {
    Jet s(d, order);
    for (int b = 0; b < d; ++b) s -= J(b, a) * dF[static_cast<std::size_t>(b)];
    r.push_back(s);
  }
  return r;
}

Vec dc_form(const ChartModel& chart, const PointJet& f, std::span<const double> p) {
  return values(dc_jets(chart, f, p, 0));
}

Mat exterior_derivative(std::span<const Jet> form) {
  const int d = static_cast<int>(form.size());
  Mat r(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      r(a, b) = form[static_cast<std::size_t>(b)].d(a) - form[static_cast<std::size_t>(a)].d(b);
  return r;
}

Mat ddc(const ChartModel& chart, const PointJet& f, std::span<const double> p) {
  return exterior_derivative(dc_jets(chart, f, p, 1));
}

EinsteinFit fit_einstein(const ChartModel& chart, const std::vector<Vec>& samples) {
  if (samples.size() < 2) throw ArgumentError("Einstein fit needs at least two samples");
  std::vector<Mat> rho, om;
  double num = 0.0, den = 0.0, rmax = 0.0;
  for (const Vec& s : samples) {
    std::span<const double> p(s.data(), static_cast<std::size_t>(s.size()));
    rho.push_back(curvature_at(chart, p).ricci_form);
    om.push_back(frame_at(chart, p).omega);
    num += (rho.back().array() * om.back().array()).sum();
    den += om.back().squaredNorm();
    rmax = std::max(rmax, max_abs(rho.back()));
  }
  if (den < 1e-24) throw GeometryError("Einstein fit degenerate: symplectic form vanishes on samples");
  EinsteinFit fit;
  fit.ricci_flat = rmax < 1e-10;
  fit.C = fit.ricci_flat ? 0.0 : num / den;
  for (std::size_t i = 0; i < rho.size(); ++i) fit.residual = std::max(fit.residual, max_abs(rho[i] - fit.C * om[i]));
  return fit;
}

PointJet conformal_factor(const ChartModel& chart, double C) {
  if (C == 0.0) throw ArgumentError("conformal factor needs a non-zero Einstein constant");
  if (chart.kind() != ChartKind::Potential) throw ConfigError("conformal factor needs a potential chart");
  const int n = chart.n();
  const PointJet hld = half_log_det_metric(chart);
  // log det h = (1/2) log det g - n log 2
  auto raw = [chart, hld, C, n](std::span<const double> p, int order) {
    return (hld(p, order) - n * std::log(2.0) + C * chart.potential_jet(p, order)) * (-1.0 / (2 * n));
  };
  const Vec centre = Vec::Zero(chart.dim());
  const double f0 = raw({centre.data(), static_cast<std::size_t>(centre.size())}, 0).value();
  return [raw, f0](std::span<const double> p, int order) { return raw(p, order) - f0; };
}

double conformal_factor_f(const ChartModel& chart, double C, std::span<const double> p) {
  chart.require(p, "conformal_factor_f");
  return conformal_factor(chart, C)(p, 0).value();
}

double conformal_residual(const ChartModel& chart, double C, const PointJet& f, std::span<const double> p) {
  const Mat rho = curvature_at(chart, p).ricci_form;
  const Mat omega = frame_at(chart, p).omega;
  return max_abs(chart.n() * ddc(chart, f, p) - (rho - C * omega));
}

}  // namespace kahred
