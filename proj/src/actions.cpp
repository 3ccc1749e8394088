#include "kahred/actions.hpp"

#include <cmath>
#include <complex>

#include "kahred/cjet.hpp"
#include "kahred/errors.hpp"

namespace kahred {

namespace {

using cd = std::complex<double>;

CJet scale(const CJet& z, cd c) { return {z.re * c.real() - z.im * c.imag(), z.im * c.real() + z.re * c.imag()}; }

std::vector<CJet> to_complex(std::span<const Jet> x) {
  std::vector<CJet> z;
  for (std::size_t j = 0; 2 * j + 1 < x.size(); ++j) z.emplace_back(x[2 * j], x[2 * j + 1]);
  return z;
}

std::vector<Jet> to_real(const std::vector<CJet>& z) {
  std::vector<Jet> x;
  for (const CJet& c : z) {
    x.push_back(c.re);
    x.push_back(c.im);
  }
  return x;
}

// d/dt|0 of a flow, seeded as variable 2n of a (2n + 1)-variable jet.
template <class Flow>
std::vector<Jet> seeded_velocity(std::span<const double> p, int order, Flow&& flow) {
  const int d = static_cast<int>(p.size());
  if (order < 0 || order + 1 > kMaxJetOrder) throw ConfigError("fundamental field order out of range");
  if (d + 1 > kMaxJetVars) throw ConfigError("fundamental field: too many variables");
  std::vector<double> base(p.begin(), p.end());
  base.push_back(0.0);
  std::vector<Jet> xt = seed_variables(base, order + 1);
  const Jet t = xt.back();
  xt.pop_back();
  std::vector<Jet> y = flow(std::span<const Jet>(xt), t);
  std::vector<Jet> r;
  for (const Jet& c : y) r.push_back(c.derivative(d).restricted(d));
  return r;
}

Vec as_vec(std::span<const double> p) { return Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size())); }
std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

UnitaryGenerator UnitaryGenerator::from_hermitian(std::string name, const Eigen::MatrixXcd& H) {
  if (H.rows() != H.cols()) throw ConfigError("generator must be square");
  if ((H - H.adjoint()).norm() > 1e-12) throw ConfigError("generator " + name + " is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  return {std::move(name), es.eigenvectors(), es.eigenvalues()};
}

std::vector<Jet> UnitaryGenerator::flow(std::span<const Jet> x, const Jet& theta) const {
  const std::vector<CJet> z = to_complex(x);
  const int n = static_cast<int>(z.size());
  if (n != frame.rows()) throw ConfigError("generator " + name + " has the wrong dimension");
  std::vector<CJet> zeta;
  for (int k = 0; k < n; ++k) {
    CJet s = CJet::real(Jet(theta.nvars(), theta.order()));
    for (int j = 0; j < n; ++j) s += scale(z[static_cast<std::size_t>(j)], std::conj(frame(j, k)));
    zeta.push_back(s * expi(theta * weights(k)));
  }
  std::vector<CJet> out;
  for (int j = 0; j < n; ++j) {
    CJet s = CJet::real(Jet(theta.nvars(), theta.order()));
    for (int k = 0; k < n; ++k) s += scale(zeta[static_cast<std::size_t>(k)], frame(j, k));
    out.push_back(s);
  }
  return to_real(out);
}

std::vector<UnitaryGenerator> unitary_algebra(int n) {
  std::vector<UnitaryGenerator> g;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
    H(j, j) = 1.0;
    g.push_back(UnitaryGenerator::from_hermitian("E" + std::to_string(j) + std::to_string(j), H));
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
      H(j, k) = H(k, j) = 1.0;
      const std::string jk = std::to_string(j) + std::to_string(k);
      g.push_back(UnitaryGenerator::from_hermitian("S" + jk, H));
      H(j, k) = cd(0, -1);
      H(k, j) = cd(0, 1);
      g.push_back(UnitaryGenerator::from_hermitian("A" + jk, H));
    }
  return g;
}

GroupAction GroupAction::torus(int n, const Mat& weights, std::vector<UnitaryGenerator> ambient) {
  if (n < 1 || weights.cols() != n || weights.rows() < 1 || weights.rows() > n)
    throw ConfigError("torus weights must be an l x n matrix with 1 <= l <= n");
  for (const UnitaryGenerator& u : ambient)
    if (u.frame.rows() != n) throw ConfigError("ambient generator " + u.name + " has the wrong dimension");
  GroupAction a;
  a.n_ = n;
  a.weights_ = weights;
  a.ambient_ = std::move(ambient);
  return a;
}

std::vector<Jet> GroupAction::flow(std::span<const Jet> x, std::span<const Jet> theta) const {
  if (static_cast<int>(x.size()) != dim() || static_cast<int>(theta.size()) != rank())
    throw ConfigError("flow: argument sizes do not match the action");
  std::vector<CJet> z = to_complex(x);
  for (int j = 0; j < n_; ++j) {
    Jet phase = theta[0] * weights_(0, j);
    for (int i = 1; i < rank(); ++i) phase += theta[static_cast<std::size_t>(i)] * weights_(i, j);
    z[static_cast<std::size_t>(j)] = z[static_cast<std::size_t>(j)] * expi(phase);
  }
  return to_real(z);
}

Vec GroupAction::flow(const Vec& p, const Vec& theta) const {
  std::vector<Jet> x, th;
  for (int k = 0; k < p.size(); ++k) x.push_back(Jet::constant(1, 0, p(k)));
  for (int k = 0; k < theta.size(); ++k) th.push_back(Jet::constant(1, 0, theta(k)));
  return values(flow(x, th));
}

std::vector<Jet> GroupAction::fundamental_field(int i, std::span<const double> p, int order) const {
  if (i < 0 || i >= rank()) throw ArgumentError("generator index out of range");
  return seeded_velocity(p, order, [&](std::span<const Jet> x, const Jet& t) {
    std::vector<Jet> th;
    for (int k = 0; k < rank(); ++k) th.push_back(k == i ? t : Jet(t.nvars(), t.order()));
    return flow(x, th);
  });
}

Vec GroupAction::fundamental_field(int i, std::span<const double> p) const {
  return values(fundamental_field(i, p, 0));
}

Mat GroupAction::fields(std::span<const double> p) const {
  Mat X(dim(), rank());
  for (int i = 0; i < rank(); ++i) X.col(i) = fundamental_field(i, p);
  return X;
}

FieldJets GroupAction::field(int i) const {
  GroupAction self = *this;
  return [self, i](std::span<const double> p, int order) { return self.fundamental_field(i, p, order); };
}

Vec GroupAction::ambient_field(int k, std::span<const double> p) const {
  const UnitaryGenerator& u = ambient_.at(static_cast<std::size_t>(k));
  return values(seeded_velocity(p, 0, [&](std::span<const Jet> x, const Jet& t) { return u.flow(x, t); }));
}

Jet divergence_jets(const ChartModel& chart, const FieldJets& V, std::span<const double> p, int order) {
  chart.require(p, "divergence");
  const Jet d = det(chart.metric_jets(p, order + 1));
  if (!(d.value() > 0.0)) throw GeometryError("divergence: metric determinant not positive");
  const Jet s = sqrt(d);
  const std::vector<Jet> v = V(p, order + 1);
  Jet sum(chart.dim(), order);
  for (int a = 0; a < chart.dim(); ++a) sum += (s * v[static_cast<std::size_t>(a)]).derivative(a);
  return sum / s.truncated(order);
}

double divergence_at(const ChartModel& chart, const FieldJets& V, std::span<const double> p) {
  return divergence_jets(chart, V, p, 0).value();
}

FieldJets j_field(const ChartModel& chart, const GroupAction& a, int i) {
  FieldJets X = a.field(i);
  return [chart, X](std::span<const double> p, int order) {
    return chart.complex_structure_jets(p, order) * std::span<const Jet>(X(p, order));
  };
}

MomentMap MomentMap::quadratic(const ChartModel& chart, const GroupAction& a, std::vector<double> shifts) {
  if (static_cast<int>(shifts.size()) != a.rank()) throw ConfigError("one moment shift per generator required");
  if (chart.dim() != a.dim()) throw ConfigError("action and chart dimensions differ");
  const Vec origin = Vec::Zero(chart.dim());
  if (max_abs(chart.metric(as_span(origin)) - Mat::Identity(chart.dim(), chart.dim())) > 1e-12)
    throw ConfigError("quadratic moment map needs the flat chart, got " + chart.name());
  MomentMap m;
  m.kind_ = MomentKind::Quadratic;
  m.chart_ = chart;
  m.action_ = a;
  m.shifts_ = std::move(shifts);
  return m;
}

MomentMap MomentMap::canonical(const ChartModel& chart, const GroupAction& a, double C, PointJet f) {
  if (C == 0.0) throw ArgumentError("canonical moment map needs a non-zero Einstein constant (use a quadratic map)");
  if (chart.dim() != a.dim()) throw ConfigError("action and chart dimensions differ");
  MomentMap m;
  m.kind_ = MomentKind::Canonical;
  m.chart_ = chart;
  m.action_ = a;
  m.shifts_.assign(static_cast<std::size_t>(a.rank()), 0.0);
  m.C_ = C;
  m.f_ = std::move(f);
  return m;
}

Jet MomentMap::jet(int i, std::span<const double> p, int order) const {
  if (order < 0 || order > max_order()) throw ConfigError("moment map jets of order " + std::to_string(order) + " unavailable");
  chart_.require(p, "moment map");
  if (kind_ == MomentKind::Quadratic) {
    const std::vector<Jet> x = seed_at(p, order);
    Jet s = Jet::constant(chart_.dim(), order, shift(i));
    for (int j = 0; j < action_.n(); ++j) {
      const Jet r2 = x[static_cast<std::size_t>(2 * j)] * x[static_cast<std::size_t>(2 * j)] +
                     x[static_cast<std::size_t>(2 * j + 1)] * x[static_cast<std::size_t>(2 * j + 1)];
      s -= 0.5 * action_.weights()(i, j) * r2;
    }
    return s;
  }
  Jet s = -0.5 * divergence_jets(chart_, j_field(chart_, action_, i), p, order);
  if (f_) {
    const std::vector<Jet> dcf = dc_jets(chart_, f_, p, order);
    const std::vector<Jet> X = action_.fundamental_field(i, p, order);
    s += static_cast<double>(chart_.n()) * dot(dcf, X);
  }
  return s / C_;
}

double MomentMap::value(int i, std::span<const double> p) const { return jet(i, p, 0).value(); }

Vec MomentMap::values(std::span<const double> p) const {
  Vec v(rank());
  for (int i = 0; i < rank(); ++i) v(i) = value(i, p);
  return v;
}

Mat MomentMap::differential(std::span<const double> p) const {
  Mat D(rank(), chart_.dim());
  for (int i = 0; i < rank(); ++i) {
    const Jet j = jet(i, p, 1);
    for (int a = 0; a < chart_.dim(); ++a) D(i, a) = j.d(a);
  }
  return D;
}

double quadratic_moment(std::span<const double> p, const std::vector<int>& weights, double shift) {
  if (p.size() != 2 * weights.size()) throw ArgumentError("quadratic moment: one weight per complex coordinate");
  double s = shift;
  for (std::size_t j = 0; j < weights.size(); ++j) s -= 0.5 * weights[j] * (p[2 * j] * p[2 * j] + p[2 * j + 1] * p[2 * j + 1]);
  return s;
}

double canonical_moment(const ChartModel& chart, const GroupAction& a, double C, const PointJet& f,
                        std::span<const double> p, int generator) {
  return MomentMap::canonical(chart, a, C, f).value(generator, p);
}

double moment_property_residual(const MomentMap& m, std::span<const double> p) {
  const PointFrame fr = frame_at(m.chart(), p);
  const Mat D = m.differential(p);
  const Mat X = m.action().fields(p);
  // omega(X, e_a) = (X^T Omega)_a
  return max_abs(D - X.transpose() * fr.omega);
}

double orbit_invariance_residual(const MomentMap& m, std::span<const double> p, const Vec& theta) {
  const Vec q = m.action().flow(as_vec(p), theta);
  return max_abs(m.values(as_span(q)) - m.values(p));
}

std::vector<Vec> level_sample(const MomentMap& m, const Vec& c, const std::vector<Vec>& seeds, LevelOptions opt) {
  if (c.size() != m.rank()) throw ArgumentError("level value needs one entry per generator");
  std::vector<Vec> out;
  double worst = 0.0;
  bool failed = false;
  for (const Vec& seed : seeds) {
    Vec p = seed;
    double r = 0.0;
    bool done = false;
    try {
      Vec res = m.values(as_span(p)) - c;
      r = max_abs(res);
      for (int it = 0; it < opt.max_iterations && r >= opt.tolerance; ++it) {
        const Mat D = m.differential(as_span(p));
        const Mat G = m.chart().metric(as_span(p)).llt().solve(D.transpose());  // gradients as columns
        const Mat M = D * G;
        Eigen::FullPivLU<Mat> lu(M);
        if (!lu.isInvertible() || std::abs(M.determinant()) < 1e-300) break;
        const Vec step = -G * lu.solve(res);
        double lambda = 1.0;
        Vec q;
        Vec qres;
        double qr = 0.0;
        while (true) {
          q = p + lambda * step;
          if (m.chart().contains(as_span(q))) {
            qres = m.values(as_span(q)) - c;
            qr = max_abs(qres);
            if (qr < r) break;
          }
          lambda *= 0.5;
          if (lambda < 1e-6) break;
        }
        if (lambda < 1e-6) break;
        p = q;
        res = qres;
        r = qr;
      }
      done = r < opt.tolerance;
    } catch (const GeometryError&) {
      done = false;
    }
    if (!done) {
      failed = true;
      worst = std::max(worst, std::isfinite(r) ? r : 1e300);
    }
    out.push_back(p);
  }
  if (failed) throw RootFindError("level_sample did not converge", worst);
  return out;
}

double moment_laplacian_fd(const MomentMap& m, int i, std::span<const double> p, double h) {
  const ChartModel& chart = m.chart();
  const int d = chart.dim();
  auto flux = [&](const Vec& x, int a) {
    const Mat g = chart.metric(as_span(x));
    const Vec du = m.differential(as_span(x)).row(i).transpose();
    return std::sqrt(g.determinant()) * g.llt().solve(du)(a);
  };
  const Vec p0 = as_vec(p);
  double div = 0.0;
  for (int a = 0; a < d; ++a) {
    auto central = [&](double s) {
      Vec xp = p0, xm = p0;
      xp(a) += s;
      xm(a) -= s;
      return (flux(xp, a) - flux(xm, a)) / (2 * s);
    };
    div += (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
  return -div / std::sqrt(chart.metric(p).determinant());
}

bool near_singular(const GroupAction& a, const ChartModel& chart, std::span<const double> p, double threshold) {
  const Mat g = chart.metric(p);
  const Mat X = a.fields(p);
  for (int i = 0; i < X.cols(); ++i)
    if (std::sqrt(X.col(i).dot(g * X.col(i))) < threshold) return true;
  return false;
}

InvarianceReport invariance_residuals(const MomentMap& m, const std::vector<Vec>& points) {
  InvarianceReport r;
  if (points.empty()) return r;
  const Vec level0 = m.values(as_span(points.front()));
  for (const Vec& p : points)
    if (max_abs(m.values(as_span(p)) - level0) > 1e-8)
      throw ArgumentError("invariance_residuals: points do not lie on one level set");
  const ChartModel& chart = m.chart();
  const GroupAction& a = m.action();
  const int n = chart.n();
  double gmin = INFINITY, gmax = -INFINITY, lmin = INFINITY, lmax = -INFINITY;
  for (const Vec& p : points) {
    const auto ps = as_span(p);
    if (near_singular(a, chart, ps)) {
      ++r.excluded;
      continue;
    }
    ++r.used;
    const PointFrame fr = frame_at(chart, ps);
    const Mat D = m.differential(ps);
    for (int k = 0; k < static_cast<int>(a.ambient().size()); ++k)
      r.s_invariance = std::max(r.s_invariance, max_abs(D * a.ambient_field(k, ps)));
    const Mat X = a.fields(ps);
    r.isotropy = std::max(r.isotropy, max_abs(X.transpose() * fr.omega * X));
    for (int i = 0; i < m.rank(); ++i) {
      const Vec du = D.row(i).transpose();
      const double g2 = du.dot(fr.g_inv * du);
      gmin = std::min(gmin, g2);
      gmax = std::max(gmax, g2);
      const double lap = moment_laplacian_fd(m, i, ps);
      lmin = std::min(lmin, lap);
      lmax = std::max(lmax, lap);
      if (m.kind() == MomentKind::Canonical) {
        double drift = 0.0;
        if (m.conformal()) {
          const Jet f = m.conformal()(ps, 1);
          Vec df(chart.dim());
          for (int b = 0; b < chart.dim(); ++b) df(b) = f.d(b);
          drift = 2.0 * n * du.dot(fr.g_inv * df);
        }
        r.eigenfunction = std::max(r.eigenfunction, std::abs(lap - drift - 2.0 * m.C() * m.value(i, ps)));
      }
    }
  }
  if (r.used > 0) {
    r.transnormal_spread = gmax - gmin;
    r.laplacian_spread = lmax - lmin;
  }
  return r;
}

}  // namespace kahred
