#include "kahred/lagrangian.hpp"

#include <cmath>

#include "kahred/errors.hpp"

namespace kahred {

namespace {

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Mat tangent_of(std::span<const Jet> phi, int m) {
  Mat T(static_cast<Eigen::Index>(phi.size()), m);
  for (std::size_t k = 0; k < phi.size(); ++k)
    for (int a = 0; a < m; ++a) T(static_cast<Eigen::Index>(k), a) = phi[k].d(a);
  return T;
}

double induced_volume_density(const ChartModel& chart, const Mat& T, const Vec& p) {
  const Mat G = T.transpose() * chart.metric(as_span(p)) * T;
  const double d = G.determinant();
  if (!(d > 0.0)) throw GeometryError("induced metric degenerate in volume");
  return std::sqrt(d);
}

Vec richardson_central(const std::function<Vec(double)>& diff, double h) {
  return (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
}

}  // namespace

void Immersion::validate() const {
  const std::size_t m = static_cast<std::size_t>(param_dim);
  if (param_dim < 1 || counts.size() != m || static_cast<std::size_t>(extent.size()) != m ||
      periodic.size() != m || static_cast<std::size_t>(origin.size()) != m || !map)
    throw ConfigError("immersion " + name + " is malformed");
  for (std::size_t a = 0; a < m; ++a)
    if (counts[a] < 1 || !(extent(static_cast<Eigen::Index>(a)) > 0.0))
      throw ConfigError("immersion " + name + ": empty grid factor");
}

std::vector<Jet> Immersion::jets(const Vec& u, int order) const { return map(seed_at(as_span(u), order)); }

Vec Immersion::point(const Vec& u) const { return values(jets(u, 0)); }

Mat Immersion::differential(const Vec& u) const { return tangent_of(jets(u, 1), param_dim); }

Vec Immersion::spacing() const {
  Vec s(param_dim);
  for (int a = 0; a < param_dim; ++a) {
    const int c = counts[static_cast<std::size_t>(a)];
    s(a) = periodic[static_cast<std::size_t>(a)] ? extent(a) / c : extent(a) / std::max(c - 1, 1);
  }
  return s;
}

std::vector<Vec> Immersion::grid() const {
  validate();
  const Vec s = spacing();
  std::vector<Vec> pts;
  std::vector<int> idx(static_cast<std::size_t>(param_dim), 0);
  while (true) {
    Vec u(param_dim);
    for (int a = 0; a < param_dim; ++a) u(a) = origin(a) + s(a) * idx[static_cast<std::size_t>(a)];
    pts.push_back(u);
    int a = 0;
    for (; a < param_dim; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < counts[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a == param_dim) break;
  }
  return pts;
}

std::vector<double> Immersion::weights() const {
  validate();
  const Vec s = spacing();
  std::vector<double> w;
  std::vector<int> idx(static_cast<std::size_t>(param_dim), 0);
  while (true) {
    double c = 1.0;
    for (int a = 0; a < param_dim; ++a) {
      const std::size_t k = static_cast<std::size_t>(a);
      const bool end = !periodic[k] && counts[k] > 1 && (idx[k] == 0 || idx[k] == counts[k] - 1);
      c *= end ? 0.5 * s(a) : s(a);
    }
    w.push_back(c);
    int a = 0;
    for (; a < param_dim; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < counts[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a == param_dim) break;
  }
  return w;
}

Immersion product_torus(const std::vector<double>& moduli, int grid) {
  if (moduli.empty()) throw ConfigError("product torus needs at least one modulus");
  for (double r : moduli)
    if (!(r > 0.0)) throw ConfigError("product torus moduli must be positive");
  const int m = static_cast<int>(moduli.size());
  Immersion imm;
  imm.name = "torus";
  imm.param_dim = m;
  imm.counts.assign(static_cast<std::size_t>(m), grid);
  imm.extent = Vec::Constant(m, 2 * M_PI);
  imm.periodic.assign(static_cast<std::size_t>(m), true);
  imm.origin = Vec::Zero(m);
  imm.map = [moduli](std::span<const Jet> u) {
    std::vector<Jet> x;
    for (std::size_t j = 0; j < moduli.size(); ++j) {
      x.push_back(moduli[j] * cos(u[j]));
      x.push_back(moduli[j] * sin(u[j]));
    }
    return x;
  };
  imm.validate();
  return imm;
}

Immersion transformed(const Immersion& imm, JetMap post, std::string name) {
  Immersion out = imm;
  out.name = std::move(name);
  JetMap inner = imm.map;
  out.map = [inner, post](std::span<const Jet> u) {
    const std::vector<Jet> x = inner(u);
    return post(x);
  };
  return out;
}

MeanCurvatureData mean_curvature(const ChartModel& chart, const Immersion& imm, const Vec& u, const PointJet& f) {
  const int m = imm.param_dim;
  const std::vector<Jet> phi = imm.jets(u, 2);
  MeanCurvatureData mc;
  mc.point = values(phi);
  chart.require(as_span(mc.point), "mean_curvature");
  const PointFrame fr = frame_at(chart, as_span(mc.point));
  const int d = chart.dim();
  mc.tangent = tangent_of(phi, m);
  Eigen::JacobiSVD<Mat> svd(mc.tangent);
  if (svd.singularValues().minCoeff() < 1e-8)
    throw GeometryError("immersion " + imm.name + " loses rank at a grid point");
  mc.G = mc.tangent.transpose() * fr.g * mc.tangent;
  const Mat Q = gram_schmidt(mc.tangent, fr.g);
  if (Q.cols() < m) throw GeometryError("immersion " + imm.name + ": degenerate induced metric");
  mc.normal_projector = Mat::Identity(d, d) - Q * Q.transpose() * fr.g;
  const Mat Ginv = mc.G.inverse();
  mc.H = Vec::Zero(d);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Vec acc(d);
      for (int k = 0; k < d; ++k) acc(k) = phi[static_cast<std::size_t>(k)].dd(a, b);
      acc += fr.gamma(mc.tangent.col(a), mc.tangent.col(b));
      mc.second.push_back(mc.normal_projector * acc);
      mc.H += Ginv(a, b) * mc.second.back();
    }
  mc.alpha_H = (mc.H.transpose() * fr.omega * mc.tangent).transpose();
  mc.alpha_tilde = mc.alpha_H;
  if (f) mc.alpha_tilde -= chart.n() * mc.tangent.transpose() * dc_form(chart, f, as_span(mc.point));
  return mc;
}

double lagrangian_residual(const ChartModel& chart, const Immersion& imm, const Vec& u) {
  const std::vector<Jet> phi = imm.jets(u, 1);
  const Vec p = values(phi);
  const Mat T = tangent_of(phi, imm.param_dim);
  return max_abs(T.transpose() * frame_at(chart, as_span(p)).omega * T);
}

double lagrangian_normal_residual(const ChartModel& chart, const MeanCurvatureData& mc) {
  const PointFrame fr = frame_at(chart, as_span(mc.point));
  const Vec JH = fr.J * mc.H;
  const Vec normal_part = mc.normal_projector * JH;
  const double tangency = std::sqrt(std::max(0.0, normal_part.dot(fr.g * normal_part)));
  const Vec via_metric = (JH.transpose() * fr.g * mc.tangent).transpose();
  return std::max(tangency, max_abs(mc.alpha_H - via_metric));
}

Mat parameter_exterior_derivative(const Immersion& imm, const std::function<Vec(const Vec&)>& form, const Vec& u) {
  const int m = imm.param_dim;
  for (int c : imm.counts)
    if (c < 3) throw ConfigError("grid of " + imm.name + " too coarse for a centred stencil");
  const Vec s = imm.spacing();
  Mat D(m, m);  // D(a, b) = d_a form_b
  for (int a = 0; a < m; ++a) {
    double h = s(a);
    while (h > 2e-3) h *= 0.5;
    auto central = [&](double step) {
      Vec up = u, dn = u;
      up(a) += step;
      dn(a) -= step;
      return Vec((form(up) - form(dn)) / (2 * step));
    };
    D.row(a) = richardson_central(central, h).transpose();
  }
  return D - D.transpose();
}

double dazord_residual(const ChartModel& chart, const Immersion& imm, const Vec& u) {
  const Mat dalpha = parameter_exterior_derivative(
      imm, [&](const Vec& v) { return mean_curvature(chart, imm, v).alpha_H; }, u);
  const std::vector<Jet> phi = imm.jets(u, 1);
  const Vec p = values(phi);
  const Mat T = tangent_of(phi, imm.param_dim);
  const Mat rho = curvature_at(chart, as_span(p)).ricci_form;
  return max_abs(dalpha - T.transpose() * rho * T);
}

double closedness_residual(const ChartModel& chart, const Immersion& imm, const Vec& u, const PointJet& f) {
  return max_abs(parameter_exterior_derivative(
      imm, [&](const Vec& v) { return mean_curvature(chart, imm, v, f).alpha_tilde; }, u));
}

OrbitData orbit_norm_and_mean_curvature(const ChartModel& chart, const GroupAction& a, std::span<const double> p) {
  const PointFrame fr = frame_at(chart, p);
  const Mat X = a.fields(p);
  const int l = a.rank(), d = chart.dim();
  for (int i = 0; i < l; ++i)
    if (std::sqrt(X.col(i).dot(fr.g * X.col(i))) < 1e-6) throw GeometryError("singular orbit: fundamental field vanishes");
  OrbitData o;
  const Mat GK = X.transpose() * fr.g * X;
  o.nu = std::sqrt(GK.determinant());

  const Vec base = Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
  Immersion orbit;
  orbit.name = "orbit";
  orbit.param_dim = l;
  orbit.counts.assign(static_cast<std::size_t>(l), 1);
  orbit.extent = Vec::Constant(l, 2 * M_PI);
  orbit.periodic.assign(static_cast<std::size_t>(l), true);
  orbit.origin = Vec::Zero(l);
  orbit.map = [a, base](std::span<const Jet> theta) {
    std::vector<Jet> x;
    for (int k = 0; k < base.size(); ++k) x.push_back(Jet::constant(theta[0].nvars(), theta[0].order(), base(k)));
    return a.flow(x, theta);
  };
  const Vec H = mean_curvature(chart, orbit, Vec::Zero(l)).H;
  const Mat off_jk = Mat::Identity(d, d) - orthogonal_projector(fr.J * X, fr.g);
  o.H_hat = off_jk * H;

  // log nu as jets: fundamental fields and metric at order 1
  const JetMatrix g = chart.metric_jets(p, 1);
  JetMatrix GKj(l, l, d, 1);
  std::vector<std::vector<Jet>> Xj;
  for (int i = 0; i < l; ++i) Xj.push_back(a.fundamental_field(i, p, 1));
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) GKj(i, j) = dot(Xj[static_cast<std::size_t>(i)], g * std::span<const Jet>(Xj[static_cast<std::size_t>(j)]));
  const Jet log_nu = 0.5 * log(det(GKj));
  Vec dl(d);
  for (int b = 0; b < d; ++b) dl(b) = log_nu.d(b);
  o.grad_log_nu = off_jk * (fr.g_inv * dl);
  const Vec r = o.H_hat + o.grad_log_nu;
  o.residual = std::sqrt(std::max(0.0, r.dot(fr.g * r)));
  return o;
}

double volume(const ChartModel& chart, const Immersion& imm, Execution ex) {
  const std::vector<Vec> grid = imm.grid();
  const std::vector<double> w = imm.weights();
  const std::vector<double> dens = map_points<double>(
      grid.size(),
      [&](std::size_t i) {
        const std::vector<Jet> phi = imm.jets(grid[i], 1);
        return induced_volume_density(chart, tangent_of(phi, imm.param_dim), values(phi));
      },
      ex);
  double v = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) v += w[i] * dens[i];
  return v;
}

FirstVariation first_variation(const ChartModel& chart, const Immersion& imm, const JetMap& variation, double h,
                               Execution ex) {
  if (!(h > 0.0)) throw ArgumentError("first variation step must be positive");
  auto displaced = [&](double s) {
    JetMap inner = imm.map;
    Immersion out = imm;
    out.map = [inner, variation, s](std::span<const Jet> u) {
      std::vector<Jet> x = inner(u);
      const std::vector<Jet> v = variation(u);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += s * v[k];
      return x;
    };
    return out;
  };
  auto D = [&](double s) { return (volume(chart, displaced(s), ex) - volume(chart, displaced(-s), ex)) / (2 * s); };
  const double d1 = D(h), d2 = D(0.5 * h);

  FirstVariation fv;
  const std::vector<Vec> grid = imm.grid();
  const std::vector<double> w = imm.weights();
  struct Local {
    double pred = 0.0, scale = 0.0;
  };
  const std::vector<Local> loc = map_points<Local>(
      grid.size(),
      [&](std::size_t i) {
        const MeanCurvatureData mc = mean_curvature(chart, imm, grid[i]);
        const Vec V = values(variation(seed_at(as_span(grid[i]), 0)));
        const Mat g = chart.metric(as_span(mc.point));
        const double dens = std::sqrt(mc.G.determinant());
        return Local{-mc.H.dot(g * V) * dens, std::sqrt(V.dot(g * V)) * dens};
      },
      ex);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fv.predicted += w[i] * loc[i].pred;
    fv.scale += w[i] * loc[i].scale;
  }
  // three-point test: the O(h^2) error must stay small against the variation scale
  if (std::abs(d1 - d2) > 0.01 * fv.scale)
    throw OracleError("first variation step " + std::to_string(h) + " too large: D(h) = " + std::to_string(d1) +
                      ", D(h/2) = " + std::to_string(d2));
  fv.oracle = (4.0 * d2 - d1) / 3.0;
  return fv;
}

}  // namespace kahred
