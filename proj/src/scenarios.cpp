#include "kahred/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "kahred/errors.hpp"
#include "kahred/potentials.hpp"

namespace kahred {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(const Vec& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
  return s + ")";
}

// mt19937_64 bits mapped by hand so samples do not depend on the standard library
class Sampler {
 public:
  explicit Sampler(unsigned long long seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  Vec box(int dim, double r) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = uniform(-r, r);
    return v;
  }
  Vec angles(int count) {
    Vec v(count);
    for (int i = 0; i < count; ++i) v(i) = uniform(0.0, 2.0 * std::numbers::pi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

std::vector<Vec> box_points(Sampler& rng, int dim, int count, double r) {
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i) pts.push_back(rng.box(dim, r));
  return pts;
}

std::vector<Vec> level_points(const Scenario& sc, Sampler& rng, int count) {
  const ReductionSetup& s = sc.reduction();
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i) {
    Vec p = s.quotient_n() > 0 ? s.section(rng.box(2 * s.quotient_n(), 1.2)) : sc.base_point;
    pts.push_back(sc.action.flow(p, rng.angles(s.rank())));
  }
  return pts;
}

std::string torus_name(const std::vector<double>& moduli) {
  std::string s = "torus(";
  for (std::size_t i = 0; i < moduli.size(); ++i) s += (i ? ", " : "") + fmt(moduli[i]);
  return s + ")";
}

double max_level_residual(const MomentMap& m, const Vec& level, const Immersion& imm) {
  double worst = 0.0;
  for (const Vec& u : imm.grid()) worst = std::max(worst, max_abs(m.values(as_span(imm.point(u))) - level));
  return worst;
}

// rethrow with the point attached
template <class Fn>
auto at_point(const Vec& p, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " at point " + fmt(p));
  }
}

PointJet zero_function() {
  return [](std::span<const double> p, int order) { return Jet(static_cast<int>(p.size()), order); };
}

}  // namespace

const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> s = {Suite::Geometry, Suite::Moment, Suite::Orbit, Suite::Identities, Suite::Ricci};
  return s;
}

std::string suite_name(Suite s) {
  switch (s) {
    case Suite::Geometry: return "geometry";
    case Suite::Moment: return "moment";
    case Suite::Orbit: return "orbit";
    case Suite::Identities: return "identities";
    case Suite::Ricci: return "ricci";
  }
  return "?";
}

Suite parse_suite(const std::string& name) {
  for (Suite s : all_suites())
    if (suite_name(s) == name) return s;
  throw ConfigError("unknown suite '" + name + "' (geometry, moment, orbit, identities, ricci)");
}

Tolerances Tolerances::named(const std::string& set) {
  Tolerances t;
  double k = 1.0;
  if (set == "strict") k = 0.1;
  else if (set == "loose") k = 100.0;
  else if (set != "default") throw ConfigError("unknown tolerance set '" + set + "' (default, strict, loose)");
  t.set = set;
  for (double* v : {&t.exact, &t.fd, &t.variation, &t.minimality, &t.spectral, &t.stencil}) *v *= k;
  return t;
}

void ScenarioConfig::validate() const {
  auto fail = [this](const std::string& what) { throw ConfigError("scenario " + name + ": " + what); };
  if (name != "hopf" && name != "cpn-sphere" && name != "cpn-perturbed")
    throw ConfigError("unknown scenario '" + name + "' (hopf, cpn-sphere, cpn-perturbed)");
  const int lo = name == "hopf" ? 2 : 1;
  if (n < lo || n > 3) fail("n must lie in [" + std::to_string(lo) + ", 3]");
  if (grid < 4 || grid > 256) fail("grid must lie in [4, 256]");
  if (jet_order < 2 || jet_order > kMaxJetOrder) fail("jet_order must lie in [2, 4]");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != n) fail("one weight per coordinate");
    for (double w : weights)
      if (w != weights[0] || w == 0.0) fail("weights must be equal and non-zero (the section fixes a diagonal circle)");
  }
  for (const auto& m : moduli) {
    if (static_cast<int>(m.size()) != n) fail("each moduli list needs n entries");
    for (double r : m)
      if (!(r > 0.0)) fail("moduli must be positive");
  }
  if (name == "cpn-perturbed" && !(epsilon >= 0.0 && epsilon <= 0.05)) fail("epsilon must lie in [0, 0.05]");
  if (!(sphere_radius > 0.0)) fail("sphere_radius must be positive");
  if (suites.empty()) fail("no suites selected");
  for (double t : {tolerances.exact, tolerances.fd, tolerances.variation, tolerances.minimality, tolerances.spectral,
                   tolerances.stencil})
    if (!(t > 0.0)) fail("tolerances must be positive");
}

void ScenarioConfig::merge_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scenario") name = v.get<std::string>();
      else if (key == "n") n = v.get<int>();
      else if (key == "weights") weights = v.get<std::vector<double>>();
      else if (key == "moduli") moduli = v.get<std::vector<std::vector<double>>>();
      else if (key == "grid") grid = v.get<int>();
      else if (key == "jet_order") jet_order = v.get<int>();
      else if (key == "seed") seed = v.get<unsigned long long>();
      else if (key == "epsilon") epsilon = v.get<double>();
      else if (key == "sphere_radius") sphere_radius = v.get<double>();
      else if (key == "suites") {
        suites.clear();
        for (const auto& s : v) suites.push_back(parse_suite(s.get<std::string>()));
      } else if (key == "tolerances") {
        if (v.is_string()) {
          tolerances = Tolerances::named(v.get<std::string>());
          continue;
        }
        tolerances = Tolerances::named(v.value("set", std::string("default")));
        for (const auto& [tk, tv] : v.items()) {
          if (tk == "set") continue;
          double* slot = tk == "exact"        ? &tolerances.exact
                         : tk == "fd"         ? &tolerances.fd
                         : tk == "variation"  ? &tolerances.variation
                         : tk == "minimality" ? &tolerances.minimality
                         : tk == "spectral"   ? &tolerances.spectral
                         : tk == "stencil"    ? &tolerances.stencil
                                              : nullptr;
          if (!slot) throw ConfigError("unknown tolerance '" + tk + "'");
          *slot = tv.get<double>();
          tolerances.set = "custom";
        }
      } else {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

ordered_json ScenarioConfig::to_json() const {
  ordered_json j;
  j["scenario"] = name;
  j["n"] = n;
  j["weights"] = weights;
  j["moduli"] = moduli;
  j["grid"] = grid;
  j["jet_order"] = jet_order;
  j["seed"] = seed;
  if (name == "cpn-perturbed") j["epsilon"] = epsilon;
  if (name == "hopf") j["sphere_radius"] = sphere_radius;
  ordered_json t;
  t["set"] = tolerances.set;
  t["exact"] = tolerances.exact;
  t["fd"] = tolerances.fd;
  t["variation"] = tolerances.variation;
  t["minimality"] = tolerances.minimality;
  t["spectral"] = tolerances.spectral;
  t["stencil"] = tolerances.stencil;
  j["tolerances"] = t;
  std::vector<std::string> names;
  for (Suite s : suites) names.push_back(suite_name(s));
  j["suites"] = names;
  return j;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const int n = cfg.n;
  Scenario sc;
  sc.config = cfg;
  Sampler rng(cfg.seed);
  std::vector<std::vector<double>> moduli = cfg.moduli;
  Vec level(1);

  if (cfg.name == "hopf") {
    const double w = cfg.weights.empty() ? 1.0 : cfg.weights[0];
    const double t = cfg.sphere_radius * cfg.sphere_radius;
    sc.chart = flat_chart(n);
    sc.action = GroupAction::torus(n, Mat::Constant(1, n, w), unitary_algebra(n));
    sc.moment = MomentMap::quadratic(sc.chart, sc.action, {1.0});
    level << 1.0 - 0.5 * w * t;
    const Calibration cal = calibrate_fubini_study(n - 1);
    sc.calibration_a = cal.a;
    sc.fs_model = fubini_study_chart(n - 1, cal.a);
    sc.setup.emplace("hopf", sc.moment, level, sphere_section(n, t), affine_projection(n), sc.fs_model);
    sc.level_radius2 = t;
    if (moduli.empty()) {
      moduli.push_back(std::vector<double>(static_cast<std::size_t>(n), std::sqrt(t / n)));
      std::vector<double> unequal(static_cast<std::size_t>(n), std::sqrt(t / n));
      unequal[0] = std::sqrt(0.36 * 2.0 * t / n);
      unequal[1] = std::sqrt(0.64 * 2.0 * t / n);
      moduli.push_back(unequal);
    }
  } else {
    const bool perturbed = cfg.name == "cpn-perturbed";
    const Calibration cal = calibrate_fubini_study(n);
    sc.calibration_a = cal.a;
    const ChartModel fs = fubini_study_chart(n, cal.a);
    const EinsteinFit fit = fit_einstein(fs, box_points(rng, 2 * n, 10, 1.0));
    if (fit.ricci_flat || fit.residual > 1e-8)
      throw ConfigError("scenario " + cfg.name + ": calibrated Fubini-Study failed the Einstein fit, residual " +
                        fmt(fit.residual));
    sc.einstein_C = fit.C;
    PointJet f;
    if (perturbed) {
      sc.chart = ChartModel::from_potential("cpn-perturbed", n,
                                            perturbed_fubini_study_potential(cal.a, cfg.epsilon, 0.4, 0.45));
      // U(n)-invariant, so one ray through the bump support decides positivity
      double lo = INFINITY;
      for (int k = 0; k < 200; ++k) {
        const double s = 0.9 * (k + 0.5) / 200.0;
        Vec p = Vec::Zero(2 * n);
        p(0) = std::sqrt(s / (1.0 - s));
        const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sc.chart.metric(as_span(p)), fs.metric(as_span(p)));
        lo = std::min(lo, es.eigenvalues().minCoeff());
      }
      sc.min_metric_eigenvalue = lo;
      if (!(lo > 1e-3))
        throw ConfigError("scenario cpn-perturbed: perturbed metric is not positive definite (relative eigenvalue " +
                          fmt(lo) + ")");
      f = conformal_factor(sc.chart, sc.einstein_C);
      sc.einstein_fit_residual = fit_einstein(sc.chart, box_points(rng, 2 * n, 10, 1.0)).residual;
    } else {
      sc.chart = fs;
    }
    const double w = cfg.weights.empty() ? -(n + 1.0) : cfg.weights[0];
    sc.action = GroupAction::torus(n, Mat::Constant(1, n, w), unitary_algebra(n));
    sc.moment = MomentMap::canonical(sc.chart, sc.action, sc.einstein_C, f);
    level << 0.0;
    Vec seed = Vec::Zero(2 * n);
    seed(0) = std::sqrt(static_cast<double>(n));
    const Vec q = level_sample(sc.moment, level, {seed})[0];
    const double t0 = q.squaredNorm();
    sc.level_radius2 = t0;
    if (n >= 2) {
      sc.fs_model = fubini_study_chart(n - 1, calibrate_fubini_study(n - 1).a);
      sc.setup.emplace(cfg.name, sc.moment, level, sphere_section(n, t0), affine_projection(n), sc.fs_model);
    } else {
      sc.setup.emplace(cfg.name, sc.moment, level, JetMap{}, JetMap{});
    }
    if (moduli.empty()) {
      // the sphere keeps the exact Clifford radii so the build check confirms the level
      const double r = perturbed ? std::sqrt(t0 / n) : 1.0;
      moduli.push_back(std::vector<double>(static_cast<std::size_t>(n), r));
      if (n >= 2) {
        std::vector<double> unequal(static_cast<std::size_t>(n), r);
        unequal[0] = r * std::sqrt(0.5);
        unequal[1] = r * std::sqrt(1.5);
        moduli.push_back(unequal);
      }
    }
  }

  sc.base_point = Vec::Zero(2 * n);
  sc.base_point(0) = std::sqrt(sc.level_radius2);
  if (sc.reduction().quotient_n() > 0) sc.base_point = sc.reduction().section(Vec::Zero(2 * (n - 1)));

  for (const auto& m : moduli) {
    Immersion imm = product_torus(m, cfg.grid);
    imm.name = torus_name(m);
    const double r = max_level_residual(sc.moment, level, imm);
    if (r > 1e-9)
      throw ConfigError("scenario " + cfg.name + ": " + imm.name + " is off the level set, residual " + fmt(r));
    sc.immersions.push_back(std::move(imm));
  }
  return sc;
}

bool Gate::pass() const {
  if (!applicable) return true;
  return stat.count > 0 && std::isfinite(stat.max) && stat.max <= tolerance;
}

std::string Gate::status() const {
  if (!applicable) return "not applicable";
  return pass() ? "pass" : "fail";
}

bool Report::passed() const {
  for (const Gate& g : gates)
    if (!g.pass()) return false;
  return true;
}

SuiteError::SuiteError(const std::string& scenario, const std::string& suite, const std::string& operation,
                       const std::string& what)
    : Error("scenario " + scenario + ", suite " + suite + ", operation " + operation + ": " + what) {}

namespace {

// gate recorder for one suite
class SuiteRun {
 public:
  SuiteRun(Report& r, const Scenario& sc, Suite s, Execution ex)
      : report_(r), sc_(sc), suite_(suite_name(s)), ex_(ex) {}

  const Scenario& sc() const { return sc_; }
  Execution ex() const { return ex_; }

  template <class Fn>
  void gate(const std::string& name, double tol, Fn&& fn, std::string note = {}) {
    Gate g{suite_, name, {}, tol, true, std::move(note)};
    try {
      g.stat = fn();
    } catch (const Error& e) {
      throw SuiteError(label(), suite_, name, e.what());
    }
    report_.gates.push_back(std::move(g));
  }

  void skip(const std::string& name, double tol, std::string note) {
    report_.gates.push_back(Gate{suite_, name, {}, tol, false, std::move(note)});
  }

  void add(const std::string& name, const Stat& stat, double tol, std::string note = {}) {
    report_.gates.push_back(Gate{suite_, name, stat, tol, true, std::move(note)});
  }

  /// Stat over points evaluated with map_points.
  template <class Fn>
  Stat over(const std::vector<Vec>& pts, Fn&& fn) const {
    const std::vector<double> v =
        map_points<double>(pts.size(), [&](std::size_t i) { return at_point(pts[i], [&] { return fn(pts[i]); }); }, ex_);
    Stat s;
    for (double x : v) s.add(x);
    return s;
  }

  template <class Fn>
  void guarded(const std::string& op, Fn&& fn) {
    try {
      fn();
    } catch (const SuiteError&) {
      throw;
    } catch (const Error& e) {
      throw SuiteError(label(), suite_, op, e.what());
    }
  }

  Report& report() { return report_; }

 private:
  std::string label() const { return sc_.config.name + " (n = " + std::to_string(sc_.config.n) + ")"; }

  Report& report_;
  const Scenario& sc_;
  std::string suite_;
  Execution ex_;
};

Stat single(double v) {
  Stat s;
  s.add(v);
  return s;
}

void geometry_suite(SuiteRun& run, Sampler& rng) {
  const Scenario& sc = run.sc();
  const Tolerances& tol = sc.config.tolerances;
  const ChartModel& chart = sc.chart;
  const int d = chart.dim();
  const std::vector<Vec> pts = box_points(rng, d, 50, 1.2);
  const std::vector<Vec> dirs = box_points(rng, d, 50, 1.0);

  if (sc.config.name == "cpn-perturbed") {
    run.skip("holomorphic_curvature", tol.exact, "the perturbed metric has no constant holomorphic curvature");
  } else {
    const double target = sc.config.name == "hopf" ? 0.0 : 4.0;
    std::vector<Vec> pd;
    for (int i = 0; i < 50; ++i) {
      Vec z(2 * d);
      z << pts[static_cast<std::size_t>(i)], dirs[static_cast<std::size_t>(i)];
      pd.push_back(z);
    }
    run.gate("holomorphic_curvature", tol.exact, [&] {
      return run.over(pd, [&](const Vec& z) {
        return std::abs(hol_sect_curv(chart, as_span(Vec(z.head(d))), z.tail(d)) - target);
      });
    });
  }

  run.gate("ricci_paths", tol.exact, [&] {
    return run.over(pts, [&](const Vec& p) { return curvature_at(chart, as_span(p)).ricci_path_residual(); });
  });
  run.gate("bianchi", tol.exact, [&] {
    return run.over(pts, [&](const Vec& p) { return curvature_at(chart, as_span(p)).bianchi_residual(); });
  });

  if (sc.moment.kind() == MomentKind::Canonical) {
    const PointJet f = sc.moment.conformal() ? sc.moment.conformal() : zero_function();
    run.gate("conformal_split", tol.spectral, [&] {
      return run.over(pts, [&](const Vec& p) { return conformal_residual(chart, sc.einstein_C, f, as_span(p)); });
    });
  } else {
    run.skip("conformal_split", tol.spectral, "C = 0 for the flat chart");
  }

  run.gate("lagrangian", tol.exact, [&] {
    Stat s;
    for (const Immersion& imm : sc.immersions)
      s.merge(run.over(imm.grid(), [&](const Vec& u) { return lagrangian_residual(chart, imm, u); }));
    return s;
  });

  run.gate("first_variation", tol.variation, [&] {
    Stat s;
    for (const Immersion& imm : sc.immersions) {
      const JetMap inner = imm.map;
      // a non-isometric stretch, uneven around the first circle
      const JetMap V = [inner](std::span<const Jet> u) {
        std::vector<Jet> x = inner(u);
        const Jet k = 1.0 + 0.3 * cos(u[0]);
        for (Jet& c : x) c = k * c;
        return x;
      };
      const FirstVariation fv = first_variation(chart, imm, V, 1e-3, run.ex());
      s.add(std::abs(fv.oracle - fv.predicted) / std::max(std::abs(fv.predicted), 0.01 * fv.scale));
    }
    return s;
  });
}

void moment_suite(SuiteRun& run, Sampler& rng) {
  const Scenario& sc = run.sc();
  const Tolerances& tol = sc.config.tolerances;
  const std::vector<Vec> pts = box_points(rng, sc.chart.dim(), 100, 1.2);
  const int l = sc.action.rank();
  std::vector<Vec> with_angle;
  for (const Vec& p : pts) {
    Vec z(p.size() + l);
    z << p, rng.angles(l);
    with_angle.push_back(z);
  }
  const int d = sc.chart.dim();
  run.gate("moment_property", tol.exact,
           [&] { return run.over(pts, [&](const Vec& p) { return moment_property_residual(sc.moment, as_span(p)); }); });
  run.gate("orbit_invariance", tol.exact, [&] {
    return run.over(with_angle, [&](const Vec& z) {
      return orbit_invariance_residual(sc.moment, as_span(Vec(z.head(d))), z.tail(l));
    });
  });

  const std::vector<Vec> level = level_points(sc, rng, 200);
  InvarianceReport inv;
  run.guarded("invariance_residuals", [&] { inv = invariance_residuals(sc.moment, level); });
  auto stat_of = [&](double v) {
    Stat s = single(v);
    s.count = inv.used;
    return s;
  };
  run.add("s_invariance", stat_of(inv.s_invariance), tol.exact);
  run.add("transnormal_spread", stat_of(inv.transnormal_spread), tol.exact);
  run.add("laplacian_spread", stat_of(inv.laplacian_spread), tol.exact);
  run.add("isotropy", stat_of(inv.isotropy), tol.exact);
  if (sc.moment.kind() == MomentKind::Canonical)
    run.add("eigenfunction", stat_of(inv.eigenfunction), tol.spectral);
  else
    run.skip("eigenfunction", tol.spectral, "quadratic moment, C = 0");
}

void orbit_suite(SuiteRun& run, Sampler& rng) {
  const Scenario& sc = run.sc();
  const Tolerances& tol = sc.config.tolerances;
  const ReductionSetup& s = sc.reduction();
  const std::vector<Vec> level = level_points(sc, rng, 100);
  run.gate("orbit_mean_curvature", tol.exact, [&] {
    return run.over(level, [&](const Vec& p) {
      return orbit_norm_and_mean_curvature(sc.chart, sc.action, as_span(p)).residual;
    });
  });
  run.gate("splitting", tol.exact, [&] {
    return run.over(level, [&](const Vec& p) {
      const Splitting sp = splitting_at(s, p);
      return std::max({sp.orthogonality, sp.j_invariance, sp.normal, sp.idempotency});
    });
  });
  if (s.quotient_n() == 0) {
    for (const char* g : {"section_round_trip", "section_level", "section_invariance"})
      run.skip(g, tol.exact, "the quotient is a point");
    return;
  }
  const std::vector<Vec> xs = box_points(rng, 2 * s.quotient_n(), 50, 1.2);
  SetupResiduals r;
  run.guarded("check_setup", [&] { r = check_setup(s, xs); });
  auto stat_of = [&](double v) {
    Stat st = single(v);
    st.count = static_cast<int>(xs.size());
    return st;
  };
  run.add("section_round_trip", stat_of(r.round_trip), tol.exact);
  run.add("section_level", stat_of(r.level), tol.exact);
  run.add("section_invariance", stat_of(r.invariance), tol.exact);
}

void identities_suite(SuiteRun& run) {
  const Scenario& sc = run.sc();
  const Tolerances& tol = sc.config.tolerances;
  const ReductionSetup& s = sc.reduction();
  Stat hl, reduced, level_form, volume, conformal, lag, flags, minimal_level;
  for (const Immersion& imm : sc.immersions) {
    IdentityReport r;
    run.guarded("verify_identities " + imm.name, [&] { r = verify_identities(s, imm, tol.minimality, run.ex()); });
    hl.merge(r.hl_form);
    reduced.merge(r.reduced_form);
    level_form.merge(r.level_form);
    volume.merge(r.orbit_volume);
    conformal.merge(r.conformal_form);
    lag.merge(r.reduced_lagrangian);
    flags.add(r.flags_agree() ? 0.0 : 1.0);
    if (r.has_tilde && r.minimal_upstream) minimal_level.merge(r.level);
    MinimalityRecord rec{imm.name, r.minimal_upstream, r.minimal_downstream, 0.0, 0.0};
    rec.upstream_sup = r.has_tilde ? r.alpha_tilde.max : r.alpha_prime.max;
    rec.downstream_sup = r.has_tilde ? r.beta_tilde.max : r.beta_prime.max;
    run.report().minimality.push_back(rec);
  }
  run.add("hl_form", hl, tol.minimality);
  run.add("reduced_form", reduced, tol.minimality);
  run.add("level_form", level_form, tol.minimality);
  run.add("orbit_volume", volume, tol.exact);
  if (s.canonical())
    run.add("conformal_form", conformal, tol.minimality);
  else
    run.skip("conformal_form", tol.minimality, "not applicable: C = 0");
  if (s.quotient_n() > 0)
    run.add("reduced_lagrangian", lag, tol.exact);
  else
    run.skip("reduced_lagrangian", tol.exact, "the quotient is a point");
  run.add("minimality_flags", flags, 0.0, "1 per immersion whose upstream and downstream flags differ");
  if (!s.canonical())
    run.skip("minimal_level", tol.exact, "no canonical moment");
  else if (minimal_level.count == 0)
    run.skip("minimal_level", tol.exact, "no minimal immersion in this scenario");
  else
    run.add("minimal_level", minimal_level, tol.exact);
}

void ricci_suite(SuiteRun& run, Sampler& rng) {
  const Scenario& sc = run.sc();
  const Tolerances& tol = sc.config.tolerances;
  const ReductionSetup& s = sc.reduction();
  ordered_json& k = run.report().constants;
  const char* gates[] = {"einstein_quotient", "quotient_fubini_study", "gamma_curvature", "shape_law", "umbilicity"};
  if (s.quotient_n() == 0) {
    for (const char* g : gates) run.skip(g, tol.exact, "the quotient is a point");
    return;
  }
  const int m2 = 2 * s.quotient_n();
  const std::vector<Vec> xs = box_points(rng, m2, 20, 1.0);
  const ChartModel& q = s.quotient();

  if (s.canonical())
    run.gate("einstein_quotient", tol.spectral,
             [&] { return run.over(xs, [&](const Vec& x) { return einstein_quotient_residual(s, x); }); });
  else
    run.skip("einstein_quotient", tol.spectral, "no canonical moment");
  run.guarded("fit_einstein quotient", [&] { k["quotient_C"] = fit_einstein(q, xs).C; });

  run.gate("quotient_fubini_study", tol.exact, [&] {
    const ScaleFit fit = fit_metric_scale(q, *sc.fs_model, xs);
    k["fubini_study_scale"] = fit.lambda;
    Stat st = single(fit.residual);
    st.count = static_cast<int>(xs.size());
    return st;
  });

  // gamma' vanishes on the zero level, so the canonical scenarios use an inner sphere
  std::optional<ReductionSetup> aux;
  double t_aux = sc.level_radius2;
  if (s.canonical()) {
    t_aux = 0.5 * sc.level_radius2;
    Vec p = Vec::Zero(sc.chart.dim());
    p(0) = std::sqrt(t_aux);
    Vec c(1);
    c << sc.moment.value(0, as_span(p));
    aux.emplace(s.name() + "/inner", sc.moment, c, sphere_section(sc.config.n, t_aux), affine_projection(sc.config.n));
  }
  const ReductionSetup& g = aux ? *aux : s;
  k["gamma_level_radius2"] = t_aux;
  run.gate("gamma_curvature", tol.stencil, [&] {
    std::vector<Vec> pts;
    for (const Vec& x : box_points(rng, m2, 13, 1.0)) pts.push_back(g.section(x));
    Stat st = run.over(pts, [&](const Vec& p) { return gamma_curvature_residual(g, p); });
    st.count *= m2 * m2;  // pairs of the horizontal basis
    return st;
  });

  if (s.rank() != 1) {
    run.skip("shape_law", tol.fd, "needs a circle action");
    run.skip("umbilicity", tol.spectral, "needs a circle action");
    return;
  }
  const std::vector<Vec> level = level_points(sc, rng, 20);
  std::vector<ShapeLaw> laws;
  run.guarded("shape_law", [&] {
    laws = map_points<ShapeLaw>(level.size(), [&](std::size_t i) {
      return at_point(level[i], [&] { return shape_law(s, level[i]); });
    }, run.ex());
  });
  Stat res, umb, a, K0;
  for (const ShapeLaw& L : laws) {
    res.add(L.residual);
    umb.add(L.umbilicity);
    a.add(L.a);
    K0.add(L.K0);
  }
  k["shape_a"] = a.mean;
  k["shape_a2"] = a.mean * a.mean;
  k["quotient_K0"] = K0.mean;
  run.add("shape_law", res, tol.fd, "K0 = K + 4 a^2 on a basis of E");
  run.add("umbilicity", umb, tol.spectral);
}

}  // namespace

Report run_suite(const Scenario& sc, Execution ex) {
  Report r;
  r.config = sc.config;
  ordered_json& k = r.constants;
  k["calibration_a"] = sc.calibration_a;
  k["einstein_C"] = sc.einstein_C;
  k["level"] = sc.reduction().level()(0);
  k["level_radius2"] = sc.level_radius2;
  if (sc.config.name == "cpn-perturbed") {
    k["min_metric_eigenvalue"] = sc.min_metric_eigenvalue;
    k["einstein_fit_residual"] = sc.einstein_fit_residual;
  }
  for (Suite s : sc.config.suites) {
    // each suite draws from its own stream so selections do not shift the samples
    Sampler rng(sc.config.seed * 1000003ULL + static_cast<unsigned long long>(s));
    SuiteRun run(r, sc, s, ex);
    const auto t0 = std::chrono::steady_clock::now();
    switch (s) {
      case Suite::Geometry: geometry_suite(run, rng); break;
      case Suite::Moment: moment_suite(run, rng); break;
      case Suite::Orbit: orbit_suite(run, rng); break;
      case Suite::Identities: identities_suite(run); break;
      case Suite::Ricci: ricci_suite(run, rng); break;
    }
    r.timings.emplace_back(suite_name(s),
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return r;
}

Report run_suite(const ScenarioConfig& cfg, Execution ex) { return run_suite(build_scenario(cfg), ex); }

std::vector<ScenarioConfig> default_scenarios(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  for (const auto& [name, n] : std::vector<std::pair<std::string, int>>{
           {"hopf", 2}, {"cpn-sphere", 1}, {"cpn-sphere", 2}, {"cpn-perturbed", 1}, {"cpn-perturbed", 2}}) {
    ScenarioConfig c = base;
    c.name = name;
    c.n = n;
    c.weights.clear();
    c.moduli.clear();
    out.push_back(c);
  }
  return out;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + name + "' (json, csv)");
}

ordered_json report_json(const std::vector<Report>& reports, bool timings) {
  ordered_json j;
  j["schema"] = 1;
  bool all = true;
  ordered_json list = ordered_json::array();
  for (const Report& r : reports) {
    ordered_json e;
    e["scenario"] = r.config.to_json();
    e["constants"] = r.constants;
    ordered_json suites = ordered_json::object();
    for (const Gate& g : r.gates) {
      ordered_json o;
      o["status"] = g.status();
      o["max"] = g.stat.max;
      o["mean"] = g.stat.mean;
      o["count"] = g.stat.count;
      o["tolerance"] = g.tolerance;
      if (!g.note.empty()) o["note"] = g.note;
      suites[g.suite][g.name] = o;
    }
    e["suites"] = suites;
    ordered_json mins = ordered_json::array();
    for (const MinimalityRecord& m : r.minimality) {
      ordered_json o;
      o["immersion"] = m.immersion;
      o["minimal_upstream"] = m.upstream;
      o["minimal_downstream"] = m.downstream;
      o["upstream_sup"] = m.upstream_sup;
      o["downstream_sup"] = m.downstream_sup;
      mins.push_back(o);
    }
    e["minimality"] = mins;
    e["passed"] = r.passed();
    if (timings) {
      ordered_json t;
      for (const auto& [name, sec] : r.timings) t[name] = sec;
      e["timings_s"] = t;
    }
    all = all && r.passed();
    list.push_back(e);
  }
  j["passed"] = all;
  j["scenarios"] = list;
  return j;
}

std::string report_csv(const std::vector<Report>& reports) {
  std::ostringstream os;
  os << "scenario,n,suite,identity,statistic,value\n";
  char buf[40];
  for (const Report& r : reports)
    for (const Gate& g : r.gates) {
      const std::string key = r.config.name + "," + std::to_string(r.config.n) + "," + g.suite + "," + g.name + ",";
      std::snprintf(buf, sizeof buf, "%.17g", g.stat.max);
      os << key << "max," << buf << "\n";
      std::snprintf(buf, sizeof buf, "%.17g", g.stat.mean);
      os << key << "mean," << buf << "\n";
      os << key << "count," << g.stat.count << "\n";
    }
  return os.str();
}

void emit_report(const std::vector<Report>& reports, ReportFormat format, const std::string& path, bool timings) {
  const std::string text = format == ReportFormat::Json ? report_json(reports, timings).dump(2) + "\n" : report_csv(reports);
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open report " + path + ": " + std::strerror(errno));
  out << text;
  out.close();
  if (!out) throw Error("cannot write report " + path + ": " + std::strerror(errno));
}

}  // namespace kahred
