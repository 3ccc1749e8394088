#pragma once

// Kähler quotients mu^{-1}(c) / K computed through a local section.
//
// The quotient chart is the DirectMetric chart whose metric at x is g restricted
// to the horizontal lift of T_x through section(x); the Hsiang-Lawson charts
// rescale it by powers of the orbit volume. Upstream quantities are computed on
// the ambient chart, downstream ones on these quotient charts, and the suites
// below compare the two sides.

#include <optional>
#include <string>
#include <vector>

#include "kahred/actions.hpp"
#include "kahred/kahler.hpp"
#include "kahred/lagrangian.hpp"
#include "kahred/parallel.hpp"

namespace kahred {

class ReductionSetup {
 public:
  /// `section` maps quotient coordinates into mu^{-1}(level); `projection` maps
  /// level-set points back and is constant on orbits. Both may be empty when the
  /// quotient is a point (n == rank).
  ReductionSetup(std::string name, MomentMap moment, Vec level, JetMap section, JetMap projection,
                 std::optional<ChartModel> quotient_model = {}, Domain quotient_domain = {});

  const std::string& name() const { return name_; }
  const ChartModel& chart() const { return moment_.chart(); }
  const GroupAction& action() const { return moment_.action(); }
  const MomentMap& moment() const { return moment_; }
  const Vec& level() const { return level_; }
  int n() const { return moment_.chart().n(); }
  int rank() const { return moment_.rank(); }
  /// Complex dimension n - l of the quotient.
  int quotient_n() const { return n() - rank(); }
  bool canonical() const { return moment_.kind() == MomentKind::Canonical; }
  const std::optional<ChartModel>& quotient_model() const { return quotient_model_; }

  const JetMap& section_map() const { return section_; }
  const JetMap& projection_map() const { return projection_; }
  std::vector<Jet> section_jets(const Vec& x, int order) const;
  Vec section(const Vec& x) const;
  std::vector<Jet> projection_jets(const Vec& p, int order) const;
  Vec project(const Vec& p) const;
  /// 2(n - l) x 2n differential of the projection.
  Mat projection_differential(const Vec& p) const;

  /// The quotient chart (g_c, J_c). GeometryError when the quotient is a point.
  const ChartModel& quotient() const;

  /// Conformal exponent f of the moment, f = 0 when absent.
  PointJet conformal() const;

 private:
  std::string name_;
  MomentMap moment_;
  Vec level_;
  JetMap section_;
  JetMap projection_;
  std::optional<ChartModel> quotient_model_;
  std::optional<ChartModel> quotient_;
};

struct SetupResiduals {
  double round_trip = 0.0;   // |pi(s(x)) - x|
  double level = 0.0;        // |mu(s(x)) - c|
  double invariance = 0.0;   // |pi(flow(s(x), theta)) - x|
};

/// Residuals of the setup invariants over quotient sample points.
SetupResiduals check_setup(const ReductionSetup& s, const std::vector<Vec>& quotient_samples);

struct Splitting {
  Vec point;
  Mat k_basis;   // fundamental fields
  Mat jk_basis;  // J k_basis
  Mat e_basis;   // g-orthonormal basis of E_p
  Mat P_k, P_jk, P_e;

  /// Max of |E . k|, |J E - E|, |J k . T mu^{-1}(c)| and |P^2 - P|.
  double orthogonality = 0.0;
  double j_invariance = 0.0;
  double normal = 0.0;
  double idempotency = 0.0;
};

/// GeometryError off the level (residual > 1e-10) or on a singular orbit.
Splitting splitting_at(const ReductionSetup& s, const Vec& p);

/// Quotient metric and complex structure as jets of `order` around x (order <= 2).
JetMatrix quotient_metric_jets(const ReductionSetup& s, const Vec& x, int order);
JetMatrix quotient_complex_structure_jets(const ReductionSetup& s, const Vec& x, int order);

/// log |nu| o section and f o section on the quotient chart.
PointJet log_nu_check(const ReductionSetup& s);
PointJet f_check(const ReductionSetup& s);

enum class HLVariant { Plain, Tilde };

/// e^{2 (exponent + shift)} g_c with J_c. Plain: log|nu| / (n - l); Tilde adds n f / (n - l).
struct HLMetric {
  HLVariant variant = HLVariant::Plain;
  double shift = 0.0;
  PointJet exponent;
  ChartModel chart;
};

HLMetric hl_metric(const ReductionSetup& s, HLVariant variant, double shift = 0.0);

struct GammaPrime {
  Vec values;  // gamma'(X~_i) = -(1/2) div J X~_i
  Vec form;    // ambient extension sum_i gamma'_i G^{ij} g(X~_j, .)
  double level_value = 0.0;  // canonical maps: max |gamma'(X~_i) - C c_i + n d^c f(X~_i)|
};

GammaPrime gamma_prime(const ReductionSetup& s, const Vec& p);
/// The ambient extension as jets of `order` (<= 1).
std::vector<Jet> gamma_prime_form_jets(const ReductionSetup& s, const Vec& p, int order);

/// Decomposition u - u0 = S v + W theta of parameter space near u0: dphi W = X~.
struct Slice {
  Vec u0;
  Mat S;
  Mat W;
  double invariance = 0.0;  // least-squares residual of dphi W = X~
};

/// GeometryError when the orbit directions leave the tangent space (residual > 1e-8).
Slice slice_at(const ReductionSetup& s, const Immersion& imm, const Vec& u0);
/// v -> pi(phi(u0 + S v)), a local immersion into the quotient chart.
Immersion reduced_immersion(const ReductionSetup& s, const Immersion& imm, const Vec& u0);

struct ImmersionCheck {
  double level = 0.0;
  double invariance = 0.0;
};

/// Max level and invariance residuals over the grid; GeometryError above 1e-9 / 1e-8.
ImmersionCheck check_immersion(const ReductionSetup& s, const Immersion& imm);

/// Upstream and downstream forms at one grid point, as covectors on the parameter space.
struct PointForms {
  Vec alpha_H, alpha_tilde, alpha_H_prime, gamma, dc_f;
  Vec beta, beta_prime, beta_tilde, dc_log_nu;  // pulled back through pi
  double nu = 0.0;
  double xi_norm = 0.0;       // ||xi||_h
  double level = 0.0;         // |mu(phi(u)) - c|
  double reduced_lagrangian = 0.0;
};

/// `hl_shift` adds a constant to both Hsiang-Lawson exponents.
PointForms forms_at(const ReductionSetup& s, const Immersion& imm, const Vec& u, double hl_shift = 0.0);

struct Stat {
  double max = 0.0;
  double mean = 0.0;
  int count = 0;

  void add(double v);
  void merge(const Stat& o);
};

struct IdentityReport {
  Stat hl_form, reduced_form, level_form, conformal_form, orbit_volume;
  Stat alpha_tilde, beta_tilde;  // sup norms of each side
  Stat alpha_prime, beta_prime;
  Stat level;                     // |mu - c| along the immersion
  Stat reduced_lagrangian;
  bool has_tilde = false;         // canonical moment, so the conformal forms exist
  bool minimal_upstream = false;
  bool minimal_downstream = false;
  bool flags_agree() const { return minimal_upstream == minimal_downstream; }
};

/// Checks the immersion, then evaluates forms_at over the grid.
IdentityReport verify_identities(const ReductionSetup& s, const Immersion& imm, double minimality_tol = 1e-6,
                                 Execution ex = Execution::Parallel);

/// max |pi*beta~ (gauge a) - pi*beta~ (gauge b)| at u; beta when neither is canonical.
double gauge_residual(const ReductionSetup& a, const ReductionSetup& b, const Immersion& imm, const Vec& u);

/// max |omega_c(dpi e_i, dpi e_j) - omega(e_i, e_j)| over a basis of E_p.
double quotient_symplectic_residual(const ReductionSetup& s, const Vec& p);
/// |J_c^2 + Id| at x.
double quotient_j_residual(const ReductionSetup& s, const Vec& x);

/// max |rho_0 - C omega_0 - (n - l) dd^c f_0| at x, with f_0 = (log|nu| + n f) / (n - l).
double einstein_quotient_residual(const ReductionSetup& s, const Vec& x);

/// max over pairs of a horizontal basis of |dgamma'(Z, W) - 2 gamma'(J B'(Z, J W))|.
double gamma_curvature_residual(const ReductionSetup& s, const Vec& p);
/// B'(Z, V) = -sum g(V, nabla_Z J X~_i) G^{ij} J X~_j.
Vec level_second_fundamental_form(const ReductionSetup& s, const Vec& p, const Vec& Z, const Vec& V);

/// Shape operator of a rank-one level set on E_p and the curvature law it predicts.
struct ShapeLaw {
  double a = 0.0;           // mean horizontal eigenvalue
  double umbilicity = 0.0;  // max |A_E - a Id|
  double K_ambient = 0.0;   // worst ambient holomorphic curvature over the basis
  double K0 = 0.0;          // measured quotient holomorphic curvature (first basis vector)
  double residual = 0.0;    // max |K0(dpi e) - K(e) - 4 a^2|
};

ShapeLaw shape_law(const ReductionSetup& s, const Vec& p);

struct ScaleFit {
  double lambda = 0.0;
  double residual = 0.0;  // max |g_a - lambda g_b|
};

/// Least-squares lambda with g_a = lambda g_b over the samples.
ScaleFit fit_metric_scale(const ChartModel& a, const ChartModel& b, const std::vector<Vec>& samples);

/// x -> sqrt(t / (1 + |x|^2)) (x, 1) in C^n: the diagonal circle over |z|^2 = t.
JetMap sphere_section(int n, double t);
/// z -> (z_0 / z_{n-1}, ..., z_{n-2} / z_{n-1}).
JetMap affine_projection(int n);
/// conj(x_0) / |x_0| times section(x), which fixes the phase of z_0 instead; needs x_0 != 0.
JetMap rotated_section(JetMap section);

}  // namespace kahred
