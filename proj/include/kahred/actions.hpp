#pragma once

// Torus actions by holomorphic isometries and their moment maps.
//
// Every flow here is unitary-linear in the chart: z -> U diag(e^{i w theta}) U* z.
// Torus generators use U = Id; ambient generators (used only for invariance
// residuals) may carry any unitary frame.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kahred/kahler.hpp"

namespace kahred {

/// A one-parameter unitary flow on C^n.
struct UnitaryGenerator {
  std::string name;
  Eigen::MatrixXcd frame;  // unitary U
  Vec weights;             // w

  /// Generator i*H for a Hermitian H, diagonalised once.
  static UnitaryGenerator from_hermitian(std::string name, const Eigen::MatrixXcd& H);
  std::vector<Jet> flow(std::span<const Jet> x, const Jet& theta) const;
};

/// Hermitian basis of u(n) as generators: diagonals, then real and imaginary off-diagonal pairs.
std::vector<UnitaryGenerator> unitary_algebra(int n);

/// Vector field given by its jets around a point.
using FieldJets = std::function<std::vector<Jet>(std::span<const double>, int)>;

class GroupAction {
 public:
  /// Weighted phase rotation: generator i rotates z_j by e^{i W(i, j) theta_i}.
  static GroupAction torus(int n, const Mat& weights, std::vector<UnitaryGenerator> ambient = {});

  int n() const { return n_; }
  int dim() const { return 2 * n_; }
  int rank() const { return static_cast<int>(weights_.rows()); }
  const Mat& weights() const { return weights_; }
  const std::vector<UnitaryGenerator>& ambient() const { return ambient_; }

  /// Jet-capable flow; x and theta share one jet layout.
  std::vector<Jet> flow(std::span<const Jet> x, std::span<const Jet> theta) const;
  Vec flow(const Vec& p, const Vec& theta) const;

  /// X~_i around p as jets of `order`, obtained by seeding t as an extra jet variable.
  std::vector<Jet> fundamental_field(int i, std::span<const double> p, int order) const;
  Vec fundamental_field(int i, std::span<const double> p) const;
  /// Columns X~_1 .. X~_l at p.
  Mat fields(std::span<const double> p) const;
  FieldJets field(int i) const;

  /// Fundamental field of an ambient generator.
  Vec ambient_field(int k, std::span<const double> p) const;

 private:
  int n_ = 0;
  Mat weights_;
  std::vector<UnitaryGenerator> ambient_;
};

/// div V = (1/sqrt det g) d_a (sqrt det g V^a), as jets of `order` (needs V and g at order + 1).
Jet divergence_jets(const ChartModel& chart, const FieldJets& V, std::span<const double> p, int order);
double divergence_at(const ChartModel& chart, const FieldJets& V, std::span<const double> p);

/// J X~_i as a field.
FieldJets j_field(const ChartModel& chart, const GroupAction& a, int i);

enum class MomentKind { Quadratic, Canonical };

class MomentMap {
 public:
  /// mu_i = -(1/2) sum_j W(i, j) |z_j|^2 + shift_i on a flat chart.
  static MomentMap quadratic(const ChartModel& chart, const GroupAction& a, std::vector<double> shifts);
  /// mu~_i = (1/C)(-(1/2) div J X~_i + n d^c f(X~_i)); f may be empty (f = 0).
  static MomentMap canonical(const ChartModel& chart, const GroupAction& a, double C, PointJet f = {});

  MomentKind kind() const { return kind_; }
  int rank() const { return action_.rank(); }
  double C() const { return C_; }
  const PointJet& conformal() const { return f_; }
  const ChartModel& chart() const { return chart_; }
  const GroupAction& action() const { return action_; }
  double shift(int i) const { return shifts_[static_cast<std::size_t>(i)]; }
  /// Highest jet order available (1 for canonical maps).
  int max_order() const { return kind_ == MomentKind::Canonical ? 1 : kMaxJetOrder; }

  Jet jet(int i, std::span<const double> p, int order) const;
  double value(int i, std::span<const double> p) const;
  Vec values(std::span<const double> p) const;
  /// Rows dmu_i.
  Mat differential(std::span<const double> p) const;

 private:
  MomentKind kind_ = MomentKind::Quadratic;
  ChartModel chart_;
  GroupAction action_;
  std::vector<double> shifts_;
  double C_ = 0.0;
  PointJet f_;
};

double quadratic_moment(std::span<const double> p, const std::vector<int>& weights, double shift);
double canonical_moment(const ChartModel& chart, const GroupAction& a, double C, const PointJet& f,
                        std::span<const double> p, int generator);

/// max_{i,a} |dmu_i(e_a) - omega(X~_i, e_a)| over the coordinate frame.
double moment_property_residual(const MomentMap& m, std::span<const double> p);
/// max |mu(flow(p, theta)) - mu(p)|.
double orbit_invariance_residual(const MomentMap& m, std::span<const double> p, const Vec& theta);

struct LevelOptions {
  int max_iterations = 50;
  double tolerance = 1e-11;
};

/// Damped Newton along the gradients of mu onto mu^{-1}(c).
std::vector<Vec> level_sample(const MomentMap& m, const Vec& c, const std::vector<Vec>& seeds,
                              LevelOptions opt = {});

/// Laplacian Delta = -div grad of mu_i, by Richardson-extrapolated differences of the flux.
double moment_laplacian_fd(const MomentMap& m, int i, std::span<const double> p, double h = 1e-3);

struct InvarianceReport {
  double s_invariance = 0.0;        // max |dmu(V~)| over ambient generators
  double transnormal_spread = 0.0;  // spread of |grad mu|^2
  double laplacian_spread = 0.0;    // spread of Delta mu
  double eigenfunction = 0.0;       // max |Delta_f mu~ - 2 C mu~|, canonical maps only
  double isotropy = 0.0;            // max |omega(X~_i, X~_j)|
  int used = 0;
  int excluded = 0;                 // near-singular orbits
};

/// Points must share one level (ArgumentError otherwise); |X~| < 1e-6 points are skipped.
InvarianceReport invariance_residuals(const MomentMap& m, const std::vector<Vec>& points);

/// |X~_i| < threshold for some generator.
bool near_singular(const GroupAction& a, const ChartModel& chart, std::span<const double> p,
                   double threshold = 1e-6);

}  // namespace kahred
