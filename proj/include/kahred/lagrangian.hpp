#pragma once

// Parametrized submanifolds: induced metric, second fundamental form, mean
// curvature and the mean curvature forms, orbit norms, and a first-variation
// oracle for the volume.

#include <string>
#include <vector>

#include "kahred/actions.hpp"
#include "kahred/kahler.hpp"
#include "kahred/parallel.hpp"

namespace kahred {

struct Immersion {
  std::string name;
  int param_dim = 0;
  JetMap map;               // parameter jets -> chart coordinate jets
  std::vector<int> counts;  // grid points per parameter
  Vec extent;               // period (periodic) or covered length
  std::vector<bool> periodic;
  Vec origin;

  Vec point(const Vec& u) const;
  /// Jets of the map around u.
  std::vector<Jet> jets(const Vec& u, int order) const;
  /// d x param_dim differential.
  Mat differential(const Vec& u) const;
  Vec spacing() const;
  /// Product grid, first parameter fastest.
  std::vector<Vec> grid() const;
  /// Quadrature weights matching grid(): trapezoid, uniform on periodic factors.
  std::vector<double> weights() const;
  void validate() const;
};

/// u -> (r_j e^{i u_j}), periodic in every parameter.
Immersion product_torus(const std::vector<double>& moduli, int grid);
/// post(imm(u)).
Immersion transformed(const Immersion& imm, JetMap post, std::string name);

struct MeanCurvatureData {
  Vec point;
  Mat tangent;                 // columns d_a phi
  Mat G;                       // induced metric
  std::vector<Vec> second;     // B_ab, index a * m + b
  Vec H;
  Vec alpha_H;                 // alpha_H(d_a) = omega(H, d_a phi)
  Vec alpha_tilde;             // alpha_H - n phi^*(d^c f)
  Mat normal_projector;        // g-orthogonal projector onto the normal space

  const Vec& B(int a, int b) const { return second[static_cast<std::size_t>(a * tangent.cols() + b)]; }
};

/// `f` may be empty (f = 0).
MeanCurvatureData mean_curvature(const ChartModel& chart, const Immersion& imm, const Vec& u,
                                 const PointJet& f = {});

/// max |phi^* omega| at u.
double lagrangian_residual(const ChartModel& chart, const Immersion& imm, const Vec& u);
/// |normal part of J H| and max |alpha_H(d_a) - g(J H, d_a phi)|.
double lagrangian_normal_residual(const ChartModel& chart, const MeanCurvatureData& mc);

/// Exterior derivative of a parameter 1-form by Richardson differences; the step
/// is a dyadic refinement of the grid spacing below 2e-3.
Mat parameter_exterior_derivative(const Immersion& imm, const std::function<Vec(const Vec&)>& form, const Vec& u);

/// max |d alpha_H - phi^* rho| at u.
double dazord_residual(const ChartModel& chart, const Immersion& imm, const Vec& u);
/// max |d alpha~| at u.
double closedness_residual(const ChartModel& chart, const Immersion& imm, const Vec& u, const PointJet& f);

struct OrbitData {
  double nu = 0.0;      // sqrt det g(X~_i, X~_j)
  Vec H_hat;            // orbit mean curvature projected off J k
  Vec grad_log_nu;      // ambient gradient of log nu projected off J k
  double residual = 0.0;  // |H_hat + grad_log_nu|_g
};

/// Raises GeometryError on a singular orbit (|X~_i| < 1e-6).
OrbitData orbit_norm_and_mean_curvature(const ChartModel& chart, const GroupAction& a, std::span<const double> p);

double volume(const ChartModel& chart, const Immersion& imm, Execution ex = Execution::Parallel);

struct FirstVariation {
  double oracle = 0.0;     // d vol / dh by central differences
  double predicted = 0.0;  // -integral g(H, V) dvol
  double scale = 0.0;      // integral |V| dvol
};

/// `variation` maps parameter jets to chart-vector jets. OracleError when D(h) and
/// D(h/2) disagree by more than 1% of the scale (step too large).
FirstVariation first_variation(const ChartModel& chart, const Immersion& imm, const JetMap& variation,
                               double h = 1e-3, Execution ex = Execution::Parallel);

}  // namespace kahred
