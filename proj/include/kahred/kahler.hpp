#pragma once

// Pointwise Kähler geometry of a coordinate chart.
//
// Real coordinates x = (x0, y0, x1, y1, ...) with z_j = x_{2j} + i x_{2j+1};
// J is the standard block matrix on potential charts. Conventions used
// throughout:
//   omega(u, v) = g(Ju, v)        so g(u, v) = omega(u, Jv)
//   d^c F       = -dF o J
//   omega       = (1/2) dd^c K    for a Kähler potential K
//   dθ(a, b)    = ∂_a θ_b - ∂_b θ_a (no 1/2)

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kahred/linalg.hpp"

namespace kahred {

/// Composable scalar function: jets of the coordinates in, jet of the value out.
using JetFn = std::function<Jet(std::span<const Jet>)>;
/// Composable vector-valued map.
using JetMap = std::function<std::vector<Jet>(std::span<const Jet>)>;
/// Scalar function given as its jet of the requested order around a point.
using PointJet = std::function<Jet(std::span<const double>, int)>;
using PointJetMatrix = std::function<JetMatrix(std::span<const double>, int)>;
using Domain = std::function<bool(std::span<const double>)>;

enum class ChartKind { Potential, DirectMetric };

class ChartModel {
 public:
  static ChartModel from_potential(std::string name, int n_complex, JetFn potential,
                                   Domain domain = {});
  /// `metric` and `complex_structure` return jets in 2m variables around p.
  static ChartModel from_metric(std::string name, int m, PointJetMatrix metric,
                                PointJetMatrix complex_structure, Domain domain = {});

  const std::string& name() const { return d_->name; }
  ChartKind kind() const { return d_->kind; }
  int n() const { return d_->n; }
  int dim() const { return 2 * d_->n; }
  /// Highest metric jet order available (2: curvature needs second derivatives).
  int max_metric_order() const { return 2; }

  bool contains(std::span<const double> p) const;
  /// Throws GeometryError naming the point when p is outside the domain.
  void require(std::span<const double> p, const char* op) const;

  Jet potential_jet(std::span<const double> p, int order) const;
  JetMatrix metric_jets(std::span<const double> p, int order) const;
  JetMatrix complex_structure_jets(std::span<const double> p, int order) const;
  Mat metric(std::span<const double> p) const;
  Mat complex_structure(std::span<const double> p) const;
  const JetFn& potential() const { return d_->potential; }

 private:
  // immutable and shared, so copies are cheap and safe to capture in closures
  struct Data {
    std::string name;
    ChartKind kind = ChartKind::Potential;
    int n = 0;
    JetFn potential;
    PointJetMatrix metric;
    PointJetMatrix complex_structure;
    Domain domain;
  };
  std::shared_ptr<const Data> d_;
};

/// The standard complex structure on R^{2n}.
Mat standard_j(int n);

struct PointFrame {
  Vec point;
  Mat g;
  Mat g_inv;
  Mat omega;
  Mat J;
  std::vector<Mat> christoffel;  // christoffel[a](b, c) = Γ^a_{bc}

  /// Γ(u, v)^a = Γ^a_{bc} u^b v^c
  Vec gamma(const Vec& u, const Vec& v) const;
};

PointFrame frame_at(const ChartModel& chart, std::span<const double> p);

/// Christoffel symbols as jets of the requested order (needs metric order + 1).
std::vector<JetMatrix> christoffel_jets(const ChartModel& chart, std::span<const double> p, int order);

struct CurvatureData {
  int dim = 0;
  std::vector<double> riemann;  // R^a_{bcd}, index ((a*dim + b)*dim + c)*dim + d
  Mat ricci;
  Mat ricci_form;            // Riemann path: rho = J^T Ric
  Mat ricci_form_potential;  // -(1/4) dd^c log det g, potential charts only
  double scalar = 0.0;

  double R(int a, int b, int c, int d) const {
    return riemann[static_cast<std::size_t>(((a * dim + b) * dim + c) * dim + d)];
  }
  double bianchi_residual() const;
  /// Max entry difference between the two Ricci-form paths (0 when only one exists).
  double ricci_path_residual() const;
};

CurvatureData curvature_at(const ChartModel& chart, std::span<const double> p);

double hol_sect_curv(const ChartModel& chart, std::span<const double> p, const Vec& v);
double hol_sect_curv(const PointFrame& frame, const CurvatureData& curv, const Vec& v);

/// Jets of ½ log det g.
PointJet half_log_det_metric(const ChartModel& chart);

/// (d^c f)_a as jets of the given order; needs f at order + 1.
std::vector<Jet> dc_jets(const ChartModel& chart, const PointJet& f, std::span<const double> p, int order);
Vec dc_form(const ChartModel& chart, const PointJet& f, std::span<const double> p);
/// dd^c f at p, by differentiating the d^c jets once more.
Mat ddc(const ChartModel& chart, const PointJet& f, std::span<const double> p);
/// Exterior derivative of a 1-form given as order-1 jets.
Mat exterior_derivative(std::span<const Jet> form);

struct EinsteinFit {
  double C = 0.0;
  double residual = 0.0;  // max |rho - C omega|
  bool ricci_flat = false;
};

EinsteinFit fit_einstein(const ChartModel& chart, const std::vector<Vec>& samples);

/// The chart-local f with n dd^c f = rho - C omega, normalised by f(0) = 0.
PointJet conformal_factor(const ChartModel& chart, double C);
double conformal_factor_f(const ChartModel& chart, double C, std::span<const double> p);
/// max |n dd^c f - (rho - C omega)| at p, rho from the Riemann tensor.
double conformal_residual(const ChartModel& chart, double C, const PointJet& f, std::span<const double> p);

/// Jets of the coordinates around p.
std::vector<Jet> seed_at(std::span<const double> p, int order);

}  // namespace kahred
