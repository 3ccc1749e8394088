#pragma once

// Kähler potentials used by the scenarios.

#include "kahred/kahler.hpp"

namespace kahred {

/// |z|^2 / 2, the Euclidean metric.
JetFn flat_potential();
/// a log(1 + |w|^2) in one affine chart of CP^n.
JetFn fubini_study_potential(double a);
/// a log(1 + t) + eps * bump((s - center) / width), t = |w|^2, s = t / (1 + t).
JetFn perturbed_fubini_study_potential(double a, double eps, double center, double width);

/// exp(1 - 1/(1 - u^2)) on |u| < 1, zero outside; smooth with compact support.
Jet smooth_bump(const Jet& u);

ChartModel flat_chart(int n);
ChartModel fubini_study_chart(int n, double a);

struct Calibration {
  double a = 0.0;
  double hsc = 0.0;  // holomorphic sectional curvature reached at the chart centre
  int iterations = 0;
};

/// Bisection on a so the holomorphic sectional curvature at the chart centre equals `target`.
Calibration calibrate_fubini_study(int n, double target = 4.0);

}  // namespace kahred
