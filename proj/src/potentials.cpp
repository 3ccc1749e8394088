#include "kahred/potentials.hpp"

#include <cmath>

#include "kahred/errors.hpp"

namespace kahred {

namespace {

Jet modulus_squared(std::span<const Jet> x) {
  Jet t = x[0] * x[0];
  for (std::size_t i = 1; i < x.size(); ++i) t += x[i] * x[i];
  return t;
}

}  // namespace

Jet smooth_bump(const Jet& u) {
  const double u0 = u.value();
  if (std::abs(u0) >= 1.0) return Jet(u.nvars(), u.order());
  return exp(1.0 - reciprocal(1.0 - u * u));
}

JetFn flat_potential() {
  return [](std::span<const Jet> x) { return 0.5 * modulus_squared(x); };
}

JetFn fubini_study_potential(double a) {
  return [a](std::span<const Jet> x) { return a * log(1.0 + modulus_squared(x)); };
}

JetFn perturbed_fubini_study_potential(double a, double eps, double center, double width) {
  if (!(width > 0.0)) throw ConfigError("bump width must be positive");
  return [=](std::span<const Jet> x) {
    const Jet t = modulus_squared(x);
    // bump in s = t / (1 + t): it follows the decay of the Fubini-Study metric at large t
    const Jet s = t * reciprocal(1.0 + t);
    return a * log(1.0 + t) + eps * smooth_bump((s - center) / width);
  };
}

ChartModel flat_chart(int n) { return ChartModel::from_potential("flat C^" + std::to_string(n), n, flat_potential()); }

ChartModel fubini_study_chart(int n, double a) {
  return ChartModel::from_potential("Fubini-Study CP^" + std::to_string(n), n, fubini_study_potential(a));
}

Calibration calibrate_fubini_study(int n, double target) {
  const Vec centre = Vec::Zero(2 * n);
  Vec dir = Vec::Zero(2 * n);
  dir(0) = 1.0;
  auto hsc = [&](double a) {
    return hol_sect_curv(fubini_study_chart(n, a), {centre.data(), static_cast<std::size_t>(centre.size())}, dir);
  };
  double lo = 1e-3, hi = 1e3;
  const double flo = hsc(lo) - target, fhi = hsc(hi) - target;
  if (flo * fhi > 0.0) throw ConfigError("Fubini-Study calibration: target curvature not bracketed");
  Calibration c;
  // curvature decreases in a; geometric bisection keeps relative resolution uniform
  while (hi / lo - 1.0 > 1e-15 && c.iterations < 200) {
    const double mid = std::sqrt(lo * hi);
    if ((hsc(mid) - target) * flo > 0.0)
      lo = mid;
    else
      hi = mid;
    ++c.iterations;
  }
  c.a = 0.5 * (lo + hi);
  c.hsc = hsc(c.a);
  return c;
}

}  // namespace kahred
