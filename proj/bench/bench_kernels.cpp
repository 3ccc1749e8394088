// Serial reference against the OpenMP kernels on the heavy point loops.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "CLI11.hpp"
#include "kahred/potentials.hpp"
#include "kahred/scenarios.hpp"

using namespace kahred;

namespace {

struct Timing {
  double seconds = 0.0;
  double checksum = 0.0;
};

Timing best_of(int repeat, const std::function<double()>& fn) {
  Timing t{1e300, 0.0};
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    t.checksum = fn();
    t.seconds = std::min(t.seconds, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return t;
}

Vec point(int i, int dim) {
  Vec p(dim);
  for (int k = 0; k < dim; ++k) p(k) = 0.9 * std::sin(1.3 * i + 0.7 * k + 0.2);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel kernel benchmark"};
  int threads = 0, grid = 24, repeat = 3, points = 400;
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  app.add_option("--grid", grid, "torus grid for the identity kernel");
  app.add_option("--points", points, "points for the curvature kernel");
  app.add_option("--repeat", repeat, "repetitions, best time is reported");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  ScenarioConfig cfg;
  cfg.grid = grid;
  const Scenario sc = build_scenario(cfg);
  const ChartModel& chart = sc.chart;
  const Immersion& torus = sc.immersions[1];

  struct Kernel {
    const char* name;
    std::function<double(Execution)> run;
  };
  const std::vector<Kernel> kernels = {
      {"curvature", [&](Execution ex) {
         const std::vector<double> v = map_points<double>(static_cast<std::size_t>(points), [&](std::size_t i) {
           const Vec p = point(static_cast<int>(i), chart.dim());
           return curvature_at(chart, {p.data(), static_cast<std::size_t>(p.size())}).scalar;
         }, ex);
         double s = 0.0;
         for (double x : v) s += x;
         return s;
       }},
      {"volume", [&](Execution ex) { return volume(chart, torus, ex); }},
      {"identities", [&](Execution ex) {
         const IdentityReport r = verify_identities(sc.reduction(), torus, 1e-6, ex);
         return r.conformal_form.max + r.hl_form.mean + r.alpha_tilde.mean;
       }},
  };

  std::printf("threads %d, grid %d, points %d, best of %d\n", omp_get_max_threads(), grid, points, repeat);
  std::printf("%-12s %12s %12s %9s %s\n", "kernel", "serial [s]", "parallel [s]", "speedup", "results");
  for (const Kernel& k : kernels) {
    const Timing s = best_of(repeat, [&] { return k.run(Execution::Serial); });
    const Timing p = best_of(repeat, [&] { return k.run(Execution::Parallel); });
    std::printf("%-12s %12.4f %12.4f %9.2f %s\n", k.name, s.seconds, p.seconds, s.seconds / p.seconds,
                s.checksum == p.checksum ? "identical" : "DIFFER");
  }
  return 0;
}
