#pragma once

// Scenario registry, verification suites and reports.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kahred/errors.hpp"
#include "kahred/reduction.hpp"

namespace kahred {

enum class Suite { Geometry, Moment, Orbit, Identities, Ricci };

const std::vector<Suite>& all_suites();
std::string suite_name(Suite s);
Suite parse_suite(const std::string& name);

struct Tolerances {
  std::string set = "default";
  double exact = 1e-8;            // jet-exact identities
  double fd = 1e-5;               // finite-difference assisted
  double variation = 0.02;        // first variation, relative
  double minimality = 1e-6;       // sup norm of a mean curvature form
  double spectral = 1e-7;         // Laplacian eigenfunction, Einstein quotient, conformal split
  double stencil = 1e-4;          // d gamma' against B'

  /// "default", "strict" (x 0.1) or "loose" (x 100).
  static Tolerances named(const std::string& set);
};

struct ScenarioConfig {
  std::string name = "cpn-sphere";  // hopf | cpn-sphere | cpn-perturbed
  int n = 2;
  std::vector<double> weights;               // one per coordinate; empty: scenario default
  std::vector<std::vector<double>> moduli;   // torus radii, one list per torus; empty: defaults
  int grid = 24;
  Tolerances tolerances;
  int jet_order = 4;
  unsigned long long seed = 1;
  double epsilon = 0.02;        // cpn-perturbed bump height
  double sphere_radius = 1.0;   // hopf: the level |z| = r
  std::vector<Suite> suites = all_suites();

  /// ConfigError on any out-of-range field.
  void validate() const;
  /// Missing keys keep their current values; unknown keys are a ConfigError.
  void merge_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct Scenario {
  ScenarioConfig config;
  ChartModel chart;
  GroupAction action;
  MomentMap moment;
  std::optional<ReductionSetup> setup;
  std::vector<Immersion> immersions;
  std::optional<ChartModel> fs_model;  // calibrated Fubini-Study on the quotient
  double calibration_a = 0.0;          // of the ambient chart, or of the quotient model for hopf
  double einstein_C = 0.0;
  double level_radius2 = 0.0;          // measured |z|^2 on the level
  double min_metric_eigenvalue = 0.0;  // cpn-perturbed positivity margin
  double einstein_fit_residual = 0.0;  // > 0 when M is not Einstein
  Vec base_point;                      // a point of the level set

  const ReductionSetup& reduction() const { return *setup; }
};

/// ConfigError on invalid config, off-level moduli (residual in the message) or a
/// metric that is not positive definite.
Scenario build_scenario(const ScenarioConfig& cfg);

struct Gate {
  std::string suite;
  std::string name;
  Stat stat;
  double tolerance = 0.0;
  bool applicable = true;
  std::string note;

  bool pass() const;
  std::string status() const;  // pass | fail | not applicable
};

struct MinimalityRecord {
  std::string immersion;
  bool upstream = false;
  bool downstream = false;
  double upstream_sup = 0.0;    // sup norm of the form the upstream flag tests
  double downstream_sup = 0.0;
};

struct Report {
  ScenarioConfig config;
  nlohmann::ordered_json constants;
  std::vector<Gate> gates;
  std::vector<MinimalityRecord> minimality;
  std::vector<std::pair<std::string, double>> timings;  // seconds per suite

  bool passed() const;
};

/// Names the scenario, suite and operation of any error raised while a suite runs.
class SuiteError : public Error {
 public:
  SuiteError(const std::string& scenario, const std::string& suite, const std::string& operation,
             const std::string& what);
};

Report run_suite(const Scenario& sc, Execution ex = Execution::Parallel);
Report run_suite(const ScenarioConfig& cfg, Execution ex = Execution::Parallel);

/// The default set (hopf n = 2, cpn-sphere n = 1, 2, cpn-perturbed n = 1, 2), other fields from `base`.
std::vector<ScenarioConfig> default_scenarios(const ScenarioConfig& base);

enum class ReportFormat { Json, Csv };
ReportFormat parse_format(const std::string& name);

/// Timings are written only when `timings` is set, so reports stay byte-identical.
nlohmann::ordered_json report_json(const std::vector<Report>& reports, bool timings = false);
std::string report_csv(const std::vector<Report>& reports);
/// An empty path writes to stdout; I/O failures raise Error with the system message.
void emit_report(const std::vector<Report>& reports, ReportFormat format, const std::string& path,
                 bool timings = false);

}  // namespace kahred
