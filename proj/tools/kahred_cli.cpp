// kahred: build scenarios, run the verification suites, write a report.
//
// Exit status: 0 all gates pass, 1 some gate fails, 2 configuration or build error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kahred/scenarios.hpp"

using namespace kahred;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

void summarize(const Report& r) {
  int pass = 0, fail = 0, na = 0;
  for (const Gate& g : r.gates) {
    if (!g.applicable) ++na;
    else if (g.pass()) ++pass;
    else {
      ++fail;
      std::cerr << "  FAIL " << g.suite << "/" << g.name << ": max " << g.stat.max << " > " << g.tolerance << "\n";
    }
  }
  std::cerr << r.config.name << " n=" << r.config.n << ": " << pass << " pass, " << fail << " fail, " << na
            << " not applicable\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kähler reduction verification suites"};
  std::string config_path, scenario, tol_set, suites, report_path, format = "json";
  int n = 0, grid = 0;
  unsigned long long seed = 0;
  double epsilon = -1.0;
  bool timings = false, serial = false;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--scenario", scenario, "hopf, cpn-sphere, cpn-perturbed or all");
  app.add_option("--n", n, "complex dimension");
  app.add_option("--grid", grid, "grid points per circle factor");
  app.add_option("--tol-set", tol_set, "default, strict or loose");
  app.add_option("--suites", suites, "comma-separated: geometry,moment,orbit,identities,ricci");
  app.add_option("--report", report_path, "report path (stdout when omitted)");
  app.add_option("--format", format, "json or csv");
  app.add_option("--seed", seed, "sample seed");
  app.add_option("--epsilon", epsilon, "cpn-perturbed bump height");
  app.add_flag("--timings", timings, "add wall-clock timings to the json report");
  app.add_flag("--serial", serial, "evaluate points serially");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::vector<ScenarioConfig> configs;
  ReportFormat fmt;
  try {
    ScenarioConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
      cfg.merge_json(j);
    }
    const bool all = scenario == "all";
    if (!scenario.empty() && !all) cfg.name = scenario;
    if (app.count("--n")) cfg.n = n;
    if (app.count("--grid")) cfg.grid = grid;
    if (!tol_set.empty()) cfg.tolerances = Tolerances::named(tol_set);
    if (!suites.empty()) {
      cfg.suites.clear();
      for (const std::string& s : split(suites, ',')) cfg.suites.push_back(parse_suite(s));
    }
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--epsilon")) cfg.epsilon = epsilon;
    fmt = parse_format(format);
    configs = all ? default_scenarios(cfg) : std::vector<ScenarioConfig>{cfg};
  } catch (const Error& e) {
    std::cerr << "kahred: " << e.what() << "\n";
    return 2;
  }

  std::vector<Report> reports;
  try {
    const Execution ex = serial ? Execution::Serial : Execution::Parallel;
    for (const ScenarioConfig& c : configs) {
      reports.push_back(run_suite(build_scenario(c), ex));
      summarize(reports.back());
    }
    emit_report(reports, fmt, report_path, timings);
  } catch (const Error& e) {
    std::cerr << "kahred: " << e.what() << "\n";
    return 2;
  }
  for (const Report& r : reports)
    if (!r.passed()) return 1;
  return 0;
}
