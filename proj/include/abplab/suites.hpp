#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abplab/abp.hpp"
#include "abplab/grid.hpp"
#include "abplab/report.hpp"
#include "json.hpp"

namespace abplab {

/// Resolved run configuration: every known key of every section, with
/// defaults filled in.
struct RunConfig {
  std::vector<std::string> suites;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool parallel = false;
  std::map<std::string, std::map<std::string, std::string>> sections;

  const std::string& get(const std::string& section, const std::string& key) const;
  nlohmann::json to_json() const;
};

/// Manufactured inputs shared by the suites and the acceptance checks.
struct GridCase {
  std::string name;
  GridFn u;
};
/// d = 1 anchor 1 - x^2 on [-1, 1], then 2-D bumps, a semiconvex wave, a
/// concave quadratic and an affine function on [-1, 1]^2.
std::vector<GridCase> alexandrov_cases(int shape);

struct PipelineCase {
  std::string name;
  EquationSpec eq;
  GridFn w;
  int spike_node = -1;  // negative control: the violation must be found here
};
/// Dual subharmonic inputs on [-1, 1]^2, then the concave-spike control.
std::vector<PipelineCase> pipeline_cases(int shape);

struct SolutionCase {
  std::string name;
  EquationSpec eq;
  GridFn h;
  bool converged = true;
};
/// Exact quadratic solutions for det and sigma:k, solver outputs for
/// f = const:1 and a Gaussian bump, on [0, 1]^2 with `shape` nodes per
/// axis; then the disk anchor on [-1, 1]^2 with `disk_shape`.
std::vector<SolutionCase> solution_cases(int shape, int disk_shape);

struct ClassicalCase {
  std::string name;
  EquationSpec eq;
  GridFn grid;
  ClassicalSample u;
  bool expect_admissible = true;
};
/// Smooth samples for the maximum principle on [-1, 1]^2.
std::vector<ClassicalCase> max_principle_cases(int shape);

/// Suite names in canonical order.
const std::vector<std::string>& suite_names();

/// INI text: a [run] section (suites, seed, output_dir, parallel) and one
/// optional section per suite. Unknown sections or keys, bad values and an
/// empty suite list are ConfigErrors. ABPLAB_SEED overrides run.seed.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// The configuration used when a section is absent, as INI text.
std::string default_config_text();

struct SuiteOutput {
  std::vector<CheckReport> reports;
  /// Plot-ready files (name relative to the output directory, contents).
  std::vector<std::pair<std::string, std::string>> files;
};

SuiteOutput run_suite(const std::string& name, const RunConfig& cfg);

struct RunOutput {
  nlohmann::json report;  // {"schema", "config", "suites", "pass"}
  std::vector<CheckReport> reports;
  std::vector<std::pair<std::string, std::string>> files;
  bool passed = false;
};

/// Runs the configured suites in order (concurrently with cfg.parallel;
/// output order and contents do not depend on it).
RunOutput run_all(const RunConfig& cfg);

/// report.json and summary.csv contents.
std::string report_json_text(const RunOutput& out);
std::string summary_csv_text(const RunOutput& out);

}  // namespace abplab
