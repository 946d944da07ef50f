#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "abplab/abp.hpp"
#include "abplab/errors.hpp"
#include "abplab/operators.hpp"
#include "abplab/suites.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kFailed = 1;
constexpr int kConfigError = 2;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw abplab::ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw abplab::ConfigError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run(const std::string& config_path, bool parallel, const std::string& out_dir) {
  auto cfg = abplab::load_config(config_path);
  if (parallel) cfg.parallel = true;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const auto result = abplab::run_all(cfg);
  const fs::path dir(cfg.output_dir);
  write_file(dir / "report.json", abplab::report_json_text(result));
  write_file(dir / "summary.csv", abplab::summary_csv_text(result));
  for (const auto& [name, text] : result.files) write_file(dir / name, text);
  std::cout << abplab::summary_csv_text(result);
  std::cout << (result.passed ? "all suites passed" : "some suites failed") << " (" << (dir / "report.json").string()
            << ")\n";
  return result.passed ? 0 : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abplab: property checks for Garding operators and Alexandrov-type estimates"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run the suites of a config file");
  std::string config_path, out_dir;
  bool parallel = false;
  run_cmd->add_option("config", config_path, "INI config file")->required();
  run_cmd->add_flag("--parallel", parallel, "Run suites concurrently");
  run_cmd->add_option("--out", out_dir, "Override run.output_dir");

  auto* ops_cmd = app.add_subcommand("ops", "Operator catalog");
  auto* ops_list = ops_cmd->add_subcommand("list", "List the operator grammar");
  ops_cmd->require_subcommand(1);

  auto* solve_cmd = app.add_subcommand("solve", "Solve g(D^2 u) = f on a box and dump the grid");
  std::string op_spec = "det:n=2", f_spec = "const:1", boundary = "poly:0,0.5", grid_out = "grid.csv";
  std::vector<double> box{0, 0, 1, 1};
  int shape = 65, max_iter = 20000;
  double tol = 1e-10;
  bool experimental = false;
  solve_cmd->add_option("--op", op_spec, "Operator (det:n=2 or trace:n=2)")->capture_default_str();
  solve_cmd->add_option("--f", f_spec, "Right-hand side: const:c, gauss:a,s[,cx,cy], poly:a0,...")
      ->capture_default_str();
  solve_cmd->add_option("--boundary", boundary, "Dirichlet data, same forms as --f")->capture_default_str();
  solve_cmd->add_option("--box", box, "x0 y0 x1 y1")->expected(4)->delimiter(',')->capture_default_str();
  solve_cmd->add_option("--shape", shape, "Nodes per axis (<= 257)")->capture_default_str();
  solve_cmd->add_option("--tol", tol, "Residual tolerance")->capture_default_str();
  solve_cmd->add_option("--max-iter", max_iter, "Sweep limit")->capture_default_str();
  solve_cmd->add_flag("--experimental", experimental, "Allow operators other than det and trace");
  solve_cmd->add_option("--out", grid_out, "Grid CSV path")->capture_default_str();

  auto* merge_cmd = app.add_subcommand("merge", "Merge report.json files into one CSV");
  std::vector<std::string> reports;
  std::string merge_out;
  merge_cmd->add_option("reports", reports, "report.json files")->required();
  merge_cmd->add_option("--out", merge_out, "Write the CSV here instead of stdout");

  auto* defaults_cmd = app.add_subcommand("defaults", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run_cmd) return run(config_path, parallel, out_dir);
    if (*ops_list) {
      for (const auto& line : abplab::catalog_forms()) std::cout << line << '\n';
      return 0;
    }
    if (*defaults_cmd) {
      std::cout << abplab::default_config_text();
      return 0;
    }
    if (*solve_cmd) {
      abplab::SolveOptions opt;
      opt.op = abplab::parse_operator(op_spec);
      opt.tol = tol;
      opt.max_iter = max_iter;
      opt.experimental = experimental;
      const auto f = abplab::parse_rhs(f_spec);
      const auto bd = abplab::parse_rhs(boundary);
      const auto res = abplab::solve_ma_2d(f.eval, bd.eval, {box[0], box[1]}, {box[2], box[3]}, {shape, shape}, opt);
      write_file(grid_out, res.u.to_csv());
      std::cout << "converged=" << (res.converged ? "true" : "false") << " iterations=" << res.iterations
                << " residual=" << res.residual << " grid=" << grid_out << '\n';
      return res.converged ? 0 : kFailed;
    }
    if (*merge_cmd) {
      std::vector<std::pair<std::string, nlohmann::json>> docs;
      for (const auto& path : reports) {
        try {
          docs.emplace_back(path, nlohmann::json::parse(read_file(path)));
        } catch (const nlohmann::json::exception& e) {
          throw abplab::ConfigError(path + ": " + e.what());
        }
      }
      const std::string csv = abplab::merge_reports(docs);
      if (merge_out.empty()) std::cout << csv;
      else write_file(merge_out, csv);
      return 0;
    }
  } catch (const abplab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  } catch (const abplab::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kConfigError;
}
