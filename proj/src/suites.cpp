#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include "abplab/abp.hpp"
#include "abplab/errors.hpp"
#include "abplab/majorization.hpp"
#include "abplab/operators.hpp"
#include "abplab/potential.hpp"
#include "abplab/rng.hpp"
#include "abplab/suites.hpp"

namespace abplab {

namespace {

using Point = std::vector<double>;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ';')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

long to_long(const std::string& v, const std::string& what) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(what + ": expected an integer, got '" + v + "'");
  return x;
}

double to_double(const std::string& v, const std::string& what) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(x))
    throw ConfigError(what + ": expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v) { return v == "true" || v == "1" || v == "yes"; }

std::vector<PolyOperator> operators_of(const RunConfig& cfg, const std::string& section) {
  std::vector<PolyOperator> ops;
  for (const auto& s : split_list(cfg.get(section, "operators"))) {
    try {
      ops.push_back(parse_operator(s));
    } catch (const ArgumentError& e) {
      throw ConfigError(section + ".operators: " + e.what());
    }
  }
  if (ops.empty()) throw ConfigError(section + ".operators is empty");
  return ops;
}

std::uint64_t suite_seed(const RunConfig& cfg, const std::string& suite, std::size_t item) {
  const auto& names = suite_names();
  const auto pos = static_cast<std::uint64_t>(std::find(names.begin(), names.end(), suite) - names.begin());
  return stream_id(cfg.seed, (pos << 16) + item);
}

SymMat quad_hessian(double a, double b, double c) { return SymMat(2, {a, b, c}); }

// u = 1/2 x^T A x + <l, x> with A = [[a, b], [b, c]].
ClassicalSample quadratic(std::string name, double a, double b, double c, double l0 = 0.0,
                          double l1 = 0.0) {
  ClassicalSample s;
  s.name = std::move(name);
  s.u = [=](const Point& x) {
    return 0.5 * (a * x[0] * x[0] + 2 * b * x[0] * x[1] + c * x[1] * x[1]) + l0 * x[0] + l1 * x[1];
  };
  s.grad = [=](const Point& x) { return Point{a * x[0] + b * x[1] + l0, b * x[0] + c * x[1] + l1}; };
  s.hess = [=](const Point&) { return quad_hessian(a, b, c); };
  return s;
}

const std::vector<double> kSquare0{0.0, 0.0}, kSquare1{1.0, 1.0};
const std::vector<double> kBox0{-1.0, -1.0}, kBox1{1.0, 1.0};

CheckReport base_report(const std::string& suite, const std::string& op, nlohmann::json params) {
  CheckReport r;
  r.suite = suite;
  r.op = op;
  r.params = std::move(params);
  return r;
}

SuiteOutput run_ops(const RunConfig& cfg) {
  SuiteOutput out;
  for (const auto& g : operators_of(cfg, "ops")) {
    CheckReport r = base_report("ops", g.spec(), nlohmann::json::object());
    const auto k = is_I_central(g);
    const bool round_trip = parse_operator(g.spec()).spec() == g.spec();
    r.extra = {{"degree", g.degree()},
               {"dim", g.dim()},
               {"value_at_identity", g.value_at_identity()},
               {"cone", g.cone() == ConeKind::Psd ? "psd" : "garding"},
               {"orthogonally_invariant", g.orthogonally_invariant()},
               {"central_k", k ? nlohmann::json(*k) : nlohmann::json(nullptr)},
               {"spec_round_trip", round_trip}};
    r.scale_note = "catalog entry";
    r.min_slack = round_trip ? 0.0 : -1.0;
    r.finalize();
    out.reports.push_back(std::move(r));
  }
  return out;
}

SuiteOutput run_central(const RunConfig& cfg) {
  SuiteOutput out;
  const double tol = to_double(cfg.get("central", "tol"), "central.tol");
  for (const auto& g : operators_of(cfg, "central")) {
    CheckReport r = base_report("central", g.spec(), {{"tol", tol}});
    const auto probe = central_gradient(g);
    const auto k = is_I_central(g, tol);
    r.samples = 1;
    r.min_slack = tol * (1.0 + std::abs(probe.k)) - probe.deviation;
    r.tolerance = 0.0;
    r.scale_note = "tol (1 + k) - max |D_I g - k I|";
    r.witness = {{"k", probe.k}, {"deviation", probe.deviation}};
    r.extra = {{"k", probe.k}, {"central", k.has_value()}};
    r.finalize();
    out.reports.push_back(std::move(r));
  }
  return out;
}

template <class Fn>
SuiteOutput run_sampled(const RunConfig& cfg, const std::string& suite, Fn check) {
  SuiteOutput out;
  const long samples = to_long(cfg.get(suite, "samples"), suite + ".samples");
  std::size_t i = 0;
  for (const auto& g : operators_of(cfg, suite)) {
    CheckReport r = check(g, samples, suite_seed(cfg, suite, i++));
    r.suite = suite;
    out.reports.push_back(std::move(r));
  }
  return out;
}

SuiteOutput run_majorize(const RunConfig& cfg) {
  SuiteOutput out;
  SweepOptions opt;
  opt.samples = to_long(cfg.get("majorize", "samples"), "majorize.samples");
  opt.hunt = to_bool(cfg.get("majorize", "hunt"));
  opt.hunt_starts = static_cast<int>(to_long(cfg.get("majorize", "hunt_starts"), "majorize.hunt_starts"));
  opt.hunt_iterations =
      static_cast<int>(to_long(cfg.get("majorize", "hunt_iterations"), "majorize.hunt_iterations"));
  std::size_t i = 0;
  for (const auto& g : operators_of(cfg, "majorize")) {
    opt.seed = suite_seed(cfg, "majorize", i++);
    out.reports.push_back(dm_sweep(g, opt));
  }
  return out;
}

SuiteOutput run_maclaurin(const RunConfig& cfg) {
  SuiteOutput out;
  const long samples = to_long(cfg.get("maclaurin", "samples"), "maclaurin.samples");
  std::size_t i = 0;
  for (const auto& d : split_list(cfg.get("maclaurin", "dims"))) {
    const int n = static_cast<int>(to_long(d, "maclaurin.dims"));
    out.reports.push_back(maclaurin_check(n, samples, suite_seed(cfg, "maclaurin", i++)));
  }
  return out;
}

SuiteOutput run_coeffcond(const RunConfig& cfg) {
  SuiteOutput out;
  const int num_tau = static_cast<int>(to_long(cfg.get("coeffcond", "num_tau"), "coeffcond.num_tau"));
  std::size_t i = 0;
  for (const auto& g : operators_of(cfg, "coeffcond"))
    out.reports.push_back(coefficient_condition(g, num_tau, suite_seed(cfg, "coeffcond", i++)));
  return out;
}

SuiteOutput run_alexandrov(const RunConfig& cfg) {
  SuiteOutput out;
  for (const auto& s : split_list(cfg.get("alexandrov", "shapes"))) {
    const int shape = static_cast<int>(to_long(s, "alexandrov.shapes"));
    for (const auto& c : alexandrov_cases(shape)) {
      const double h = c.u.max_spacing();
      CheckReport r = base_report("alexandrov", "d=" + std::to_string(c.u.dim()),
                                  {{"case", c.name}, {"shape", shape}, {"h", h}});
      const auto rec = alexandrov_check(c.u);
      r.samples = rec.integrated_nodes;
      r.min_slack = rec.slack;
      r.tolerance = 5.0 * h;
      r.scale_note = "rhs - lhs; tolerance 5 h";
      r.witness = rec.to_json();
      r.finalize();
      out.reports.push_back(std::move(r));
    }
  }
  return out;
}

SuiteOutput run_pipeline(const RunConfig& cfg) {
  SuiteOutput out;
  const int shape = static_cast<int>(to_long(cfg.get("pipeline", "shape"), "pipeline.shape"));
  PipelineOptions opt;
  opt.eta = to_double(cfg.get("pipeline", "eta"), "pipeline.eta");
  opt.tol_constant = to_double(cfg.get("pipeline", "tol_constant"), "pipeline.tol_constant");
  for (const auto& c : pipeline_cases(shape)) {
    CheckReport r = semiconvex_pipeline_check(c.eq, c.w, opt);
    r.params["case"] = c.name;
    if (c.spike_node >= 0) {
      // Negative control: passes when the violation is caught at the spike.
      const bool caught = !r.passed && r.skipped.empty() && r.witness.is_object() &&
                          r.witness.value("node", -1) == c.spike_node;
      r.notes.push_back("negative control: passes when the violation is found at node " +
                        std::to_string(c.spike_node));
      r.extra["control_detected"] = caught;
      r.passed = caught;
    }
    out.reports.push_back(std::move(r));
  }
  return out;
}

SuiteOutput run_oscillation(const RunConfig& cfg) {
  SuiteOutput out;
  const int shape = static_cast<int>(to_long(cfg.get("oscillation", "shape"), "oscillation.shape"));
  const int disk = static_cast<int>(to_long(cfg.get("oscillation", "disk_shape"), "oscillation.disk_shape"));
  for (const auto& c : solution_cases(shape, disk)) {
    const double h = c.h.max_spacing();
    CheckReport r = base_report("oscillation", c.eq.op.spec(), {{"case", c.name}, {"f", c.eq.f.spec}, {"h", h}});
    r.tolerance = 5.0 * h;
    r.scale_note = "osc_bd + error_term - osc_in; tolerance 5 h";
    if (!c.converged) {
      r.skipped = "solver did not converge";
      r.finalize();
      out.reports.push_back(std::move(r));
      continue;
    }
    const auto b = c11_oscillation_check(c.eq, c.h);
    r.samples = c.h.size();
    r.min_slack = b.slack;
    r.witness = b.to_json();
    r.finalize();
    if (b.restricted_term > b.error_term) {
      r.passed = false;
      r.notes.push_back("restricted error term exceeds the full one");
    }
    out.reports.push_back(std::move(r));
  }
  for (const auto& c : max_principle_cases(shape)) {
    CheckReport r = base_report("maxprinciple", c.eq.op.spec(), {{"case", c.name}, {"f", c.eq.f.spec}});
    const auto rec = max_principle_check(c.eq, c.grid, c.u);
    r.samples = c.grid.size();
    r.min_slack = rec.slack;
    r.tolerance = 1e-9;
    r.scale_note = "max boundary - max interior";
    r.witness = rec.to_json();
    if (c.expect_admissible) {
      r.passed = rec.passed;
    } else {
      r.notes.push_back("control: the sample is not admissible and must be rejected");
      r.passed = !rec.admissible;
    }
    out.reports.push_back(std::move(r));
  }
  return out;
}

SuiteOutput run_solve(const RunConfig& cfg) {
  SuiteOutput out;
  SolveOptions opt;
  try {
    opt.op = parse_operator(cfg.get("solve", "operator"));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("solve.operator: ") + e.what());
  }
  opt.tol = to_double(cfg.get("solve", "tol"), "solve.tol");
  opt.max_iter = static_cast<int>(to_long(cfg.get("solve", "max_iter"), "solve.max_iter"));
  opt.experimental = to_bool(cfg.get("solve", "experimental"));
  const int shape = static_cast<int>(to_long(cfg.get("solve", "shape"), "solve.shape"));
  std::vector<double> box;
  {
    std::string b = cfg.get("solve", "box");
    std::replace(b.begin(), b.end(), ',', ';');
    for (const auto& v : split_list(b)) box.push_back(to_double(v, "solve.box"));
    if (box.size() != 4) throw ConfigError("solve.box needs x0, y0, x1, y1");
  }
  RhsForm f, bd;
  try {
    f = parse_rhs(cfg.get("solve", "f"));
    bd = parse_rhs(cfg.get("solve", "boundary"));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("solve: ") + e.what());
  }
  const std::vector<double> lo{box[0], box[1]}, hi{box[2], box[3]};
  const auto res = solve_ma_2d(f.eval, bd.eval, lo, hi, {shape, shape}, opt);
  CheckReport r = base_report("solve", opt.op->spec(), {{"f", f.spec}, {"boundary", bd.spec}, {"shape", shape}});
  const double tol_disc = 5.0 * res.u.max_spacing();
  const auto eq = EquationSpec::on_grid(*opt.op, f.spec, res.u);
  int total = 0, admissible = 0;
  for (const auto& fl : classify_stencil(eq, res.u, tol_disc)) {
    if (!fl) continue;
    ++total;
    admissible += fl->admissible_sub;
  }
  const double frac = total ? double(admissible) / total : 0.0;
  r.samples = total;
  r.min_slack = opt.tol - res.residual;
  r.tolerance = 0.0;
  r.scale_note = "solver tol - residual";
  r.witness = {{"residual", res.residual}, {"iterations", res.iterations}};
  r.extra = {{"converged", res.converged}, {"iterations", res.iterations}, {"admissible_fraction", frac}};
  r.finalize();
  r.passed = r.passed && res.converged && frac >= 0.99;
  out.reports.push_back(std::move(r));
  const std::string grid_out = cfg.get("solve", "grid_out");
  if (!grid_out.empty()) out.files.emplace_back(grid_out, res.u.to_csv());
  return out;
}

}  // namespace

std::vector<GridCase> alexandrov_cases(int shape) {
  std::vector<GridCase> cs;
  cs.push_back({"one_minus_x2", GridFn::sample({-1.0}, {1.0}, {shape}, [](const Point& x) {
                  return 1.0 - x[0] * x[0];
                })});
  auto add = [&](std::string name, std::function<double(const Point&)> fn) {
    cs.push_back({std::move(name), GridFn::sample(kBox0, kBox1, {shape, shape}, fn)});
  };
  auto g = [](const Point& x, double cx, double cy, double s) {
    return std::exp(-((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / (2 * s * s));
  };
  add("bump_center", [=](const Point& x) { return g(x, 0, 0, 0.3); });
  add("bump_offset", [=](const Point& x) { return 0.7 * g(x, 0.3, -0.2, 0.2); });
  add("bump_pair", [=](const Point& x) { return g(x, -0.4, 0.3, 0.2) + 0.5 * g(x, 0.4, -0.3, 0.15); });
  add("semiconvex_wave",
      [=](const Point& x) { return 0.5 * g(x, 0, 0, 0.5) + 0.05 * std::sin(4 * x[0]) * std::cos(3 * x[1]); });
  add("concave_quadratic", [](const Point& x) { return 1.0 - x[0] * x[0] - x[1] * x[1]; });
  add("affine", [](const Point& x) { return 0.3 * x[0] - 0.2 * x[1]; });
  return cs;
}

std::vector<PipelineCase> pipeline_cases(int shape) {
  std::vector<PipelineCase> cs;
  auto add = [&](std::string name, PolyOperator op, const std::string& f,
                 std::function<double(const Point&)> w) {
    GridFn grid = GridFn::sample(kBox0, kBox1, {shape, shape}, w);
    cs.push_back({std::move(name), EquationSpec::on_grid(std::move(op), f, grid), std::move(grid)});
  };
  const auto det2 = PolyOperator::det(2);
  auto neg_half = [](const Point& x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); };
  add("concave_quadratic", det2, "const:1", neg_half);
  add("shallow_quadratic_gauss", det2, "gauss:1,0.5",
      [](const Point& x) { return -0.05 * (x[0] * x[0] + x[1] * x[1]); });
  add("concave_quadratic_poly", det2, "poly:1,0.5", neg_half);
  add("concave_quadratic_trace", PolyOperator::trace(2), "const:2", neg_half);
  add("constant", det2, "const:1", [](const Point&) { return 0.3; });
  add("max_of_concave", det2, "const:1", [](const Point& x) {
    const double a = (x[0] - 0.3) * (x[0] - 0.3) + (x[1] - 0.1) * (x[1] - 0.1);
    const double b = (x[0] + 0.3) * (x[0] + 0.3) + (x[1] + 0.1) * (x[1] + 0.1);
    return std::max(-0.5 * a, -0.5 * b);
  });
  // A raised node makes every second difference there about -2 s / h^2.
  add("spike_control", det2, "const:1", neg_half);
  auto& spike = cs.back();
  const int centre = spike.w.index(shape / 2, shape / 2);
  auto vals = spike.w.values();
  vals[centre] += 0.05;
  spike.w = spike.w.with_values(std::move(vals));
  spike.spike_node = centre;
  return cs;
}

std::vector<SolutionCase> solution_cases(int shape, int disk_shape) {
  std::vector<SolutionCase> cs;
  struct Quad {
    const char* name;
    double a, b, c;
  };
  const Quad quads[] = {{"identity", 1, 0, 1}, {"diagonal", 2, 0, 0.5}, {"sheared", 2, 0.5, 1}};
  const std::vector<PolyOperator> ops{PolyOperator::det(2), PolyOperator::khessian(1, 2),
                                      PolyOperator::khessian(2, 2)};
  for (const auto& q : quads) {
    const auto s = quadratic(q.name, q.a, q.b, q.c);
    GridFn grid = GridFn::sample(kSquare0, kSquare1, {shape, shape}, s.u);
    for (const auto& op : ops) {
      const double fval = op.evaluate(quad_hessian(q.a, q.b, q.c));
      cs.push_back({std::string("quadratic_") + q.name, EquationSpec::on_grid(op, "const:" + fmt(fval), grid),
                    grid});
    }
  }
  auto half_sq = [](const Point& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
  for (const std::string f : {"const:1", "gauss:2,0.2,0.5,0.5"}) {
    const RhsForm rhs = parse_rhs(f);
    const auto res = solve_ma_2d(rhs.eval, half_sq, kSquare0, kSquare1, {shape, shape});
    cs.push_back({"solver_" + f.substr(0, f.find(':')), EquationSpec::on_grid(PolyOperator::det(2), f, res.u),
                  res.u, res.converged});
  }
  GridFn disk = GridFn::sample(kBox0, kBox1, {disk_shape, disk_shape}, half_sq, DiskMask{0.0, 0.0, 1.0});
  cs.push_back({"disk_anchor", EquationSpec::on_grid(PolyOperator::det(2), "const:1", disk), disk});
  return cs;
}

std::vector<ClassicalCase> max_principle_cases(int shape) {
  std::vector<ClassicalCase> cs;
  const GridFn grid = GridFn::sample(kBox0, kBox1, {shape, shape}, [](const Point&) { return 0.0; });
  auto add = [&](ClassicalSample u, PolyOperator op, const std::string& f, bool admissible) {
    std::string name = u.name;
    cs.push_back({std::move(name), EquationSpec::on_grid(std::move(op), f, grid), grid, std::move(u), admissible});
  };
  add(quadratic("convex_quadratic", 1, 0, 2), PolyOperator::det(2), "const:1", true);
  add(quadratic("tilted_quadratic", 1, 0.2, 1, 0.1, -0.3), PolyOperator::det(2), "const:0.5", true);
  add(quadratic("saddle", 2, 0, -2), PolyOperator::trace(2), "const:0", true);
  add(quadratic("saddle", 2, 0, -2), PolyOperator::khessian(1, 2), "const:0", true);
  add(quadratic("round", 1, 0, 1), PolyOperator::khessian(2, 2), "const:0.5", true);
  add(quadratic("concave", -2, 0, -2), PolyOperator::det(2), "const:0", false);
  return cs;
}

SuiteOutput run_suite(const std::string& name, const RunConfig& cfg) {
  if (name == "ops") return run_ops(cfg);
  if (name == "hyperbolic") return run_sampled(cfg, name, hyperbolicity_check);
  if (name == "central") return run_central(cfg);
  if (name == "dirichlet") return run_sampled(cfg, name, is_dirichlet);
  if (name == "ellipticity") return run_sampled(cfg, name, degenerate_ellipticity_check);
  if (name == "tame") return run_sampled(cfg, name, tameness_check);
  if (name == "majorize") return run_majorize(cfg);
  if (name == "maclaurin") return run_maclaurin(cfg);
  if (name == "coeffcond") return run_coeffcond(cfg);
  if (name == "alexandrov") return run_alexandrov(cfg);
  if (name == "pipeline") return run_pipeline(cfg);
  if (name == "oscillation") return run_oscillation(cfg);
  if (name == "solve") return run_solve(cfg);
  throw ConfigError("unknown suite '" + name + "'");
}

RunOutput run_all(const RunConfig& cfg) {
  std::vector<SuiteOutput> parts(cfg.suites.size());
  if (cfg.parallel) {
    std::vector<std::future<SuiteOutput>> futures;
    for (const auto& s : cfg.suites)
      futures.push_back(std::async(std::launch::async, [&cfg, s] { return run_suite(s, cfg); }));
    for (std::size_t i = 0; i < futures.size(); ++i) parts[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < cfg.suites.size(); ++i) parts[i] = run_suite(cfg.suites[i], cfg);
  }
  RunOutput out;
  out.passed = true;
  nlohmann::json suites = nlohmann::json::array();
  for (auto& p : parts) {
    for (auto& r : p.reports) {
      out.passed = out.passed && r.passed;
      suites.push_back(r.to_json());
      out.reports.push_back(std::move(r));
    }
    for (auto& f : p.files) out.files.push_back(std::move(f));
  }
  out.report = {{"schema", "abplab-report/1"},
                {"config", cfg.to_json()},
                {"suites", std::move(suites)},
                {"pass", out.passed}};
  return out;
}

std::string report_json_text(const RunOutput& out) { return out.report.dump(2) + "\n"; }

std::string summary_csv_text(const RunOutput& out) {
  std::string s = summary_csv_header() + "\n";
  for (const auto& r : out.reports) s += summary_csv_row(r) + "\n";
  return s;
}

}  // namespace abplab
