#include "abplab/abp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "abplab/errors.hpp"
#include "abplab/potential.hpp"

namespace abplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> parse_numbers(const std::string& body, const std::string& spec) {
  std::vector<double> out;
  std::istringstream is(body);
  std::string item;
  while (std::getline(is, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v))
      throw ArgumentError("bad number '" + item + "' in right-hand side '" + spec + "'");
    out.push_back(v);
  }
  return out;
}

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

}  // namespace

Jet2::Jet2(double r_, std::vector<double> p_, SymMat a_) : r(r_), p(std::move(p_)), a(std::move(a_)) {
  if (static_cast<int>(p.size()) != a.dim()) throw ArgumentError("jet gradient and Hessian sizes differ");
}

RhsForm parse_rhs(const std::string& spec) {
  static const char* kForms = "expected const:c, gauss:a,s[,cx,cy] or poly:a0,a1,...";
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ArgumentError("right-hand side '" + spec + "': " + kForms);
  const std::string name = spec.substr(0, colon);
  const auto v = parse_numbers(spec.substr(colon + 1), spec);
  RhsForm f;
  f.spec = spec;
  if (name == "const") {
    if (v.size() != 1 || v[0] < 0) throw ArgumentError("const needs one value c >= 0");
    const double c = v[0];
    f.eval = [c](const std::vector<double>&) { return c; };
    f.lipschitz = [](double) { return 0.0; };
  } else if (name == "gauss") {
    if ((v.size() != 2 && v.size() != 4) || v[0] < 0 || !(v[1] > 0))
      throw ArgumentError("gauss needs a >= 0, s > 0 and an optional centre cx,cy");
    const double a = v[0], s = v[1];
    const double cx = v.size() == 4 ? v[2] : 0.0, cy = v.size() == 4 ? v[3] : 0.0;
    f.eval = [a, s, cx, cy](const std::vector<double>& x) {
      double r2 = (x[0] - cx) * (x[0] - cx);
      if (x.size() > 1) r2 += (x[1] - cy) * (x[1] - cy);
      return a * std::exp(-r2 / (2.0 * s * s));
    };
    f.lipschitz = [a, s](double) { return a / s * std::exp(-0.5); };
  } else if (name == "poly") {
    if (v.empty()) throw ArgumentError("poly needs at least one coefficient");
    f.eval = [v](const std::vector<double>& x) {
      const double r2 = norm2(x);
      double acc = 0.0;
      for (auto it = v.rbegin(); it != v.rend(); ++it) acc = acc * r2 + *it;
      return acc;
    };
    f.lipschitz = [v](double radius) {
      double l = 0.0;
      for (std::size_t k = 1; k < v.size(); ++k)
        l += 2.0 * k * std::abs(v[k]) * std::pow(radius, 2.0 * k - 1.0);
      return l;
    };
  } else {
    throw ArgumentError("unknown right-hand side '" + spec + "': " + kForms);
  }
  return f;
}

EquationSpec EquationSpec::on_grid(PolyOperator op, const std::string& f_spec, const GridFn& grid) {
  if (op.dim() != grid.dim())
    throw ArgumentError("operator dimension " + std::to_string(op.dim()) +
                        " does not match grid dimension " + std::to_string(grid.dim()));
  RhsForm f = parse_rhs(f_spec);
  double radius = 0.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const double m = std::max(std::abs(grid.lower()[a]), std::abs(grid.upper()[a]));
    radius += m * m;
  }
  radius = std::sqrt(radius);
  for (int k = 0; k < grid.size(); ++k) {
    if (!grid.is_active(k)) continue;
    const double fx = f.eval(grid.coords(k));
    if (!(fx >= 0.0) || !std::isfinite(fx))
      throw ArgumentError("right-hand side '" + f_spec + "' is negative or not finite on the grid");
  }
  const double l = f.lipschitz(radius);
  EquationSpec eq{std::move(op), std::move(f), std::nullopt};
  if (l > 0.0) eq.f_lipschitz = l;
  return eq;
}

double fiber_tolerance(const SymMat& a) { return 1e-9 * (1.0 + frobenius_norm(a)); }

bool in_constraint_cone(const PolyOperator& g, const SymMat& a) { return in_closed_cone(g, a); }

bool fiber_contains(const EquationSpec& eq, const std::vector<double>& x, const Jet2& jet,
                    double extra_tol) {
  if (!in_constraint_cone(eq.op, jet.a)) return false;
  return eq.op.evaluate(jet.a) >= eq.f.eval(x) - fiber_tolerance(jet.a) - extra_tol;
}

bool dual_fiber_contains(const EquationSpec& eq, const std::vector<double>& x, const Jet2& jet,
                         double extra_tol) {
  const SymMat neg = -1.0 * jet.a;
  if (!in_constraint_cone(eq.op, neg)) return true;
  return eq.op.evaluate(neg) <= eq.f.eval(x) + fiber_tolerance(jet.a) + extra_tol;
}

bool super_fiber_contains(const EquationSpec& eq, const std::vector<double>& x, const Jet2& jet,
                          double extra_tol) {
  if (!in_constraint_cone(eq.op, jet.a)) return true;
  return eq.op.evaluate(jet.a) <= eq.f.eval(x) + fiber_tolerance(jet.a) + extra_tol;
}

std::vector<NodeFlags> classify_classical(const EquationSpec& eq, const GridFn& grid,
                                          const ClassicalSample& u) {
  std::vector<NodeFlags> out(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    if (!grid.is_active(k)) continue;
    const auto x = grid.coords(k);
    const Jet2 jet(u.u(x), u.grad(x), u.hess(x));
    out[k] = {fiber_contains(eq, x, jet), super_fiber_contains(eq, x, jet),
              dual_fiber_contains(eq, x, jet)};
  }
  return out;
}

std::vector<std::optional<NodeFlags>> classify_stencil(const EquationSpec& eq, const GridFn& u,
                                                       double tol_disc) {
  std::vector<std::optional<NodeFlags>> out(u.size());
  for (int k = 0; k < u.size(); ++k) {
    const auto hess = hessian_stencil(u, k);
    if (!hess) continue;
    const auto x = u.coords(k);
    const Jet2 jet(u[k], std::vector<double>(u.dim(), 0.0), *hess);
    // Cone membership is judged on the matrix moved up by tol_disc along I
    // so stencil noise at the cone boundary does not decide the flag.
    const Jet2 lifted(u[k], jet.p, shift(*hess, tol_disc));
    out[k] = NodeFlags{in_constraint_cone(eq.op, lifted.a) &&
                           eq.op.evaluate(jet.a) >= eq.f.eval(x) - fiber_tolerance(jet.a) - tol_disc,
                       super_fiber_contains(eq, x, jet, tol_disc),
                       dual_fiber_contains(eq, x, jet, tol_disc)};
  }
  return out;
}

double modulus_delta(const EquationSpec& eq, double /*margin*/, double eta) {
  if (!(eta > 0.0)) throw ArgumentError("modulus_delta: eta must be > 0");
  if (!eq.f_lipschitz || *eq.f_lipschitz <= 0.0) return kInf;
  const double d = std::pow(eta, eq.op.degree()) / *eq.f_lipschitz;
  return std::max(d, 1e-12);
}

double eps_star(double delta, double m) {
  if (!(delta > 0.0) || !(m > 0.0)) throw ArgumentError("eps_star: delta and M must be > 0");
  return delta * delta / (4.0 * m);
}

CheckReport semiconvex_pipeline_check(const EquationSpec& eq, const GridFn& w,
                                      const PipelineOptions& opt) {
  if (!(opt.eta > 0.0)) throw ArgumentError("pipeline: eta must be > 0");
  CheckReport r;
  r.suite = "pipeline";
  r.op = eq.op.spec();
  r.params = {{"f", eq.f.spec}, {"eta", opt.eta}};
  const double h = w.max_spacing();
  const double tol_disc = opt.tol_constant * h;
  r.tolerance = tol_disc;
  r.scale_note = "slack f(x) - g(-D^2 w_eta^eps) at contact nodes; tolerance " +
                 std::to_string(opt.tol_constant) + " h";

  double m = 0.0;
  for (int k = 0; k < w.size(); ++k)
    if (w.is_active(k)) m = std::max(m, std::abs(w[k]));
  const double delta = modulus_delta(eq, 0.0, opt.eta);
  const double eps = m > 0.0 && std::isfinite(delta) ? eps_star(delta, m) : kInf;
  const double cap = opt.delta_cap > 0.0 ? opt.delta_cap : 2.0 * h;
  const double delta_used = std::min(delta, cap);
  const double eps_used = m > 0.0 ? eps_star(delta_used, m) : kInf;
  r.extra = {{"delta", json_number(delta)},
             {"eps_star", json_number(eps)},
             {"delta_used", delta_used},
             {"eps_used", json_number(eps_used)},
             {"M", m},
             {"tol_disc", tol_disc}};
  if (delta_used < delta) r.notes.push_back("delta capped at " + std::to_string(cap));

  const GridFn smoothed = std::isfinite(eps_used) ? sup_convolution(w, eps_used) : w;
  const GridFn approx = perturb(smoothed, opt.eta);
  const ContactMask contact = upper_contact_set(approx);

  SlackTracker tracker;
  int inner = 0, contact_nodes = 0, violations = 0;
  for (int k = 0; k < w.size(); ++k) {
    if (!w.is_interior(k) || w.distance_to_boundary(k) <= delta_used * (1.0 + 1e-12)) continue;
    ++inner;
    if (!contact.flag[k]) continue;
    ++contact_nodes;
    const auto hess = hessian_stencil(approx, k);
    if (!hess) continue;
    const SymMat a = psd_clip(-1.0 * *hess);
    const auto x = w.coords(k);
    const double fx = eq.f.eval(x);
    const double gval = eq.op.evaluate(a);
    const double slack = fx - gval;
    if (slack < -tol_disc) ++violations;
    tracker.offer(slack, {{"node", k}, {"x", x}, {"hessian", *hess}, {"g", gval}, {"f", fx}});
  }
  r.extra["inner_nodes"] = inner;
  r.extra["contact_nodes"] = contact_nodes;
  r.extra["violations"] = violations;
  tracker.write_to(r);
  if (inner == 0) r.skipped = "inner region empty: delta too large for the box";
  r.finalize();
  return r;
}

nlohmann::json OscillationBound::to_json() const {
  return {{"osc_in", osc_in},
          {"osc_bd", osc_bd},
          {"error_term", error_term},
          {"restricted_term", restricted_term},
          {"slack", slack},
          {"restricted_slack", restricted_slack}};
}

namespace {

OscillationBound oscillation_terms(const EquationSpec& eq, const GridFn& h, bool restricted) {
  if (eq.op.dim() != h.dim()) throw ArgumentError("operator dimension does not match the grid");
  const int d = h.dim();
  const double big_n = eq.op.degree();
  const double vol = h.cell_volume();
  std::vector<char> lower;
  if (restricted) lower = lower_contact_set(h).flag;
  double full = 0.0, part = 0.0;
  for (int k = 0; k < h.size(); ++k) {
    if (!h.is_interior(k)) continue;
    const double term = std::pow(eq.f.eval(h.coords(k)), d / big_n) * vol;
    full += term;
    if (restricted && lower[k] && hessian_stencil(h, k)) part += term;
  }
  const double c = h.diam() /
                   (std::pow(unit_ball_volume(d), 1.0 / d) *
                    std::pow(eq.op.value_at_identity(), 1.0 / big_n));
  OscillationBound b;
  b.osc_in = h.max_interior() - h.min_interior();
  b.osc_bd = h.max_boundary() - h.min_boundary();
  b.error_term = c * std::pow(full, 1.0 / d);
  b.restricted_term = restricted ? c * std::pow(part, 1.0 / d) : b.error_term;
  b.slack = b.osc_bd + b.error_term - b.osc_in;
  b.restricted_slack = b.osc_bd + b.restricted_term - b.osc_in;
  return b;
}

}  // namespace

OscillationBound oscillation_bound_check(const EquationSpec& eq, const GridFn& h) {
  return oscillation_terms(eq, h, false);
}

OscillationBound c11_oscillation_check(const EquationSpec& eq, const GridFn& h) {
  return oscillation_terms(eq, h, true);
}

nlohmann::json MaxPrincipleRecord::to_json() const {
  return {{"admissible", admissible}, {"slack", slack},   {"min_trace", min_trace},
          {"trace_ok", trace_ok},     {"pass", passed}};
}

MaxPrincipleRecord max_principle_check(const EquationSpec& eq, const GridFn& grid,
                                       const ClassicalSample& u) {
  const auto flags = classify_classical(eq, grid, u);
  MaxPrincipleRecord rec;
  rec.admissible = true;
  rec.min_trace = kInf;
  double scale = 1.0;
  double max_in = -kInf, max_bd = -kInf;
  for (int k = 0; k < grid.size(); ++k) {
    if (!grid.is_active(k)) continue;
    const auto x = grid.coords(k);
    rec.admissible = rec.admissible && flags[k].admissible_sub;
    const SymMat a = u.hess(x);
    rec.min_trace = std::min(rec.min_trace, trace(a));
    scale = std::max(scale, 1.0 + frobenius_norm(a));
    const double v = u.u(x);
    if (grid.is_interior(k)) max_in = std::max(max_in, v);
    else max_bd = std::max(max_bd, v);
  }
  rec.slack = max_bd - max_in;
  rec.trace_ok = rec.min_trace >= -1e-9 * scale;
  rec.passed = rec.admissible && rec.trace_ok && rec.slack >= -1e-9;
  return rec;
}

const GridFn& require_converged(const SolveResult& r, bool force) {
  if (!r.converged && !force)
    throw PreconditionError("solver output did not converge (residual " +
                            std::to_string(r.residual) + "); pass force to check it anyway");
  return r.u;
}

}  // namespace abplab
