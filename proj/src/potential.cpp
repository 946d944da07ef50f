#include "abplab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "abplab/errors.hpp"
#include "abplab/hull.hpp"

namespace abplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Upper envelope of parabolas f[q] - (x - x_q)^2 / (2 eps), x_q = q h,
// evaluated at every x_k = k h. Entries equal to -inf are absent.
void envelope_1d(const std::vector<double>& f, double h, double eps, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  // Minimising (x - x_q)^2 + g_q with g_q = -2 eps f_q.
  auto key = [&](int q) { return -2.0 * eps * f[q] + (q * h) * (q * h); };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == -kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = (key(q) - key(v[k])) / (2.0 * h * (q - v[k]));
    while (k > 0 && s <= z[k]) {
      --k;
      s = (key(q) - key(v[k])) / (2.0 * h * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  out.assign(n, -kInf);
  if (k < 0) return;
  int j = 0;
  for (int x = 0; x < n; ++x) {
    const double px = x * h;
    while (z[j + 1] < px) ++j;
    const double d = px - v[j] * h;
    out[x] = f[v[j]] - d * d / (2.0 * eps);
  }
}

std::array<double, 3> plane_normal(const LiftedPoint& a, const LiftedPoint& b,
                                   const LiftedPoint& c) {
  const double bx = b.i - a.i, by = b.j - a.j, cx = c.i - a.i, cy = c.j - a.j;
  const double bz = b.z - a.z, cz = c.z - a.z;
  return {by * cz - bz * cy, bz * cx - bx * cz, bx * cy - by * cx};
}

ContactMask contact_1d(const GridFn& u, double tol) {
  const int n = u.size();
  std::vector<LiftedPoint> pts(n);
  for (int k = 0; k < n; ++k) pts[k] = {k, 0, u[k]};
  const auto chain = upper_hull_1d(pts);
  ContactMask m;
  m.flag.assign(n, 0);
  m.grad.assign(n, {0.0, 0.0});
  m.tolerance = tol;
  for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
    const int a = chain[s], b = chain[s + 1];
    if (s + 2 < chain.size() && orient_above_1d(pts[a], pts[chain[s + 2]], pts[b]) <= 0)
      throw NumericError("contact certificate: hull chain is not strictly concave", 0.0);
    const double slope = (u[b] - u[a]) / (b - a);
    for (int k = a; k <= b; ++k) {
      const int side = orient_above_1d(pts[a], pts[b], pts[k]);
      if (side > 0) throw NumericError("contact certificate: node above its hull segment", 0.0);
      const double env = u[a] + slope * (k - a);
      if (side == 0 || env - u[k] <= tol) {
        if (!m.flag[k]) m.grad[k] = {slope / u.spacing(0), 0.0};
        m.flag[k] = 1;
      }
    }
  }
  return m;
}

ContactMask contact_2d(const GridFn& u, double tol) {
  const int n0 = u.shape()[0];
  std::vector<LiftedPoint> pts;
  std::vector<int> node_of;
  std::vector<int> point_of(u.size(), -1);
  for (int k = 0; k < u.size(); ++k) {
    if (!u.is_active(k)) continue;
    point_of[k] = static_cast<int>(pts.size());
    pts.push_back({k % n0, k / n0, u[k]});
    node_of.push_back(k);
  }
  const auto hull = upper_hull_2d(pts);

  // Certificate part 1: every interior hull edge is locally concave.
  std::unordered_map<long long, int> edge_owner;
  auto key = [](int a, int b) { return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b); };
  for (int f = 0; f < static_cast<int>(hull.facets.size()); ++f)
    for (int e = 0; e < 3; ++e) edge_owner[key(hull.facets[f][e], hull.facets[f][(e + 1) % 3])] = f;
  for (const auto& fc : hull.facets) {
    for (int e = 0; e < 3; ++e) {
      const int a = fc[e], b = fc[(e + 1) % 3];
      auto it = edge_owner.find(key(b, a));
      if (it == edge_owner.end()) continue;
      const auto& g = hull.facets[it->second];
      int d = g[0];
      for (int v : g)
        if (v != a && v != b) d = v;
      if (orient_above_2d(pts[fc[0]], pts[fc[1]], pts[fc[2]], pts[d]) > 0)
        throw NumericError("contact certificate: hull is not locally concave", 0.0);
    }
  }

  // Part 2: every active node is covered by a facet and lies on or below it.
  ContactMask m;
  m.flag.assign(u.size(), 0);
  m.grad.assign(u.size(), {0.0, 0.0});
  m.tolerance = tol;
  std::vector<char> covered(u.size(), 0);
  const double h0 = u.spacing(0), h1 = u.spacing(1);
  for (const auto& fc : hull.facets) {
    const auto &a = pts[fc[0]], &b = pts[fc[1]], &c = pts[fc[2]];
    const auto nrm = plane_normal(a, b, c);
    const int i_lo = std::min({a.i, b.i, c.i}), i_hi = std::max({a.i, b.i, c.i});
    const int j_lo = std::min({a.j, b.j, c.j}), j_hi = std::max({a.j, b.j, c.j});
    for (int j = j_lo; j <= j_hi; ++j) {
      for (int i = i_lo; i <= i_hi; ++i) {
        const int k = i + n0 * j;
        if (covered[k] || point_of[k] < 0) continue;
        const LiftedPoint& q = pts[point_of[k]];
        bool inside = true;
        for (int e = 0; e < 3 && inside; ++e) {
          const auto& p = pts[fc[e]];
          const auto& r = pts[fc[(e + 1) % 3]];
          inside = static_cast<long long>(r.i - p.i) * (q.j - p.j) -
                       static_cast<long long>(r.j - p.j) * (q.i - p.i) >=
                   0;
        }
        if (!inside) continue;
        covered[k] = 1;
        const int side = orient_above_2d(a, b, c, q);
        if (side > 0) throw NumericError("contact certificate: node above the hull", 0.0);
        const double env = a.z - (nrm[0] * (i - a.i) + nrm[1] * (j - a.j)) / nrm[2];
        if (side == 0 || env - q.z <= tol) {
          m.flag[k] = 1;
          m.grad[k] = {-nrm[0] / nrm[2] / h0, -nrm[1] / nrm[2] / h1};
        }
      }
    }
  }
  for (int k = 0; k < u.size(); ++k)
    if (u.is_active(k) && !covered[k])
      throw NumericError("contact certificate: node not covered by the hull", 0.0);
  return m;
}

}  // namespace

int ContactMask::count() const { return static_cast<int>(std::count(flag.begin(), flag.end(), 1)); }

std::string ContactMask::to_csv(const GridFn& u) const {
  std::ostringstream os;
  os << "index";
  for (int a = 0; a < u.dim(); ++a) os << ",x" << a;
  os << ",contact";
  for (int a = 0; a < u.dim(); ++a) os << ",p" << a;
  os << '\n';
  for (int k = 0; k < u.size(); ++k) {
    os << k;
    for (double c : u.coords(k)) os << ',' << fmt(c);
    os << ',' << int(flag[k]);
    for (int a = 0; a < u.dim(); ++a) os << ',' << (flag[k] ? fmt(grad[k][a]) : "");
    os << '\n';
  }
  return os.str();
}

double value_scale(const GridFn& u) {
  double m = 0.0;
  for (int k = 0; k < u.size(); ++k)
    if (u.is_active(k)) m = std::max(m, std::abs(u[k]));
  return 1.0 + m;
}

GridFn sup_convolution(const GridFn& w, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("sup_convolution: eps must be > 0");
  const int n0 = w.shape()[0];
  std::vector<double> vals(w.size());
  for (int k = 0; k < w.size(); ++k) vals[k] = w.is_active(k) ? w[k] : -kInf;
  std::vector<double> line, out;
  if (w.dim() == 1) {
    envelope_1d(vals, w.spacing(0), eps, out);
    vals = out;
  } else {
    const int n1 = w.shape()[1];
    line.resize(n0);
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) line[i] = vals[i + n0 * j];
      envelope_1d(line, w.spacing(0), eps, out);
      for (int i = 0; i < n0; ++i) vals[i + n0 * j] = out[i];
    }
    line.resize(n1);
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) line[j] = vals[i + n0 * j];
      envelope_1d(line, w.spacing(1), eps, out);
      for (int j = 0; j < n1; ++j) vals[i + n0 * j] = out[j];
    }
  }
  for (int k = 0; k < w.size(); ++k)
    if (!w.is_active(k)) vals[k] = w[k];
  return w.with_values(std::move(vals));
}

GridFn perturb(const GridFn& w, double eta) {
  if (!(eta >= 0.0)) throw ArgumentError("perturb: eta must be >= 0");
  std::vector<double> vals = w.values();
  for (int k = 0; k < w.size(); ++k) {
    double r2 = 0.0;
    for (double c : w.coords(k)) r2 += c * c;
    vals[k] += 0.5 * eta * r2;
  }
  return w.with_values(std::move(vals));
}

ContactMask upper_contact_set(const GridFn& u) {
  const double tol = 1e-9 * value_scale(u);
  return u.dim() == 1 ? contact_1d(u, tol) : contact_2d(u, tol);
}

ContactMask lower_contact_set(const GridFn& v) {
  ContactMask m = upper_contact_set(negate(v));
  for (auto& p : m.grad) p = {-p[0], -p[1]};
  m.lower = true;
  return m;
}

std::optional<SymMat> hessian_stencil(const GridFn& u, int node) {
  if (!u.is_interior(node)) return std::nullopt;
  auto at = [&](int d0, int d1) -> std::optional<double> {
    const int k = u.neighbour(node, d0, d1);
    if (k < 0 || !u.is_active(k)) return std::nullopt;
    return u[k];
  };
  const double c = u[node];
  if (u.dim() == 1) {
    const auto l = at(-1, 0), r = at(1, 0);
    if (!l || !r) return std::nullopt;
    const double h = u.spacing(0);
    return SymMat(1, {(*l - 2.0 * c + *r) / (h * h)});
  }
  std::optional<double> nb[3][3];
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) {
      if (a == 0 && b == 0) continue;
      nb[a + 1][b + 1] = at(a, b);
      if (!nb[a + 1][b + 1]) return std::nullopt;
    }
  const double h0 = u.spacing(0), h1 = u.spacing(1);
  const double uxx = (*nb[2][1] - 2.0 * c + *nb[0][1]) / (h0 * h0);
  const double uyy = (*nb[1][2] - 2.0 * c + *nb[1][0]) / (h1 * h1);
  const double uxy = (*nb[2][2] - *nb[2][0] - *nb[0][2] + *nb[0][0]) / (4.0 * h0 * h1);
  return SymMat(2, {uxx, uxy, uyy});
}

double unit_ball_volume(int d) {
  if (d == 1) return 2.0;
  if (d == 2) return std::numbers::pi;
  throw ArgumentError("unit ball volume: dimension must be 1 or 2");
}

nlohmann::json AlexandrovRecord::to_json() const {
  return {{"lhs", lhs},           {"boundary", boundary},
          {"integral", integral}, {"rhs", rhs},
          {"slack", slack},       {"contact_nodes", contact_nodes},
          {"integrated_nodes", integrated_nodes}};
}

nlohmann::json OscillationRecord::to_json() const {
  return {{"osc_in", osc_in}, {"osc_bd", osc_bd}, {"error_term", error_term}, {"slack", slack}};
}

AlexandrovRecord alexandrov_check(const GridFn& u) {
  const ContactMask m = upper_contact_set(u);
  AlexandrovRecord r;
  r.lhs = u.max_interior();
  r.boundary = u.max_boundary();
  const double vol = u.cell_volume();
  for (int k = 0; k < u.size(); ++k) {
    if (!m.flag[k]) continue;
    ++r.contact_nodes;
    const auto hess = hessian_stencil(u, k);
    if (!hess) continue;
    ++r.integrated_nodes;
    r.integral += std::max(0.0, det(psd_clip(-1.0 * *hess))) * vol;
  }
  const int d = u.dim();
  r.rhs = r.boundary + u.diam() / std::pow(unit_ball_volume(d), 1.0 / d) *
                           std::pow(r.integral, 1.0 / d);
  r.slack = r.rhs - r.lhs;
  return r;
}

AlexandrovRecord alexandrov_lower_check(const GridFn& v) {
  AlexandrovRecord r = alexandrov_check(negate(v));
  r.lhs = -r.lhs;
  r.boundary = -r.boundary;
  r.rhs = -r.rhs;
  return r;
}

OscillationRecord oscillation_c11_check(const GridFn& w) {
  const ContactMask up = upper_contact_set(w);
  const ContactMask lo = lower_contact_set(w);
  double sum = 0.0;
  const double vol = w.cell_volume();
  for (int k = 0; k < w.size(); ++k) {
    if (!up.flag[k] && !lo.flag[k]) continue;
    const auto hess = hessian_stencil(w, k);
    if (hess) sum += std::abs(det(*hess)) * vol;
  }
  const int d = w.dim();
  OscillationRecord r;
  r.osc_in = w.max_interior() - w.min_interior();
  r.osc_bd = w.max_boundary() - w.min_boundary();
  r.error_term = std::pow(2.0, 1.0 - 1.0 / d) * w.diam() /
                 std::pow(unit_ball_volume(d), 1.0 / d) * std::pow(sum, 1.0 / d);
  r.slack = r.osc_bd + r.error_term - r.osc_in;
  return r;
}

double semiconvexity_modulus(const GridFn& u) {
  std::vector<std::array<int, 2>> dirs{{1, 0}};
  if (u.dim() == 2) dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  double lowest = 0.0;
  for (int k = 0; k < u.size(); ++k) {
    if (!u.is_active(k)) continue;
    for (const auto& v : dirs) {
      const int p = u.neighbour(k, v[0], v[1]), q = u.neighbour(k, -v[0], -v[1]);
      if (p < 0 || q < 0 || !u.is_active(p) || !u.is_active(q)) continue;
      double len2 = 0.0;
      for (int a = 0; a < u.dim(); ++a) len2 += (v[a] * u.spacing(a)) * (v[a] * u.spacing(a));
      lowest = std::min(lowest, (u[p] - 2.0 * u[k] + u[q]) / len2);
    }
  }
  return lowest < 0.0 ? -lowest : 0.0;
}

}  // namespace abplab
