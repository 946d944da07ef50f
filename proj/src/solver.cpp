#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "abplab/abp.hpp"
#include "abplab/errors.hpp"
#include "abplab/potential.hpp"

namespace abplab {

namespace {

struct Frame {
  int d[2][2];    // two offsets (i, j)
  double len2[2]; // squared physical lengths
};

std::vector<Frame> det_frames(const GridFn& u) {
  const double h0 = u.spacing(0), h1 = u.spacing(1);
  const double diag = h0 * h0 + h1 * h1;
  return {Frame{{{1, 0}, {0, 1}}, {h0 * h0, h1 * h1}}, Frame{{{1, 1}, {1, -1}}, {diag, diag}}};
}

double pair_sum(const std::vector<double>& v, const GridFn& u, int k, const int* off) {
  return v[u.neighbour(k, off[0], off[1])] + v[u.neighbour(k, -off[0], -off[1])];
}

double det_operator(const std::vector<double>& v, const GridFn& u, int k,
                    const std::vector<Frame>& frames) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& fr : frames) {
    double prod = 1.0;
    for (int a = 0; a < 2; ++a)
      prod *= std::max((pair_sum(v, u, k, fr.d[a]) - 2.0 * v[k]) / fr.len2[a], 0.0);
    best = std::min(best, prod);
  }
  return best;
}

// Largest u with min over frames of prod (S_a - 2u)_+ / |v_a|^2 >= f: in
// each frame (S1 - X)(S2 - X) = f |v1|^2 |v2|^2 with X = 2u below S1, S2.
double det_local_solve(const std::vector<double>& v, const GridFn& u, int k, double f,
                       const std::vector<Frame>& frames) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& fr : frames) {
    const double a = pair_sum(v, u, k, fr.d[0]), b = pair_sum(v, u, k, fr.d[1]);
    const double c = f * fr.len2[0] * fr.len2[1];
    const double x = 0.5 * ((a + b) - std::sqrt((a - b) * (a - b) + 4.0 * c));
    best = std::min(best, 0.5 * x);
  }
  return best;
}

double laplace_operator(const std::vector<double>& v, const GridFn& u, int k) {
  const double h0 = u.spacing(0), h1 = u.spacing(1);
  const int e0[2] = {1, 0}, e1[2] = {0, 1};
  return (pair_sum(v, u, k, e0) - 2.0 * v[k]) / (h0 * h0) +
         (pair_sum(v, u, k, e1) - 2.0 * v[k]) / (h1 * h1);
}

double laplace_local_solve(const std::vector<double>& v, const GridFn& u, int k, double f) {
  const double i0 = 1.0 / (u.spacing(0) * u.spacing(0)), i1 = 1.0 / (u.spacing(1) * u.spacing(1));
  const int e0[2] = {1, 0}, e1[2] = {0, 1};
  return (pair_sum(v, u, k, e0) * i0 + pair_sum(v, u, k, e1) * i1 - f) / (2.0 * (i0 + i1));
}

SymMat stencil_at(const std::vector<double>& v, const GridFn& u, int k, double centre) {
  const double h0 = u.spacing(0), h1 = u.spacing(1);
  auto at = [&](int a, int b) { return v[u.neighbour(k, a, b)]; };
  return SymMat(2, {(at(1, 0) - 2.0 * centre + at(-1, 0)) / (h0 * h0),
                    (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h0 * h1),
                    (at(0, 1) - 2.0 * centre + at(0, -1)) / (h1 * h1)});
}

// g(H(t)) decreases in the centre value t on the closed cone; bisect for
// g = f, treating points outside the cone as below f.
double generic_local_solve(const PolyOperator& op, const std::vector<double>& v, const GridFn& u,
                           int k, double f) {
  auto above = [&](double t) {
    const SymMat h = stencil_at(v, u, k, t);
    return in_closed_cone(op, h) && op.evaluate(h) >= f;
  };
  double lo = v[k], hi = v[k];
  double step = u.max_spacing() * u.max_spacing();
  for (int it = 0; it < 200 && !above(lo); ++it, step *= 2) lo -= step;
  step = u.max_spacing() * u.max_spacing();
  for (int it = 0; it < 200 && above(hi); ++it, step *= 2) hi += step;
  for (int it = 0; it < 100 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

double discrete_operator(const PolyOperator& op, const GridFn& u, int node) {
  if (u.dim() != 2 || !u.is_interior(node)) throw ArgumentError("discrete_operator: interior 2-D node required");
  if (op.kind() == OpKind::Det) return det_operator(u.values(), u, node, det_frames(u));
  if (op.kind() == OpKind::Trace) return laplace_operator(u.values(), u, node);
  return op.evaluate(stencil_at(u.values(), u, node, u[node]));
}

SolveResult solve_ma_2d(const std::function<double(const std::vector<double>&)>& f,
                        const std::function<double(const std::vector<double>&)>& boundary,
                        std::vector<double> lower, std::vector<double> upper,
                        std::vector<int> shape, const SolveOptions& opt) {
  if (shape.size() != 2) throw ArgumentError("solve_ma_2d needs a 2-D shape");
  for (int s : shape)
    if (s > 257) throw ArgumentError("solve_ma_2d: at most 257 nodes per axis");
  const PolyOperator op = opt.op ? *opt.op : PolyOperator::det(2);
  if (op.dim() != 2) throw ArgumentError("solve_ma_2d: operator must act on 2x2 matrices");
  const bool is_det = op.kind() == OpKind::Det, is_trace = op.kind() == OpKind::Trace;
  if (!is_det && !is_trace && !opt.experimental)
    throw ArgumentError("solve_ma_2d: only det and trace are supported without the experimental flag");

  GridFn grid = GridFn::sample(lower, upper, shape, boundary);
  const int n = grid.size();
  std::vector<double> rhs(n, 0.0);
  double bmax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const auto x = grid.coords(k);
    if (grid.is_boundary(k)) {
      bmax = std::max(bmax, grid[k]);
      continue;
    }
    rhs[k] = f(x);
    if (!(rhs[k] >= 0.0) || !std::isfinite(rhs[k]))
      throw ArgumentError("solve_ma_2d: f must be finite and non-negative at every node");
  }
  std::vector<double> init = grid.values();
  for (int k = 0; k < n; ++k)
    if (grid.is_interior(k)) init[k] = bmax;
  if (is_det) {
    // Warm start from Laplace u = 2 sqrt(f): by AM-GM a discrete
    // supersolution, and exact when D^2 u is a multiple of I.
    SolveOptions warm;
    warm.op = PolyOperator::trace(2);
    warm.tol = 1e-6;
    warm.max_iter = 5000;
    const auto w = solve_ma_2d([&](const std::vector<double>& x) { return 2.0 * std::sqrt(f(x)); },
                               boundary, lower, upper, shape, warm);
    init = w.u.values();
  }

  const auto frames = det_frames(grid);
  auto local = [&](const std::vector<double>& v, int k) {
    if (is_det) return det_local_solve(v, grid, k, rhs[k], frames);
    if (is_trace) return laplace_local_solve(v, grid, k, rhs[k]);
    return generic_local_solve(op, v, grid, k, rhs[k]);
  };
  auto residual = [&](const std::vector<double>& v) {
    double r = 0.0;
    for (int k = 0; k < n; ++k) {
      if (!grid.is_interior(k)) continue;
      double val;
      if (is_det) {
        val = det_operator(v, grid, k, frames);
        // The positive parts hide non-convexity; count it separately.
        for (const auto& fr : frames)
          for (int a = 0; a < 2; ++a)
            r = std::max(r, -(pair_sum(v, grid, k, fr.d[a]) - 2.0 * v[k]) / fr.len2[a]);
      } else if (is_trace) {
        val = laplace_operator(v, grid, k);
      } else {
        val = op.evaluate(stencil_at(v, grid, k, v[k]));
      }
      r = std::max(r, std::abs(val - rhs[k]));
    }
    return r;
  };

  const int m = std::min(shape[0], shape[1]) - 1;
  double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / m));
  std::vector<double> v = init;
  double r = residual(v);
  // Over-relaxation can cycle where the minimising frame switches; halve
  // the excess over 1 whenever the residual stops halving within a window.
  double window_best = r;
  int window_start = 0;
  int it = 0;
  while (it < opt.max_iter && r > opt.tol) {
    ++it;
    for (int k = 0; k < n; ++k) {
      if (!grid.is_interior(k)) continue;
      v[k] += omega * (local(v, k) - v[k]);
    }
    r = residual(v);
    if (!std::isfinite(r)) {
      v = init;
      omega = 1.0;
      r = residual(v);
    }
    if (r < 0.5 * window_best) {
      window_best = r;
      window_start = it;
    } else if (it - window_start >= 4 * m && omega > 1.0) {
      omega = 1.0 + 0.5 * (omega - 1.0);
      if (omega < 1.01) omega = 1.0;
      window_best = r;
      window_start = it;
    }
  }
  SolveResult out{grid.with_values(std::move(v)), r <= opt.tol, it, r};
  return out;
}

}  // namespace abplab
