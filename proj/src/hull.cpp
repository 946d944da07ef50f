#include "abplab/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "abplab/errors.hpp"

namespace abplab {

namespace {

inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  e = (a - av) + (b - bv);
}

long long cross(const LiftedPoint& o, const LiftedPoint& a, const LiftedPoint& b) {
  return static_cast<long long>(a.i - o.i) * (b.j - o.j) -
         static_cast<long long>(a.j - o.j) * (b.i - o.i);
}

}  // namespace

int exact_sign_dot(const double* w, const double* z, int count) {
  // Shewchuk grow-expansion over the error-free products w*z = p + e.
  std::vector<double> h;
  h.reserve(2 * static_cast<std::size_t>(count));
  auto grow = [&h](double b) {
    double q = b;
    for (double& hi : h) {
      double s, e;
      two_sum(q, hi, s, e);
      hi = e;
      q = s;
    }
    h.push_back(q);
  };
  for (int k = 0; k < count; ++k) {
    if (w[k] == 0.0 || z[k] == 0.0) continue;
    const double p = w[k] * z[k];
    const double e = std::fma(w[k], z[k], -p);
    grow(e);
    grow(p);
  }
  for (auto it = h.rbegin(); it != h.rend(); ++it) {
    if (*it > 0) return 1;
    if (*it < 0) return -1;
  }
  return 0;
}

int orient_above_1d(const LiftedPoint& a, const LiftedPoint& b, const LiftedPoint& c) {
  const double w[3] = {double(c.i - b.i), -double(c.i - a.i), double(b.i - a.i)};
  const double z[3] = {a.z, b.z, c.z};
  return exact_sign_dot(w, z, 3);
}

int orient_above_2d(const LiftedPoint& a, const LiftedPoint& b, const LiftedPoint& c,
                    const LiftedPoint& q) {
  const double dqx = q.i - a.i, dqy = q.j - a.j;
  const double nz = double(cross(a, b, c));
  const double wc = double(b.j - a.j) * dqx - double(b.i - a.i) * dqy;
  const double wb = -double(c.j - a.j) * dqx + double(c.i - a.i) * dqy;
  const double wa = -(wb + wc + nz);
  const double w[4] = {wa, wb, wc, nz};
  const double z[4] = {a.z, b.z, c.z, q.z};
  return exact_sign_dot(w, z, 4);
}

std::vector<int> upper_hull_1d(const std::vector<LiftedPoint>& pts) {
  std::vector<int> chain;
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    if (k > 0 && pts[k].i <= pts[k - 1].i) throw ArgumentError("upper_hull_1d: i must increase");
    while (chain.size() >= 2 &&
           orient_above_1d(pts[chain[chain.size() - 2]], pts[k], pts[chain.back()]) <= 0)
      chain.pop_back();
    chain.push_back(k);
  }
  return chain;
}

namespace {

struct Facet {
  std::array<int, 3> v;
  std::array<int, 3> nb{-1, -1, -1};  // neighbour across edge v[e] -> v[e+1]
  std::vector<int> outside;
  int far = -1;
  double far_height = 0.0;
  bool alive = true;
};

class Quickhull {
 public:
  explicit Quickhull(const std::vector<LiftedPoint>& p) : p_(p) {}

  UpperHull2d run() {
    const auto poly = projected_hull();
    if (poly.size() < 3) throw NumericError("upper hull: projected points are collinear", 0.0);
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) add_facet({poly[0], poly[k], poly[k + 1]});
    link_all();
    flip_to_concave();

    std::vector<char> is_vertex(p_.size(), 0);
    for (int v : poly) is_vertex[v] = 1;
    std::vector<int> pending;
    for (int k = 0; k < static_cast<int>(p_.size()); ++k)
      if (!is_vertex[k]) pending.push_back(k);
    std::vector<int> all;
    for (int f = 0; f < static_cast<int>(f_.size()); ++f) all.push_back(f);
    assign(pending, all);

    std::vector<int> stack;
    for (int f = 0; f < static_cast<int>(f_.size()); ++f)
      if (!f_[f].outside.empty()) stack.push_back(f);
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      if (!f_[f].alive || f_[f].outside.empty()) continue;
      for (int nf : insert(f)) {
        if (!f_[nf].outside.empty()) stack.push_back(nf);
      }
    }

    UpperHull2d out;
    for (const auto& fc : f_)
      if (fc.alive) out.facets.push_back(fc.v);
    return out;
  }

 private:
  std::vector<int> projected_hull() const {
    std::vector<int> idx(p_.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return p_[a].i != p_[b].i ? p_[a].i < p_[b].i : p_[a].j < p_[b].j;
    });
    if (idx.size() < 3) return idx;
    std::vector<int> h(2 * idx.size());
    std::size_t m = 0;
    for (int k : idx) {
      while (m >= 2 && cross(p_[h[m - 2]], p_[h[m - 1]], p_[k]) <= 0) --m;
      h[m++] = k;
    }
    const std::size_t lower = m + 1;
    for (auto it = idx.rbegin() + 1; it != idx.rend(); ++it) {
      while (m >= lower && cross(p_[h[m - 2]], p_[h[m - 1]], p_[*it]) <= 0) --m;
      h[m++] = *it;
    }
    h.resize(m - 1);
    return h;
  }

  int add_facet(std::array<int, 3> v) {
    Facet fc;
    fc.v = v;
    f_.push_back(std::move(fc));
    return static_cast<int>(f_.size()) - 1;
  }

  void link_all() {
    std::unordered_map<long long, std::pair<int, int>> edges;
    auto key = [](int a, int b) { return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b); };
    for (int f = 0; f < static_cast<int>(f_.size()); ++f) {
      if (!f_[f].alive) continue;
      for (int e = 0; e < 3; ++e) edges[key(f_[f].v[e], f_[f].v[(e + 1) % 3])] = {f, e};
    }
    for (int f = 0; f < static_cast<int>(f_.size()); ++f) {
      if (!f_[f].alive) continue;
      for (int e = 0; e < 3; ++e) {
        auto it = edges.find(key(f_[f].v[(e + 1) % 3], f_[f].v[e]));
        f_[f].nb[e] = it == edges.end() ? -1 : it->second.first;
      }
    }
  }

  static int opposite(const Facet& g, int a, int b) {
    for (int v : g.v)
      if (v != a && v != b) return v;
    return -1;
  }

  // Lawson flips on the initial fan; its vertices are in convex position so
  // every quadrilateral is convex and flips terminate at the upper hull.
  void flip_to_concave() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int f = 0; f < static_cast<int>(f_.size()) && !changed; ++f) {
        for (int e = 0; e < 3 && !changed; ++e) {
          const int g = f_[f].nb[e];
          if (g < 0) continue;
          const int a = f_[f].v[e], b = f_[f].v[(e + 1) % 3], c = f_[f].v[(e + 2) % 3];
          const int d = opposite(f_[g], a, b);
          if (orient_above_2d(p_[a], p_[b], p_[c], p_[d]) > 0) {
            f_[f].v = {a, d, c};
            f_[g].v = {d, b, c};
            link_all();
            changed = true;
          }
        }
      }
    }
  }

  bool in_triangle(const Facet& fc, const LiftedPoint& q) const {
    for (int e = 0; e < 3; ++e)
      if (cross(p_[fc.v[e]], p_[fc.v[(e + 1) % 3]], q) < 0) return false;
    return true;
  }

  double height(const Facet& fc, const LiftedPoint& q) const {
    const auto &a = p_[fc.v[0]], &b = p_[fc.v[1]], &c = p_[fc.v[2]];
    const double nz = double(cross(a, b, c));
    const double bx = b.i - a.i, by = b.j - a.j, cx = c.i - a.i, cy = c.j - a.j;
    const double bz = b.z - a.z, cz = c.z - a.z;
    const double nx = by * cz - bz * cy, ny = bz * cx - bx * cz;
    const double plane = a.z - (nx * (q.i - a.i) + ny * (q.j - a.j)) / nz;
    return q.z - plane;
  }

  // Hands each point to the first candidate facet covering its projection,
  // keeping it only when it is strictly above that facet's plane.
  void assign(const std::vector<int>& points, const std::vector<int>& facets) {
    for (int k : points) {
      for (int f : facets) {
        Facet& fc = f_[f];
        if (!in_triangle(fc, p_[k])) continue;
        if (orient_above_2d(p_[fc.v[0]], p_[fc.v[1]], p_[fc.v[2]], p_[k]) > 0) {
          const double ht = height(fc, p_[k]);
          if (fc.far < 0 || ht > fc.far_height) {
            fc.far = k;
            fc.far_height = ht;
          }
          fc.outside.push_back(k);
        }
        break;
      }
    }
  }

  std::vector<int> insert(int start) {
    const int q = f_[start].far;
    const LiftedPoint& pq = p_[q];
    std::vector<int> visible{start};
    std::vector<char> mark(f_.size(), 0);
    mark[start] = 1;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      for (int g : f_[visible[k]].nb) {
        if (g < 0 || mark[g]) continue;
        if (orient_above_2d(p_[f_[g].v[0]], p_[f_[g].v[1]], p_[f_[g].v[2]], pq) > 0) {
          mark[g] = 1;
          visible.push_back(g);
        } else {
          mark[g] = 2;
        }
      }
    }

    struct Horizon {
      int a, b, outer;
    };
    std::vector<Horizon> horizon;
    std::vector<int> orphans;
    for (int f : visible) {
      for (int e = 0; e < 3; ++e) {
        const int g = f_[f].nb[e];
        if (g >= 0 && mark[g] == 1) continue;
        horizon.push_back({f_[f].v[e], f_[f].v[(e + 1) % 3], g});
      }
      for (int k : f_[f].outside)
        if (k != q) orphans.push_back(k);
      f_[f].alive = false;
      f_[f].outside.clear();
      f_[f].outside.shrink_to_fit();
    }

    std::vector<int> created;
    std::unordered_map<int, int> ends_at, starts_at;  // horizon vertex -> new facet
    for (const auto& h : horizon) {
      const long long o = cross(p_[h.a], p_[h.b], pq);
      if (o == 0) {
        if (h.outer >= 0) throw NumericError("upper hull: degenerate interior horizon edge", 0.0);
        continue;  // q splits a boundary edge
      }
      if (o < 0) throw NumericError("upper hull: horizon not visible from apex", 0.0);
      const int nf = add_facet({h.a, h.b, q});
      f_[nf].nb[0] = h.outer;
      if (h.outer >= 0) {
        Facet& g = f_[h.outer];
        for (int e = 0; e < 3; ++e)
          if (g.v[e] == h.b && g.v[(e + 1) % 3] == h.a) g.nb[e] = nf;
      }
      ends_at[h.b] = nf;
      starts_at[h.a] = nf;
      created.push_back(nf);
    }
    for (int nf : created) {
      const int a = f_[nf].v[0], b = f_[nf].v[1];
      auto it = starts_at.find(b);  // edge b -> q pairs with q -> b
      f_[nf].nb[1] = it == starts_at.end() ? -1 : it->second;
      auto jt = ends_at.find(a);
      f_[nf].nb[2] = jt == ends_at.end() ? -1 : jt->second;
    }
    assign(orphans, created);
    return created;
  }

  const std::vector<LiftedPoint>& p_;
  std::vector<Facet> f_;
};

}  // namespace

UpperHull2d upper_hull_2d(const std::vector<LiftedPoint>& pts) { return Quickhull(pts).run(); }

}  // namespace abplab
