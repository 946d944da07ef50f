#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace abplab {

/// Exact sign of sum_i w[i] * z[i] for small integer weights (|w| < 2^26)
/// and arbitrary finite doubles, via error-free products and an expansion
/// sum.
int exact_sign_dot(const double* w, const double* z, int count);

/// Lifted point (i, j, z) with integer grid coordinates.
struct LiftedPoint {
  int i = 0, j = 0;
  double z = 0.0;
};

/// Sign of the 2-D orientation of lifted 1-D points (i, z): positive when
/// c lies strictly above the line through a and b (a.i < b.i).
int orient_above_1d(const LiftedPoint& a, const LiftedPoint& b, const LiftedPoint& c);
/// Positive when q lies strictly above the plane through a, b, c, whose
/// projection (a, b, c) must be counter-clockwise.
int orient_above_2d(const LiftedPoint& a, const LiftedPoint& b, const LiftedPoint& c,
                    const LiftedPoint& q);

/// Upper hull of lifted points over a planar index set, as a triangulation
/// of the projected convex hull. Facets are counter-clockwise in
/// projection; coplanar neighbours are not merged.
struct UpperHull2d {
  std::vector<std::array<int, 3>> facets;  // indices into the input points
};
UpperHull2d upper_hull_2d(const std::vector<LiftedPoint>& pts);

/// Upper hull vertices of points with distinct increasing i, in order.
/// Points on a hull edge are not vertices.
std::vector<int> upper_hull_1d(const std::vector<LiftedPoint>& pts);

}  // namespace abplab
