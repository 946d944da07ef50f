#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace abplab {

/// Disk restricting the active region of a 2-D grid.
struct DiskMask {
  double cx = 0.0, cy = 0.0, r = 1.0;
};

enum class NodeRole { Interior, Boundary, Exterior };

/// Scalar function on a uniform tensor grid over a box in R^d, d in {1, 2}.
/// Node index k = i0 + shape[0] * i1 (axis 0 fastest).
///
/// Without a mask, nodes on the box faces are boundary and the rest are
/// interior. With a disk mask, interior nodes are inside the disk and off
/// the box faces; boundary nodes are inside nodes on the faces plus outside
/// nodes with a 4-neighbour inside (a staircase around the disk); the rest
/// are exterior and ignored by every check.
class GridFn {
 public:
  using Point = std::vector<double>;

  GridFn(std::vector<double> lower, std::vector<double> upper, std::vector<int> shape,
         std::vector<double> values, std::optional<DiskMask> mask = std::nullopt);

  static GridFn sample(std::vector<double> lower, std::vector<double> upper, std::vector<int> shape,
                       const std::function<double(const Point&)>& fn,
                       std::optional<DiskMask> mask = std::nullopt);

  int dim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double spacing(int axis) const { return h_[axis]; }
  double max_spacing() const;
  /// Product of spacings, the cell measure.
  double cell_volume() const;
  int size() const { return static_cast<int>(values_.size()); }

  const std::vector<double>& values() const { return values_; }
  double operator[](int k) const { return values_[k]; }
  /// Same grid and mask, new values.
  GridFn with_values(std::vector<double> values) const;

  const std::optional<DiskMask>& mask() const { return mask_; }

  int index(int i0, int i1 = 0) const { return i0 + shape_[0] * i1; }
  std::array<int, 2> multi_index(int k) const;
  Point coords(int k) const;
  /// Node index of a multi-index offset, or -1 outside the grid.
  int neighbour(int k, int d0, int d1 = 0) const;

  NodeRole role(int k) const { return roles_[k]; }
  bool is_interior(int k) const { return roles_[k] == NodeRole::Interior; }
  bool is_boundary(int k) const { return roles_[k] == NodeRole::Boundary; }
  bool is_active(int k) const { return roles_[k] != NodeRole::Exterior; }
  /// Distance from node k to the boundary of the box (or disk, if masked).
  double distance_to_boundary(int k) const;

  /// Box diagonal, or the disk diameter when masked.
  double diam() const;

  double max_interior() const;
  double min_interior() const;
  double max_boundary() const;
  double min_boundary() const;

  nlohmann::json to_json() const;
  static GridFn from_json(const nlohmann::json& j);
  std::string to_csv() const;
  static GridFn from_csv(const std::string& text);

 private:
  void build_roles();

  std::vector<double> lower_, upper_, h_;
  std::vector<int> shape_;
  std::vector<double> values_;
  std::optional<DiskMask> mask_;
  std::vector<NodeRole> roles_;
};

GridFn negate(const GridFn& u);

}  // namespace abplab
