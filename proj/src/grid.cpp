#include "abplab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "abplab/errors.hpp"

namespace abplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool inside_disk(const DiskMask& m, double x, double y) {
  const double dx = x - m.cx, dy = y - m.cy;
  return dx * dx + dy * dy <= m.r * m.r * (1.0 + 1e-12);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ArgumentError("grid csv: bad number '" + s + "'");
  }
  if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos)
    throw ArgumentError("grid csv: bad number '" + s + "'");
  return v;
}

}  // namespace

GridFn::GridFn(std::vector<double> lower, std::vector<double> upper, std::vector<int> shape,
               std::vector<double> values, std::optional<DiskMask> mask)
    : lower_(std::move(lower)),
      upper_(std::move(upper)),
      shape_(std::move(shape)),
      values_(std::move(values)),
      mask_(mask) {
  const std::size_t d = shape_.size();
  if (d < 1 || d > 2) throw ArgumentError("grid dimension must be 1 or 2");
  if (lower_.size() != d || upper_.size() != d) throw ArgumentError("grid box has wrong dimension");
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) {
    if (shape_[a] < 3) throw ArgumentError("grid needs at least 3 nodes per axis");
    if (!(upper_[a] > lower_[a]) || !std::isfinite(lower_[a]) || !std::isfinite(upper_[a]))
      throw ArgumentError("grid box must satisfy lower < upper");
    h_.push_back((upper_[a] - lower_[a]) / (shape_[a] - 1));
    total *= static_cast<std::size_t>(shape_[a]);
  }
  if (values_.size() != total) throw ArgumentError("grid values do not match shape");
  for (double v : values_)
    if (!std::isfinite(v)) throw ArgumentError("grid values must be finite");
  if (mask_ && d != 2) throw ArgumentError("disk mask requires a 2-D grid");
  if (mask_ && !(mask_->r > 0.0)) throw ArgumentError("disk mask radius must be positive");
  build_roles();
}

GridFn GridFn::sample(std::vector<double> lower, std::vector<double> upper, std::vector<int> shape,
                      const std::function<double(const Point&)>& fn, std::optional<DiskMask> mask) {
  std::size_t total = 1;
  for (int s : shape) total *= static_cast<std::size_t>(std::max(s, 0));
  GridFn g(lower, upper, shape, std::vector<double>(total, 0.0), mask);
  for (int k = 0; k < g.size(); ++k) g.values_[k] = fn(g.coords(k));
  for (double v : g.values_)
    if (!std::isfinite(v)) throw ArgumentError("grid values must be finite");
  return g;
}

void GridFn::build_roles() {
  const int total = size();
  roles_.assign(total, NodeRole::Interior);
  auto on_face = [&](int k) {
    const auto mi = multi_index(k);
    for (int a = 0; a < dim(); ++a)
      if (mi[a] == 0 || mi[a] == shape_[a] - 1) return true;
    return false;
  };
  if (!mask_) {
    for (int k = 0; k < total; ++k)
      if (on_face(k)) roles_[k] = NodeRole::Boundary;
    return;
  }
  std::vector<char> in(total);
  for (int k = 0; k < total; ++k) {
    const auto x = coords(k);
    in[k] = inside_disk(*mask_, x[0], x[1]);
  }
  for (int k = 0; k < total; ++k) {
    if (in[k]) {
      roles_[k] = on_face(k) ? NodeRole::Boundary : NodeRole::Interior;
      continue;
    }
    roles_[k] = NodeRole::Exterior;
    for (auto [a, b] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int nb = neighbour(k, a, b);
      if (nb >= 0 && in[nb]) {
        roles_[k] = NodeRole::Boundary;
        break;
      }
    }
  }
}

double GridFn::max_spacing() const { return *std::max_element(h_.begin(), h_.end()); }

double GridFn::cell_volume() const {
  double v = 1.0;
  for (double h : h_) v *= h;
  return v;
}

GridFn GridFn::with_values(std::vector<double> values) const {
  return GridFn(lower_, upper_, shape_, std::move(values), mask_);
}

std::array<int, 2> GridFn::multi_index(int k) const {
  if (dim() == 1) return {k, 0};
  return {k % shape_[0], k / shape_[0]};
}

GridFn::Point GridFn::coords(int k) const {
  const auto mi = multi_index(k);
  Point x(dim());
  for (int a = 0; a < dim(); ++a) {
    // Hit the upper corner exactly rather than accumulating spacing error.
    x[a] = mi[a] == shape_[a] - 1 ? upper_[a] : lower_[a] + mi[a] * h_[a];
  }
  return x;
}

int GridFn::neighbour(int k, int d0, int d1) const {
  const auto mi = multi_index(k);
  const int i0 = mi[0] + d0;
  if (i0 < 0 || i0 >= shape_[0]) return -1;
  if (dim() == 1) return d1 == 0 ? i0 : -1;
  const int i1 = mi[1] + d1;
  if (i1 < 0 || i1 >= shape_[1]) return -1;
  return index(i0, i1);
}

double GridFn::distance_to_boundary(int k) const {
  const auto x = coords(k);
  double d = kInf;
  for (int a = 0; a < dim(); ++a) d = std::min({d, x[a] - lower_[a], upper_[a] - x[a]});
  if (mask_) d = std::min(d, mask_->r - std::hypot(x[0] - mask_->cx, x[1] - mask_->cy));
  return std::max(d, 0.0);
}

double GridFn::diam() const {
  if (mask_) return 2.0 * mask_->r;
  double s = 0.0;
  for (int a = 0; a < dim(); ++a) s += (upper_[a] - lower_[a]) * (upper_[a] - lower_[a]);
  return std::sqrt(s);
}

double GridFn::max_interior() const {
  double m = -kInf;
  for (int k = 0; k < size(); ++k)
    if (is_interior(k)) m = std::max(m, values_[k]);
  return m;
}

double GridFn::min_interior() const {
  double m = kInf;
  for (int k = 0; k < size(); ++k)
    if (is_interior(k)) m = std::min(m, values_[k]);
  return m;
}

double GridFn::max_boundary() const {
  double m = -kInf;
  for (int k = 0; k < size(); ++k)
    if (is_boundary(k)) m = std::max(m, values_[k]);
  return m;
}

double GridFn::min_boundary() const {
  double m = kInf;
  for (int k = 0; k < size(); ++k)
    if (is_boundary(k)) m = std::min(m, values_[k]);
  return m;
}

nlohmann::json GridFn::to_json() const {
  nlohmann::json j;
  j["format"] = "abplab-grid";
  j["version"] = 1;
  j["shape"] = shape_;
  j["lower"] = lower_;
  j["upper"] = upper_;
  if (mask_) j["mask"] = {{"kind", "disk"}, {"cx", mask_->cx}, {"cy", mask_->cy}, {"r", mask_->r}};
  j["values"] = values_;
  return j;
}

GridFn GridFn::from_json(const nlohmann::json& j) {
  try {
    std::optional<DiskMask> mask;
    if (j.contains("mask")) {
      const auto& m = j.at("mask");
      if (m.value("kind", std::string("disk")) != "disk")
        throw ArgumentError("grid json: unknown mask kind");
      mask = DiskMask{m.at("cx").get<double>(), m.at("cy").get<double>(), m.at("r").get<double>()};
    }
    return GridFn(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>(),
                  j.at("shape").get<std::vector<int>>(), j.at("values").get<std::vector<double>>(),
                  mask);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("grid json: ") + e.what());
  }
}

std::string GridFn::to_csv() const {
  std::ostringstream os;
  os << "# abplab-grid v1\n# shape";
  for (int s : shape_) os << ',' << s;
  os << "\n# box";
  for (double v : lower_) os << ',' << fmt(v);
  for (double v : upper_) os << ',' << fmt(v);
  os << '\n';
  if (mask_)
    os << "# mask,disk," << fmt(mask_->cx) << ',' << fmt(mask_->cy) << ',' << fmt(mask_->r) << '\n';
  os << "index";
  for (int a = 0; a < dim(); ++a) os << ",x" << a;
  os << ",value\n";
  for (int k = 0; k < size(); ++k) {
    os << k;
    for (double c : coords(k)) os << ',' << fmt(c);
    os << ',' << fmt(values_[k]) << '\n';
  }
  return os.str();
}

GridFn GridFn::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<int> shape;
  std::vector<double> box;
  std::optional<DiskMask> mask;
  std::vector<double> values;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto f = split(line.substr(1), ',');
      if (f.empty()) continue;
      const std::string key = f[0].substr(f[0].find_first_not_of(' '));
      if (key == "shape") {
        for (std::size_t i = 1; i < f.size(); ++i) shape.push_back(static_cast<int>(to_double(f[i])));
      } else if (key == "box") {
        for (std::size_t i = 1; i < f.size(); ++i) box.push_back(to_double(f[i]));
      } else if (key == "mask") {
        if (f.size() != 5 || f[1] != "disk") throw ArgumentError("grid csv: bad mask line");
        mask = DiskMask{to_double(f[2]), to_double(f[3]), to_double(f[4])};
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto f = split(line, ',');
    if (f.size() != shape.size() + 2) throw ArgumentError("grid csv: wrong column count");
    if (static_cast<std::size_t>(to_double(f[0])) != values.size())
      throw ArgumentError("grid csv: rows out of order");
    values.push_back(to_double(f.back()));
  }
  if (shape.empty() || box.size() != 2 * shape.size()) throw ArgumentError("grid csv: missing header");
  const std::size_t d = shape.size();
  return GridFn(std::vector<double>(box.begin(), box.begin() + d),
                std::vector<double>(box.begin() + d, box.end()), shape, std::move(values), mask);
}

GridFn negate(const GridFn& u) {
  std::vector<double> v = u.values();
  for (double& x : v) x = -x;
  return u.with_values(std::move(v));
}

}  // namespace abplab
