#include <algorithm>
#include <iterator>
#include <map>
#include <numeric>
#include <vector>

#include "flowopt/moo.hpp"

namespace flowopt::moo {
namespace {

struct P3 {
  double x, y, z;
};

std::vector<P3> inside(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& ref,
                       Eigen::Index skip = -1) {
  std::vector<P3> out;
  out.reserve(static_cast<std::size_t>(points.rows()));
  const Eigen::Index k = points.cols();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (i == skip) continue;
    if (!(points.row(i).transpose().array() < ref.array()).all()) continue;
    out.push_back({points(i, 0), k > 1 ? points(i, 1) : 0.0, k > 2 ? points(i, 2) : 0.0});
  }
  return out;
}

double area_2d(std::vector<P3> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end(), [](const P3& a, const P3& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  double area = 0.0;
  double floor_y = ry;
  for (const auto& p : pts) {
    if (p.y < floor_y) {
      area += (rx - p.x) * (floor_y - p.y);
      floor_y = p.y;
    }
  }
  return area;
}

// Sweep along z; the (x, y) cross-section is a staircase whose dominated
// area is updated incrementally as points enter.
double volume_3d(std::vector<P3> pts, const Eigen::Vector3d& ref) {
  std::sort(pts.begin(), pts.end(), [](const P3& a, const P3& b) { return a.z < b.z; });
  const double rx = ref(0), ry = ref(1);
  std::map<double, double> stair;  // x ascending, y strictly descending
  double area = 0.0;
  double volume = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const P3& p = pts[i];
    auto it = stair.upper_bound(p.x);
    double ceiling = ry;  // y of the staircase just left of p.x
    if (it != stair.begin()) {
      ceiling = std::prev(it)->second;
    }
    if (ceiling > p.y) {
      // Walk right over steps at or after p.x with y >= p.y; they are
      // dominated by p and removed. The gained area is the region under
      // the old staircase and above p.y, from p.x to where the staircase
      // first drops below p.y.
      auto cur = stair.lower_bound(p.x);
      double x_left = p.x;
      double h = ceiling;
      while (cur != stair.end() && cur->second >= p.y) {
        area += (cur->first - x_left) * (h - p.y);
        x_left = cur->first;
        h = cur->second;
        cur = stair.erase(cur);
      }
      const double x_right = cur == stair.end() ? rx : cur->first;
      area += (x_right - x_left) * (h - p.y);
      stair.emplace_hint(cur, p.x, p.y);
    }
    const double z_next = i + 1 < pts.size() ? pts[i + 1].z : ref(2);
    volume += area * (z_next - p.z);
  }
  return volume;
}

double measure(const std::vector<P3>& pts, const Eigen::Ref<const Eigen::VectorXd>& ref) {
  if (pts.empty()) return 0.0;
  switch (ref.size()) {
    case 1: {
      double best = ref(0);
      for (const auto& p : pts) best = std::min(best, p.x);
      return ref(0) - best;
    }
    case 2: return area_2d(pts, ref(0), ref(1));
    default: return volume_3d(pts, Eigen::Vector3d(ref(0), ref(1), ref(2)));
  }
}

void check(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& ref) {
  require(ref.size() >= 1 && ref.size() <= 3, ErrorKind::invalid_input,
          "exact hypervolume is implemented for one to three objectives");
  require(points.rows() == 0 || points.cols() == ref.size(), ErrorKind::invalid_input,
          "hypervolume points and reference differ in dimension");
  require(points.allFinite() && ref.allFinite(), ErrorKind::invalid_input, "hypervolume got non-finite values");
}

}  // namespace

double hypervolume(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& ref) {
  check(points, ref);
  return measure(inside(points, ref), ref);
}

Eigen::VectorXd hypervolume_contributions(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                          const Eigen::Ref<const Eigen::VectorXd>& ref) {
  check(points, ref);
  const double total = measure(inside(points, ref), ref);
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i) = std::max(0.0, total - measure(inside(points, ref, i), ref));
  }
  return out;
}

}  // namespace flowopt::moo
