#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "flowopt/moo.hpp"

namespace flowopt::moo {
namespace {

// Points of one front projected onto objectives (1, 2), kept as a staircase:
// keys ascending, values strictly descending.
class Staircase {
 public:
  // True if some stored point is <= (a, b) in both coordinates.
  bool covers(double a, double b) const {
    auto it = steps_.upper_bound(a);
    if (it == steps_.begin()) return false;
    --it;
    return it->second <= b;
  }

  void insert(double a, double b) {
    if (covers(a, b)) return;
    auto it = steps_.lower_bound(a);
    while (it != steps_.end() && it->second >= b) it = steps_.erase(it);
    steps_.emplace_hint(it, a, b);
  }

 private:
  std::map<double, double> steps_;
};

// Rank assignment for k <= 3. Points are visited in lexicographic order, so
// a point can only be dominated by points already placed. A front that
// covers a point also has every earlier front covering it, which makes the
// rank a binary search over fronts.
std::vector<Front> sort_low_dim(const Eigen::Ref<const Eigen::MatrixXd>& p) {
  const Eigen::Index n = p.rows();
  const Eigen::Index k = p.cols();
  auto coord = [&](Eigen::Index i, Eigen::Index c) { return c < k ? p(i, c) : 0.0; };

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < k; ++c) {
      if (p(a, c) != p(b, c)) return p(a, c) < p(b, c);
    }
    return a < b;
  });

  std::vector<Front> fronts;
  std::vector<Staircase> stairs;
  std::vector<std::size_t> rank(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Eigen::Index i = order[pos];
    if (pos > 0 && p.row(i) == p.row(order[pos - 1])) {
      const std::size_t r = rank[static_cast<std::size_t>(order[pos - 1])];
      rank[static_cast<std::size_t>(i)] = r;
      fronts[r].push_back(i);
      continue;
    }
    const double a = coord(i, 1), b = coord(i, 2);
    std::size_t lo = 0, hi = fronts.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (stairs[mid].covers(a, b)) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo == fronts.size()) {
      fronts.emplace_back();
      stairs.emplace_back();
    }
    rank[static_cast<std::size_t>(i)] = lo;
    fronts[lo].push_back(i);
    stairs[lo].insert(a, b);
  }
  for (auto& f : fronts) std::sort(f.begin(), f.end());
  return fronts;
}

std::vector<Front> sort_general(const Eigen::Ref<const Eigen::MatrixXd>& p) {
  const Eigen::Index n = p.rows();
  std::vector<std::vector<Eigen::Index>> dominated(static_cast<std::size_t>(n));
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (dominates(p.row(i), p.row(j))) {
        dominated[static_cast<std::size_t>(i)].push_back(j);
        ++count[static_cast<std::size_t>(j)];
      } else if (dominates(p.row(j), p.row(i))) {
        dominated[static_cast<std::size_t>(j)].push_back(i);
        ++count[static_cast<std::size_t>(i)];
      }
    }
  }
  std::vector<Front> fronts;
  Front current;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (count[static_cast<std::size_t>(i)] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    Front next;
    for (Eigen::Index i : current) {
      for (Eigen::Index j : dominated[static_cast<std::size_t>(i)]) {
        if (--count[static_cast<std::size_t>(j)] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

}  // namespace

std::vector<Front> nondominated_sort(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  require(points.rows() > 0 && points.cols() > 0, ErrorKind::invalid_input, "nondominated_sort needs points");
  require(points.allFinite(), ErrorKind::invalid_input, "nondominated_sort got non-finite objectives");
  return points.cols() <= 3 ? sort_low_dim(points) : sort_general(points);
}

Front nondominated_indices(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (points.rows() == 0) return {};
  return nondominated_sort(points).front();
}

Eigen::VectorXd crowding_distance(const Eigen::Ref<const Eigen::MatrixXd>& front) {
  const Eigen::Index n = front.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(n);
  if (n <= 2) return Eigen::VectorXd::Constant(n, inf);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < front.cols(); ++m) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return front(a, m) < front(b, m); });
    const double lo = front(order.front(), m);
    const double hi = front(order.back(), m);
    dist(order.front()) = inf;
    dist(order.back()) = inf;
    if (hi == lo) continue;
    for (std::size_t r = 1; r + 1 < order.size(); ++r) {
      dist(order[r]) += (front(order[r + 1], m) - front(order[r - 1], m)) / (hi - lo);
    }
  }
  return dist;
}

Eigen::VectorXd reference_point(const Eigen::Ref<const Eigen::MatrixXd>& objectives, double margin) {
  require(objectives.rows() > 0, ErrorKind::invalid_input, "reference point of an empty set");
  const Eigen::VectorXd hi = objectives.colwise().maxCoeff().transpose();
  const Eigen::VectorXd lo = objectives.colwise().minCoeff().transpose();
  Eigen::VectorXd ref = hi;
  for (Eigen::Index m = 0; m < ref.size(); ++m) {
    const double range = hi(m) - lo(m);
    ref(m) += margin * (range > 0 ? range : 1.0);
  }
  return ref;
}

}  // namespace flowopt::moo
