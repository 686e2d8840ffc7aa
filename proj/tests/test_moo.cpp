#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "flowopt/moo.hpp"
#include "flowopt/rng.hpp"

using namespace flowopt;
using namespace flowopt::moo;

namespace {

Eigen::MatrixXd uniform(Eigen::Index n, Eigen::Index d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

// Coarse integer grid so that ties and duplicates are frequent.
Eigen::MatrixXd integer_points(Eigen::Index n, Eigen::Index k, int levels, Rng& rng) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

bool le_dominates(const Eigen::MatrixXd& p, Eigen::Index a, Eigen::Index b) {
  bool strict = false;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    if (p(a, c) > p(b, c)) return false;
    if (p(a, c) < p(b, c)) strict = true;
  }
  return strict;
}

// Peel fronts by repeated pairwise scans.
std::vector<std::set<Eigen::Index>> brute_fronts(const Eigen::MatrixXd& p) {
  std::vector<std::set<Eigen::Index>> out;
  std::set<Eigen::Index> left;
  for (Eigen::Index i = 0; i < p.rows(); ++i) left.insert(i);
  while (!left.empty()) {
    std::set<Eigen::Index> front;
    for (auto i : left) {
      bool dominated = false;
      for (auto j : left) dominated = dominated || le_dominates(p, j, i);
      if (!dominated) front.insert(i);
    }
    for (auto i : front) left.erase(i);
    out.push_back(front);
  }
  return out;
}

double mc_hypervolume(const Eigen::MatrixXd& p, const Eigen::VectorXd& ref, const Eigen::VectorXd& lo, int samples,
                      std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index k = ref.size();
  long hits = 0;
  Eigen::VectorXd z(k);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index c = 0; c < k; ++c) z(c) = lo(c) + u(rng) * (ref(c) - lo(c));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      if ((p.row(i).transpose().array() <= z.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / samples * (ref - lo).prod();
}

Eigen::MatrixXd dtlz2(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd f(x.rows(), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double g = 0;
    for (Eigen::Index j = 2; j < x.cols(); ++j) g += std::pow(x(i, j) - 0.5, 2);
    const double a = x(i, 0) * std::numbers::pi / 2, b = x(i, 1) * std::numbers::pi / 2;
    f(i, 0) = (1 + g) * std::cos(a) * std::cos(b);
    f(i, 1) = (1 + g) * std::cos(a) * std::sin(b);
    f(i, 2) = (1 + g) * std::sin(a);
  }
  return f;
}

Eigen::VectorXd row(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("dominance") {
  CHECK(dominates(row({1, 2, 3}), row({2, 2, 3})));
  CHECK_FALSE(dominates(row({1, 2}), row({2, 1})));
  CHECK_FALSE(dominates(row({2, 1}), row({1, 2})));
  CHECK_FALSE(dominates(row({1, 1}), row({1, 1})));
  CHECK_THROWS_AS(dominates(row({1}), row({1, 2})), Error);

  Rng rng(1);
  for (int rep = 0; rep < 2000; ++rep) {
    const auto p = integer_points(3, 3, 3, rng);
    const Eigen::VectorXd a = p.row(0), b = p.row(1), c = p.row(2);
    CHECK_FALSE(dominates(a, a));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("nondominated sort small cases") {
  Eigen::MatrixXd p(3, 2);
  p << 1, 1, 2, 2, 0, 3;
  const auto fronts = nondominated_sort(p);
  REQUIRE(fronts.size() == 2);
  CHECK(std::set<Eigen::Index>(fronts[0].begin(), fronts[0].end()) == std::set<Eigen::Index>{0, 2});
  CHECK(fronts[1] == Front{1});

  const auto same = nondominated_sort(Eigen::MatrixXd::Ones(6, 3));
  REQUIRE(same.size() == 1);
  CHECK(same[0].size() == 6);
  CHECK_THROWS_AS(nondominated_sort(Eigen::MatrixXd(0, 2)), Error);
}

TEST_CASE("nondominated sort equals the pairwise oracle") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index k = 1 + rep % 4;
    const Eigen::Index n = 1 + (rep * 37) % 200;
    const auto p = rep % 2 ? uniform(n, k, rng) : integer_points(n, k, 4, rng);
    const auto fronts = nondominated_sort(p);
    const auto oracle = brute_fronts(p);
    REQUIRE(fronts.size() == oracle.size());
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      CHECK(std::set<Eigen::Index>(fronts[f].begin(), fronts[f].end()) == oracle[f]);
    }
    const auto first = nondominated_indices(p);
    CHECK(std::set<Eigen::Index>(first.begin(), first.end()) == oracle[0]);
    CHECK(std::is_sorted(first.begin(), first.end()));
  }
}

TEST_CASE("crowding distance") {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd two(2, 2);
  two << 0, 1, 1, 0;
  CHECK(crowding_distance(two) == Eigen::Vector2d(inf, inf));

  Eigen::MatrixXd line(3, 2);
  line << 0, 2, 1, 1, 2, 0;
  const auto d = crowding_distance(line);
  CHECK(d(0) == inf);
  CHECK(d(2) == inf);
  CHECK(d(1) == doctest::Approx(2.0));

  // Textbook recomputation on random fronts.
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd f(6, 3);
    for (Eigen::Index i = 0; i < 6; ++i) {
      const auto u = uniform(1, 2, rng);
      f(i, 0) = u(0, 0);
      f(i, 1) = u(0, 1);
      f(i, 2) = 2.0 - u(0, 0) - u(0, 1);
    }
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(6);
    for (Eigen::Index c = 0; c < 3; ++c) {
      std::vector<Eigen::Index> order(6);
      for (Eigen::Index i = 0; i < 6; ++i) order[static_cast<std::size_t>(i)] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return f(a, c) < f(b, c); });
      const double span = f(order.back(), c) - f(order.front(), c);
      ref(order.front()) = ref(order.back()) = inf;
      for (std::size_t j = 1; j + 1 < order.size(); ++j) {
        ref(order[j]) += (f(order[j + 1], c) - f(order[j - 1], c)) / span;
      }
    }
    const auto got = crowding_distance(f);
    for (Eigen::Index i = 0; i < 6; ++i) {
      if (std::isinf(ref(i))) {
        CHECK(std::isinf(got(i)));
      } else {
        CHECK(got(i) == doctest::Approx(ref(i)).epsilon(1e-12));
      }
    }
  }

  Eigen::MatrixXd flat(4, 2);
  flat << 0, 5, 1, 5, 2, 5, 3, 5;
  const auto fd = crowding_distance(flat);
  CHECK(fd(1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("hypervolume closed forms") {
  Eigen::MatrixXd one(1, 2);
  one << 0, 0;
  CHECK(hypervolume(one, Eigen::Vector2d(1, 1)) == 1.0);
  Eigen::MatrixXd two(2, 2);
  two << 1, 2, 2, 1;
  CHECK(hypervolume(two, Eigen::Vector2d(3, 3)) == doctest::Approx(3.0));
  CHECK(hypervolume(Eigen::MatrixXd(0, 2), Eigen::Vector2d(3, 3)) == 0.0);
  Eigen::MatrixXd beyond(2, 2);
  beyond << 4, 0, 1, 1;
  CHECK(hypervolume(beyond, Eigen::Vector2d(3, 3)) == doctest::Approx(4.0));
  Eigen::MatrixXd cube(1, 3);
  cube << 0.5, 0, 0.25;
  CHECK(hypervolume(cube, Eigen::Vector3d(1, 1, 1)) == doctest::Approx(0.375));
  Eigen::MatrixXd line(2, 1);
  line << 0.3, 0.5;
  CHECK(hypervolume(line, Eigen::VectorXd::Ones(1)) == doctest::Approx(0.7));
}

TEST_CASE("hypervolume matches Monte Carlo") {
  Rng rng(21);
  for (Eigen::Index k : {2, 3}) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto p = uniform(12, k, rng);
      const Eigen::VectorXd ref = p.colwise().maxCoeff().transpose().array() + 1.0;
      const Eigen::VectorXd lo = p.colwise().minCoeff().transpose();
      const double exact = hypervolume(p, ref);
      const double mc = mc_hypervolume(p, ref, lo, 1000000, 100 + static_cast<std::uint64_t>(rep));
      CHECK(std::abs(exact - mc) <= 0.01 * exact);
    }
  }
}

TEST_CASE("hypervolume monotonicity") {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const auto p = uniform(15, 3, rng);
    const Eigen::Vector3d ref(1.1, 1.1, 1.1);
    const double base = hypervolume(p, ref);
    Eigen::MatrixXd more(16, 3);
    more << p, uniform(1, 3, rng);
    CHECK(hypervolume(more, ref) >= base - 1e-15);
    const auto front = nondominated_indices(p);
    Eigen::MatrixXd nd(static_cast<Eigen::Index>(front.size()), 3);
    for (std::size_t i = 0; i < front.size(); ++i) nd.row(static_cast<Eigen::Index>(i)) = p.row(front[i]);
    CHECK(hypervolume(nd, ref) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("hypervolume contributions") {
  Eigen::MatrixXd one(1, 2);
  one << 1, 1;
  CHECK(hypervolume_contributions(one, Eigen::Vector2d(3, 3))(0) == doctest::Approx(4.0));

  Eigen::MatrixXd dup(3, 2);
  dup << 1, 1, 1, 1, 0, 2.5;
  const auto dc = hypervolume_contributions(dup, Eigen::Vector2d(3, 3));
  CHECK(dc(0) == 0.0);
  CHECK(dc(1) == 0.0);

  Eigen::MatrixXd p(3, 2);
  p << 1, 2, 2, 1, 0, 3;
  const Eigen::Vector2d ref(3, 3);
  const auto c = hypervolume_contributions(p, ref);
  // Area oracle on a 1e-3 grid of cell centres.
  const double h = 1e-3;
  Eigen::Vector3d grid = Eigen::Vector3d::Zero();
  for (double x = h / 2; x < 3; x += h) {
    for (double y = h / 2; y < 3; y += h) {
      int count = 0, who = -1;
      for (int i = 0; i < 3; ++i) {
        if (p(i, 0) <= x && p(i, 1) <= y) {
          ++count;
          who = i;
        }
      }
      if (count == 1) grid(who) += h * h;
    }
  }
  for (int i = 0; i < 3; ++i) CHECK(std::abs(c(i) - grid(i)) <= 1e-2);
  CHECK(c(2) == 0.0);

  Rng rng(9);
  const auto q = uniform(10, 3, rng);
  const auto qc = hypervolume_contributions(q, Eigen::Vector3d::Ones());
  const double total = hypervolume(q, Eigen::Vector3d::Ones());
  for (Eigen::Index i = 0; i < 10; ++i) {
    Eigen::MatrixXd without(9, 3);
    for (Eigen::Index j = 0, r = 0; j < 10; ++j) {
      if (j != i) without.row(r++) = q.row(j);
    }
    CHECK(qc(i) == doctest::Approx(total - hypervolume(without, Eigen::Vector3d::Ones())).epsilon(1e-9).scale(1e-9));
  }
}

TEST_CASE("reference point") {
  Eigen::MatrixXd p(2, 2);
  p << 0, 4, 2, 4;
  const auto r = reference_point(p);
  CHECK(r(0) == doctest::Approx(2.2));
  CHECK(r(1) == doctest::Approx(4.1));
}

TEST_CASE("nsga2 recovers the SCH Pareto set") {
  const BatchObjective sch = [](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd f(x.rows(), 2);
    f.col(0) = x.col(0).array().square();
    f.col(1) = (x.col(0).array() - 2).square();
    return f;
  };
  Bounds box{Eigen::VectorXd::Constant(1, -1000), Eigen::VectorXd::Constant(1, 1000)};
  Nsga2Config cfg;
  cfg.population = 100;
  cfg.generations = 100;
  cfg.seed = 3;
  const auto front = nsga2(sch, box, cfg);
  REQUIRE(front.size() > 10);
  const auto inside = (front.decisions.col(0).array() >= -0.05 && front.decisions.col(0).array() <= 2.05).count();
  CHECK(static_cast<double>(inside) >= 0.95 * static_cast<double>(front.size()));
  for (Eigen::Index i = 0; i < front.size(); ++i) {
    CHECK((front.objectives.row(i).transpose().array() <= front.reference.array()).all());
    for (Eigen::Index j = 0; j < front.size(); ++j) {
      CHECK_FALSE(dominates(front.objectives.row(i), front.objectives.row(j)));
    }
  }
}

TEST_CASE("nsga2 single-objective quadratic") {
  const BatchObjective quad = [](const Eigen::MatrixXd& x) {
    return Eigen::MatrixXd((x.col(0).array() - 0.3).square().matrix());
  };
  Bounds box{Eigen::VectorXd::Constant(1, -5), Eigen::VectorXd::Constant(1, 5)};
  Nsga2Config cfg;
  cfg.population = 40;
  cfg.generations = 60;
  const auto front = nsga2(quad, box, cfg);
  REQUIRE(front.size() >= 1);
  CHECK(std::abs(front.decisions(0, 0) - 0.3) < 1e-2);
}

TEST_CASE("nsga2 on DTLZ2") {
  Bounds box{Eigen::VectorXd::Zero(7), Eigen::VectorXd::Ones(7)};
  Nsga2Config cfg;
  cfg.population = 200;
  cfg.generations = 250;
  cfg.seed = 1;
  const auto front = nsga2(dtlz2, box, cfg);
  const Eigen::Vector3d ref(1.1, 1.1, 1.1);

  const int grid = 100;
  Eigen::MatrixXd dense(grid * grid, 7);
  dense.setConstant(0.5);
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      dense(a * grid + b, 0) = a / double(grid - 1);
      dense(a * grid + b, 1) = b / double(grid - 1);
    }
  }
  const double analytic = hypervolume(dtlz2(dense), ref);
  CHECK(analytic == doctest::Approx(1.331 - std::numbers::pi / 6).epsilon(0.01));
  const double got = hypervolume(front.objectives, ref);
  MESSAGE("DTLZ2 hv " << got << " of " << analytic);
  CHECK(got >= 0.9 * analytic);
}

TEST_CASE("nsga2 frozen dimensions and determinism") {
  Bounds box{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)};
  const BatchObjective f = [](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), 2);
    out.col(0) = x.rowwise().sum();
    out.col(1) = (1.0 - x.array()).square().rowwise().sum();
    return out;
  };
  Nsga2Config cfg;
  cfg.population = 20;
  cfg.generations = 30;
  cfg.seed = 12;
  const FrozenDims frozen{{1, 0.37}, {3, 0.9}};
  const auto a = nsga2(f, box, cfg, frozen);
  CHECK((a.decisions.col(1).array() == 0.37).all());
  CHECK((a.decisions.col(3).array() == 0.9).all());
  const auto b = nsga2(f, box, cfg, frozen);
  CHECK(a.decisions == b.decisions);
  CHECK(a.objectives == b.objectives);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = i + 1; j < a.size(); ++j) CHECK(a.decisions.row(i) != a.decisions.row(j));
  }

  cfg.population = 5;
  CHECK_THROWS_AS(nsga2(f, box, cfg), Error);
  cfg.population = 20;
  CHECK_THROWS_AS(nsga2(f, box, cfg, {{7, 0.1}}), Error);
}

TEST_CASE("nsga2 reports the failing decision") {
  Bounds box{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
  const BatchObjective bad = [](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), 2);
    out.col(0) = x.col(0);
    out.col(1) = x.col(1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x(i, 0) > 0.9) out(i, 1) = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  };
  Nsga2Config cfg;
  cfg.population = 50;
  cfg.generations = 5;
  try {
    nsga2(bad, box, cfg);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(e.kind() == ErrorKind::numerical_failure);
    CHECK(e.decision().size() == 2);
    CHECK(e.decision()(0) > 0.9);
  }
}
