#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "flowopt/moo.hpp"
#include "flowopt/rng.hpp"

namespace flowopt::moo {
namespace {

using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

struct Ranked {
  std::vector<int> rank;
  Eigen::VectorXd crowd;
};

std::string describe(const Eigen::VectorXd& x) {
  std::ostringstream s;
  s << '[';
  for (Eigen::Index i = 0; i < x.size(); ++i) s << (i ? ", " : "") << x(i);
  s << ']';
  return s.str();
}

Eigen::MatrixXd evaluate(const BatchObjective& objective, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd f;
  try {
    f = objective(x);
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    // Localize the failure by evaluating rows one at a time.
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      try {
        (void)objective(x.row(i));
      } catch (const std::exception& inner) {
        throw EvaluationError("objective failed at " + describe(x.row(i).transpose()) + ": " + inner.what(),
                              x.row(i).transpose());
      }
    }
    throw EvaluationError(std::string("objective failed on a batch: ") + e.what(), x.row(0).transpose());
  }
  require(f.rows() == x.rows() && f.cols() > 0, ErrorKind::invalid_input,
          "objective must return one row per decision row");
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    if (!f.row(i).allFinite()) {
      throw EvaluationError("objective returned non-finite values at " + describe(x.row(i).transpose()),
                            x.row(i).transpose());
    }
  }
  return f;
}

class Variation {
 public:
  Variation(const Bounds& box, const Nsga2Config& cfg, std::vector<Eigen::Index> free, Rng& rng)
      : box_(box), cfg_(cfg), free_(std::move(free)), rng_(rng) {
    pm_ = cfg.mutation_rate >= 0 ? cfg.mutation_rate : (free_.empty() ? 0.0 : 1.0 / double(free_.size()));
  }

  // Bounded simulated binary crossover.
  void crossover(RowRef a, RowRef b) {
    if (uniform() > cfg_.crossover_rate) return;
    const double eta = cfg_.crossover_eta;
    for (Eigen::Index j : free_) {
      if (uniform() > 0.5) continue;
      if (std::abs(a(j) - b(j)) <= 1e-14) continue;
      const double y1 = std::min(a(j), b(j)), y2 = std::max(a(j), b(j));
      const double lo = box_.lower(j), hi = box_.upper(j);
      const double u = uniform();
      const auto spread = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
      };
      const double bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
      const double bq2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
      double c1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), lo, hi);
      double c2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), lo, hi);
      if (uniform() <= 0.5) std::swap(c1, c2);
      a(j) = c1;
      b(j) = c2;
    }
  }

  // Bounded polynomial mutation.
  void mutate(RowRef x) {
    const double eta = cfg_.mutation_eta;
    for (Eigen::Index j : free_) {
      if (uniform() >= pm_) continue;
      const double lo = box_.lower(j), hi = box_.upper(j);
      const double y = x(j);
      const double d1 = (y - lo) / (hi - lo), d2 = (hi - y) / (hi - lo);
      const double u = uniform();
      const double power = 1.0 / (eta + 1.0);
      double dq;
      if (u <= 0.5) {
        const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
        dq = std::pow(v, power) - 1.0;
      } else {
        const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
        dq = 1.0 - std::pow(v, power);
      }
      x(j) = std::clamp(y + dq * (hi - lo), lo, hi);
    }
  }

  double uniform() { return unit_(rng_); }

 private:
  const Bounds& box_;
  const Nsga2Config& cfg_;
  std::vector<Eigen::Index> free_;
  Rng& rng_;
  double pm_ = 0.0;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

Ranked rank_population(const std::vector<Front>& fronts, const Eigen::MatrixXd& f, Eigen::Index n) {
  Ranked r{std::vector<int>(static_cast<std::size_t>(n)), Eigen::VectorXd(n)};
  for (std::size_t fi = 0; fi < fronts.size(); ++fi) {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(fronts[fi].size()), f.cols());
    for (std::size_t j = 0; j < fronts[fi].size(); ++j) sub.row(static_cast<Eigen::Index>(j)) = f.row(fronts[fi][j]);
    const Eigen::VectorXd cd = crowding_distance(sub);
    for (std::size_t j = 0; j < fronts[fi].size(); ++j) {
      r.rank[static_cast<std::size_t>(fronts[fi][j])] = static_cast<int>(fi);
      r.crowd(fronts[fi][j]) = cd(static_cast<Eigen::Index>(j));
    }
  }
  return r;
}

}  // namespace

ParetoFront nsga2(const BatchObjective& objective, const Bounds& box, const Nsga2Config& config,
                  const FrozenDims& frozen) {
  box.validate();
  require(config.population >= 4 && config.population % 2 == 0, ErrorKind::invalid_input,
          "nsga2 population must be even and at least 4");
  require(config.generations >= 1, ErrorKind::invalid_input, "nsga2 needs at least one generation");
  const Eigen::Index d = box.dims();
  for (const auto& [dim, value] : frozen) {
    require(dim >= 0 && dim < d, ErrorKind::invalid_input, "frozen dimension out of range");
    require(value >= box.lower(dim) && value <= box.upper(dim), ErrorKind::invalid_input,
            "frozen value outside bounds");
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!frozen.contains(j)) free.push_back(j);
  }

  const Eigen::Index n = config.population;
  Rng rng(config.seed);
  Variation var(box, config, free, rng);

  Eigen::MatrixXd pop(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto it = frozen.find(j);
      pop(i, j) = it != frozen.end() ? it->second : box.lower(j) + var.uniform() * (box.upper(j) - box.lower(j));
    }
  }
  Eigen::MatrixXd fit = evaluate(objective, pop);
  Ranked ranked = rank_population(nondominated_sort(fit), fit, n);

  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  const auto tournament = [&]() {
    const Eigen::Index a = pick(rng), b = pick(rng);
    const auto ra = ranked.rank[static_cast<std::size_t>(a)], rb = ranked.rank[static_cast<std::size_t>(b)];
    if (ra != rb) return ra < rb ? a : b;
    if (ranked.crowd(a) != ranked.crowd(b)) return ranked.crowd(a) > ranked.crowd(b) ? a : b;
    return var.uniform() < 0.5 ? a : b;
  };

  Eigen::MatrixXd children(n, d);
  Eigen::MatrixXd merged(2 * n, d);
  Eigen::MatrixXd merged_fit(2 * n, fit.cols());
  for (int gen = 0; gen < config.generations; ++gen) {
    for (Eigen::Index i = 0; i < n; i += 2) {
      children.row(i) = pop.row(tournament());
      children.row(i + 1) = pop.row(tournament());
      var.crossover(children.row(i), children.row(i + 1));
      var.mutate(children.row(i));
      var.mutate(children.row(i + 1));
    }
    const Eigen::MatrixXd child_fit = evaluate(objective, children);

    merged << pop, children;
    merged_fit << fit, child_fit;
    const auto fronts = nondominated_sort(merged_fit);
    const Ranked all = rank_population(fronts, merged_fit, 2 * n);

    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(n));
    for (const auto& front : fronts) {
      if (keep.size() + front.size() <= static_cast<std::size_t>(n)) {
        keep.insert(keep.end(), front.begin(), front.end());
        continue;
      }
      std::vector<Eigen::Index> last = front;
      std::stable_sort(last.begin(), last.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return all.crowd(a) > all.crowd(b); });
      last.resize(static_cast<std::size_t>(n) - keep.size());
      keep.insert(keep.end(), last.begin(), last.end());
      break;
    }
    for (std::size_t i = 0; i < keep.size(); ++i) {
      const auto src = keep[i];
      pop.row(static_cast<Eigen::Index>(i)) = merged.row(src);
      fit.row(static_cast<Eigen::Index>(i)) = merged_fit.row(src);
      ranked.rank[i] = all.rank[static_cast<std::size_t>(src)];
      ranked.crowd(static_cast<Eigen::Index>(i)) = all.crowd(src);
    }
  }

  // Final non-dominated set, duplicate decisions removed.
  const Front first = nondominated_indices(fit);
  std::set<std::vector<double>> seen;
  std::vector<Eigen::Index> unique;
  for (Eigen::Index i : first) {
    std::vector<double> key(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) key[static_cast<std::size_t>(j)] = pop(i, j);
    if (seen.insert(std::move(key)).second) unique.push_back(i);
  }
  ParetoFront out;
  out.decisions.resize(static_cast<Eigen::Index>(unique.size()), d);
  out.objectives.resize(static_cast<Eigen::Index>(unique.size()), fit.cols());
  for (std::size_t i = 0; i < unique.size(); ++i) {
    out.decisions.row(static_cast<Eigen::Index>(i)) = pop.row(unique[i]);
    out.objectives.row(static_cast<Eigen::Index>(i)) = fit.row(unique[i]);
  }
  out.reference = reference_point(out.objectives);
  return out;
}

}  // namespace flowopt::moo
