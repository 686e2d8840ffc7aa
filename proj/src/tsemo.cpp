#include "flowopt/tsemo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "flowopt/rng.hpp"

namespace flowopt::tsemo {
namespace {

// Seed streams below a suggestion seed.
enum Stream : std::uint64_t {
  kFitProduct = 1,
  kFitRadius = 2,
  kDraw = 16,
  kGa = 64,
  kPad = 128,
};

moo::Nsga2Config ga_config(const TsemoConfig& c, std::uint64_t seed) {
  moo::Nsga2Config g;
  g.population = c.ga_population;
  g.generations = c.ga_generations;
  g.seed = seed;
  return g;
}

double min_distance(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& chosen, const Bounds& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : chosen) {
    best = std::min(best, ((x - c).array() / b.width().array()).matrix().squaredNorm());
  }
  return best;
}

// Index of the candidate with the largest improvement over `incumbent`.
// Ties at zero improvement go to the candidate farthest from what is already
// chosen, then to the one closest to the scaled ideal point.
Eigen::Index best_candidate(const Eigen::MatrixXd& scaled, const Eigen::MatrixXd& decisions,
                            const std::vector<bool>& taken, const Eigen::MatrixXd& incumbent,
                            const Eigen::VectorXd& ref, const std::vector<Eigen::VectorXd>& chosen,
                            const Bounds& b) {
  const double base = moo::hypervolume(incumbent, ref);
  Eigen::Index best = -1;
  double best_gain = -1.0, best_spread = -1.0, best_sum = 0.0;
  Eigen::MatrixXd joint(incumbent.rows() + 1, incumbent.cols());
  joint.topRows(incumbent.rows()) = incumbent;
  for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
    if (taken[static_cast<std::size_t>(i)]) continue;
    joint.bottomRows(1) = scaled.row(i);
    const double gain = std::max(0.0, moo::hypervolume(joint, ref) - base);
    const double spread = min_distance(decisions.row(i).transpose(), chosen, b);
    const double sum = scaled.row(i).sum();
    const bool better = gain > best_gain ||
                        (gain == best_gain && (spread > best_spread || (spread == best_spread && sum < best_sum)));
    if (best < 0 || better) {
      best = i;
      best_gain = gain;
      best_spread = spread;
      best_sum = sum;
    }
  }
  return best;
}

// Removes rows with identical objective vectors, keeping the first.
std::vector<Eigen::Index> unique_objective_rows(const Eigen::MatrixXd& f) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    bool dup = false;
    for (Eigen::Index j : keep) {
      if (f.row(i) == f.row(j)) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(i);
  }
  return keep;
}

moo::FrozenDims freeze(const TsemoConfig& c, const Eigen::VectorXd& x) {
  moo::FrozenDims frozen;
  for (Eigen::Index d : c.group_dims) frozen[d] = x(d);
  return frozen;
}

}  // namespace

void TsemoConfig::validate() const {
  require(batch_size >= 1, ErrorKind::invalid_input, "batch_size must be at least 1");
  require(spectral_points >= 1, ErrorKind::invalid_input, "spectral_points must be at least 1");
  require(ga_generations >= 1, ErrorKind::invalid_input, "ga_generations must be at least 1");
  require(ga_population >= 4 && ga_population % 2 == 0, ErrorKind::invalid_input,
          "ga_population must be even and at least 4");
  require(hv_margin > 0, ErrorKind::invalid_input, "hv_margin must be positive");
  for (Eigen::Index d : group_dims) {
    require(d >= 0 && d < kDesignDims, ErrorKind::invalid_input, "group dimension out of range");
  }
  constants.validate();
}

Eigen::MatrixXd SampledObjectives::operator()(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd f(x.rows(), kObjectives);
  f.col(kNegProductFlow) = product.evaluate_batch(x);
  f.col(kSqRadiusDev) = radius.evaluate_batch(x);
  f.col(kTempDev) = x.col(kTemp).array() - t_min;
  return f;
}

ObjectiveScaling ObjectiveScaling::from_data(const Eigen::Ref<const Eigen::MatrixXd>& objectives) {
  require(objectives.rows() > 0, ErrorKind::insufficient_data, "objective scaling needs data");
  ObjectiveScaling s;
  s.lower = objectives.colwise().minCoeff().transpose();
  s.range = objectives.colwise().maxCoeff().transpose() - s.lower;
  for (Eigen::Index m = 0; m < s.range.size(); ++m) {
    if (!(s.range(m) > 0)) s.range(m) = 1.0;
  }
  return s;
}

Eigen::MatrixXd ObjectiveScaling::apply(const Eigen::Ref<const Eigen::MatrixXd>& objectives) const {
  return ((objectives.rowwise() - lower.transpose()).array().rowwise() / range.transpose().array()).matrix();
}

Models train_models(const Dataset& data, const Bounds& bounds, const TsemoConfig& config) {
  const Eigen::MatrixXd x = data.trainable_inputs();
  require(x.rows() >= 2, ErrorKind::insufficient_data,
          "need at least 2 trainable rows, have " + std::to_string(x.rows()));
  const Eigen::MatrixXd y = data.trainable_objectives();
  gp::FitConfig fc = config.fit;
  Models m;
  fc.seed = derive_seed(config.seed, kFitProduct);
  m.product = gp::fit(x, y.col(kNegProductFlow), bounds, fc);
  fc.seed = derive_seed(config.seed, kFitRadius);
  m.radius = gp::fit(x, y.col(kSqRadiusDev), bounds, fc);
  return m;
}

SampledObjectives draw_objectives(const Models& models, const TsemoConfig& config, std::uint64_t seed) {
  return {gp::spectral_sample(models.product, config.spectral_points, derive_seed(seed, 0)),
          gp::spectral_sample(models.radius, config.spectral_points, derive_seed(seed, 1)), config.constants.t_min};
}

moo::ParetoFront sampled_pareto(const Models& models, const Bounds& bounds, const TsemoConfig& config,
                                std::uint64_t seed) {
  config.validate();
  const SampledObjectives f = draw_objectives(models, config, seed);
  return moo::nsga2(std::cref(f), bounds, ga_config(config, derive_seed(seed, kGa)));
}

double hypervolume_improvement(const Eigen::Ref<const Eigen::VectorXd>& candidate,
                               const Eigen::Ref<const Eigen::MatrixXd>& incumbent,
                               const Eigen::Ref<const Eigen::VectorXd>& ref) {
  Eigen::MatrixXd joint(incumbent.rows() + 1, ref.size());
  if (incumbent.rows() > 0) joint.topRows(incumbent.rows()) = incumbent;
  joint.bottomRows(1) = candidate.transpose();
  return std::max(0.0, moo::hypervolume(joint, ref) - moo::hypervolume(incumbent, ref));
}

SuggestionRecord suggest_batch(const Dataset& data, const Bounds& bounds, const TsemoConfig& config,
                               int iteration) {
  config.validate();
  return suggest_batch(train_models(data, bounds, config), data, bounds, config, iteration);
}

SuggestionRecord suggest_batch(const Models& models, const Dataset& data, const Bounds& bounds,
                               const TsemoConfig& config, int iteration) {
  config.validate();
  const Eigen::MatrixXd measured = data.trainable_objectives();
  require(measured.rows() >= 2, ErrorKind::insufficient_data, "need at least 2 trainable rows");
  const ObjectiveScaling scale = ObjectiveScaling::from_data(measured);
  const Eigen::VectorXd ref = Eigen::VectorXd::Constant(kObjectives, 1.0 + config.hv_margin);

  SuggestionRecord rec;
  rec.iteration = iteration;
  rec.seed = config.seed;
  std::uint64_t draw_count = 0;
  const auto next_draw = [&]() {
    const std::uint64_t s = derive_seed(config.seed, kDraw + draw_count++);
    rec.sample_seeds.push_back(derive_seed(s, 0));
    rec.sample_seeds.push_back(derive_seed(s, 1));
    return std::pair{s, draw_objectives(models, config, s)};
  };

  // (1) sampled Pareto set and the single best candidate against the data.
  auto [draw_seed, draw] = next_draw();
  const moo::ParetoFront front = moo::nsga2(std::cref(draw), bounds, ga_config(config, derive_seed(draw_seed, kGa)));
  Eigen::MatrixXd incumbent = scale.apply(measured);
  std::vector<Eigen::VectorXd> chosen;
  {
    const Eigen::MatrixXd scaled = scale.apply(front.objectives);
    const std::vector<bool> taken(static_cast<std::size_t>(front.size()), false);
    const Eigen::Index first = best_candidate(scaled, front.decisions, taken, incumbent, ref, chosen, bounds);
    chosen.push_back(front.decisions.row(first).transpose());
    incumbent.conservativeResize(incumbent.rows() + 1, Eigen::NoChange);
    incumbent.bottomRows(1) = scaled.row(first);
  }

  // (2)-(4) freeze the group dimensions and fill the batch greedily.
  if (config.batch_size > 1) {
    const moo::FrozenDims frozen = freeze(config, chosen.front());
    std::size_t ga_runs = 1;
    const auto frozen_front = [&](const SampledObjectives& f, std::uint64_t s) {
      return moo::nsga2(std::cref(f), bounds, ga_config(config, derive_seed(s, kGa + ga_runs++)), frozen);
    };
    const auto grow = [&](const moo::ParetoFront& pool, std::vector<bool>& taken) {
      const Eigen::MatrixXd scaled = scale.apply(pool.objectives);
      const Eigen::Index pick = best_candidate(scaled, pool.decisions, taken, incumbent, ref, chosen, bounds);
      if (pick < 0) return false;
      taken[static_cast<std::size_t>(pick)] = true;
      chosen.push_back(pool.decisions.row(pick).transpose());
      incumbent.conservativeResize(incumbent.rows() + 1, Eigen::NoChange);
      incumbent.bottomRows(1) = scaled.row(pick);
      return true;
    };
    const auto dedup = [&](const moo::ParetoFront& raw) {
      moo::ParetoFront pool;
      const auto keep = unique_objective_rows(raw.objectives);
      pool.decisions.resize(static_cast<Eigen::Index>(keep.size()), raw.decisions.cols());
      pool.objectives.resize(static_cast<Eigen::Index>(keep.size()), raw.objectives.cols());
      for (std::size_t i = 0; i < keep.size(); ++i) {
        pool.decisions.row(static_cast<Eigen::Index>(i)) = raw.decisions.row(keep[i]);
        pool.objectives.row(static_cast<Eigen::Index>(i)) = raw.objectives.row(keep[i]);
      }
      // The anchor point is already in the batch.
      std::vector<bool> taken(keep.size(), false);
      for (std::size_t i = 0; i < keep.size(); ++i) {
        for (const auto& c : chosen) {
          if (pool.decisions.row(static_cast<Eigen::Index>(i)).transpose() == c) taken[i] = true;
        }
      }
      return std::pair{pool, taken};
    };

    if (!config.redraw_per_point) {
      auto [pool, taken] = dedup(frozen_front(draw, draw_seed));
      while (static_cast<int>(chosen.size()) < config.batch_size && grow(pool, taken)) {
      }
    } else {
      while (static_cast<int>(chosen.size()) < config.batch_size) {
        auto [s, f] = next_draw();
        auto [pool, taken] = dedup(frozen_front(f, s));
        if (!grow(pool, taken)) break;
      }
    }

    // Degenerate fronts: perturb the free coordinates of selected points.
    Rng rng(derive_seed(config.seed, kPad));
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (std::size_t k = 0; static_cast<int>(chosen.size()) < config.batch_size; ++k) {
      Eigen::VectorXd x = chosen[k % chosen.size()];
      for (Eigen::Index d = 0; d < kDesignDims; ++d) {
        if (frozen.contains(d)) continue;
        x(d) = std::clamp(x(d) + jitter(rng) * bounds.width()(d), bounds.lower(d), bounds.upper(d));
      }
      chosen.push_back(x);
      rec.padded = true;
    }
  }

  Eigen::MatrixXd xb(static_cast<Eigen::Index>(chosen.size()), kDesignDims);
  for (std::size_t i = 0; i < chosen.size(); ++i) xb.row(static_cast<Eigen::Index>(i)) = chosen[i].transpose();
  const auto pf = models.product.predict_batch(xb);
  const auto pr = models.radius.predict_batch(xb);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const DesignPoint x = DesignPoint::from_vector(chosen[i]);
    rec.batch.push_back(x);
    ObjectiveVector y;
    y.neg_product_flow = pf.mean(ii);
    y.sq_radius_dev = pr.mean(ii);
    y.temp_dev = compute_temp_objective(x.temp, config.constants.t_min);
    y.sigma = Eigen::Vector3d(std::sqrt(pf.variance(ii)), std::sqrt(pr.variance(ii)), 0.0);
    rec.predicted.push_back(y);
    rec.variance.emplace_back(pf.variance(ii), pr.variance(ii), 0.0);
  }
  return rec;
}

}  // namespace flowopt::tsemo
