#include "flowopt/campaign.hpp"

#include <algorithm>
#include <cmath>

#include "flowopt/rng.hpp"
#include "json_codec.hpp"

namespace flowopt::campaign {
namespace {

enum Stream : std::uint64_t { kSuggest = 1000, kReport = 5000, kModels = 6000, kBaseline = 7000 };

Experiment& find_mutable(CampaignState& s, int id) {
  for (auto& e : s.log) {
    if (e.id == id) return e;
  }
  fail(ErrorKind::not_found, "no experiment with id " + std::to_string(id));
}

void add_experiment(CampaignState& s, int iteration, const DesignPoint& x) {
  Experiment e;
  e.id = s.log.empty() ? 1 : s.log.back().id + 1;
  e.iteration = iteration;
  e.x = x;
  s.log.push_back(std::move(e));
}

void emit(CampaignState& s, const json& event) {
  detail::apply_event(s, event);
  s.journal.push_back(event.dump());
}

void check_measurement(const Measurement& m) {
  require(std::isfinite(m.w_nipam_f) && m.w_nipam_f >= 0, ErrorKind::invalid_input,
          "final weight fraction must be a non-negative number");
  require(std::isfinite(m.r_h), ErrorKind::invalid_input, "radius must be a number");
  if (!m.is_excluded()) require(m.r_h > 0, ErrorKind::invalid_input, "radius must be positive");
  require(!m.sigma_w || (std::isfinite(*m.sigma_w) && *m.sigma_w >= 0), ErrorKind::invalid_input,
          "sigma_w must be non-negative");
  require(!m.sigma_r || (std::isfinite(*m.sigma_r) && *m.sigma_r >= 0), ErrorKind::invalid_input,
          "sigma_r must be non-negative");
}

ObjectiveVector objectives_with_sigma(const DesignPoint& x, const Measurement& m, const ProcessConstants& k) {
  ObjectiveVector y = objectives_from_measurement(x, m, k);
  const PropagatedSigma s = propagate_uncertainty(x, m, k);
  if (!s.missing_inputs) y.sigma = s.sigma;
  return y;
}

}  // namespace

namespace detail {

void apply_event(CampaignState& s, const json& ev) {
  const std::string kind = ev.at("event").get<std::string>();
  if (kind == "experiment") {
    add_experiment(s, ev.at("iteration").get<int>(), ev.at("x").get<DesignPoint>());
    require(s.log.back().id == ev.at("id").get<int>(), ErrorKind::parse_error, "experiment ids out of sequence");
  } else if (kind == "measurement") {
    Experiment& e = find_mutable(s, ev.at("id").get<int>());
    require(e.pending(), ErrorKind::conflict, "experiment " + std::to_string(e.id) + " already recorded");
    const Measurement m = ev.at("measurement").get<Measurement>();
    check_measurement(m);
    std::optional<ObjectiveVector> y;
    if (!m.is_excluded()) y = objectives_with_sigma(e.x, m, s.config.constants());
    e.measurement = m;
    e.objectives = y;
  } else if (kind == "suggestion") {
    tsemo::SuggestionRecord rec = ev.at("record").get<tsemo::SuggestionRecord>();
    require(rec.iteration == s.iteration + 1, ErrorKind::parse_error, "suggestion out of sequence");
    for (const auto& x : rec.batch) add_experiment(s, rec.iteration, x);
    s.iteration = rec.iteration;
    s.suggestions.push_back(std::move(rec));
  } else if (kind == "iteration") {
    const int it = ev.at("value").get<int>();
    require(it >= s.iteration, ErrorKind::parse_error, "iteration counter cannot move backwards");
    s.iteration = it;
  } else {
    fail(ErrorKind::parse_error, "unknown campaign event '" + kind + "'");
  }
}

}  // namespace detail

void CampaignConfig::validate() const {
  bounds.validate();
  require(bounds.dims() == kDesignDims, ErrorKind::invalid_input, "campaign bounds must be 4-D");
  require(n_groups >= 1 && per_group >= 1, ErrorKind::invalid_input, "initial design needs at least one run");
  require(max_iterations >= 0, ErrorKind::invalid_input, "max_iterations must be non-negative");
  tsemo.validate();
}

const Experiment* CampaignState::find(int id) const {
  for (const auto& e : log) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::vector<const Experiment*> CampaignState::pending() const {
  std::vector<const Experiment*> out;
  for (const auto& e : log) {
    if (e.pending()) out.push_back(&e);
  }
  return out;
}

Dataset CampaignState::dataset() const {
  Dataset d;
  for (const auto& e : log) {
    if (e.pending()) continue;
    DatasetRow row;
    row.iteration = e.iteration;
    row.x = e.x;
    row.excluded = !e.trainable();
    if (e.objectives) {
      row.y = *e.objectives;
    } else {
      row.y.temp_dev = e.x.temp - config.constants().t_min;
    }
    d.append(std::move(row));
  }
  return d;
}

std::uint64_t CampaignState::iteration_seed(int it) const {
  return derive_seed(config.seed, kSuggest + static_cast<std::uint64_t>(it));
}

CampaignState init_campaign(const CampaignConfig& config) {
  config.validate();
  CampaignState s;
  s.config = config;
  const auto groups =
      grouped_initial_design(config.n_groups, config.per_group, config.bounds, config.seed, config.placement);
  int id = 0;
  for (const auto& g : groups) {
    for (const auto& x : g.expand()) emit(s, {{"event", "experiment"}, {"id", ++id}, {"iteration", 0}, {"x", x}});
  }
  return s;
}

void record_measurement(CampaignState& state, int id, const Measurement& m) {
  const Experiment* e = state.find(id);
  if (e == nullptr) fail(ErrorKind::not_found, "no experiment with id " + std::to_string(id));
  if (!e->pending()) fail(ErrorKind::conflict, "experiment " + std::to_string(id) + " already recorded");
  check_measurement(m);
  // Validate before mutating so a throw leaves the state untouched.
  if (!m.is_excluded()) (void)objectives_from_measurement(e->x, m, state.config.constants());
  emit(state, {{"event", "measurement"}, {"id", id}, {"measurement", m}});
}

const tsemo::SuggestionRecord& next_iteration(CampaignState& state) {
  if (state.complete()) {
    fail(ErrorKind::campaign_complete, "campaign finished after " + std::to_string(state.config.max_iterations) +
                                           " iterations");
  }
  tsemo::TsemoConfig tc = state.config.tsemo;
  const int it = state.iteration + 1;
  tc.seed = state.iteration_seed(it);
  const tsemo::SuggestionRecord rec = tsemo::suggest_batch(state.dataset(), state.config.bounds, tc, it);
  emit(state, {{"event", "suggestion"}, {"record", rec}});
  return state.suggestions.back();
}

CampaignState campaign_from_dataset(const Dataset& data, const CampaignConfig& config) {
  config.validate();
  CampaignState s;
  s.config = config;
  int id = 0;
  int last = 0;
  for (const auto& row : data.rows()) {
    emit(s, {{"event", "experiment"}, {"id", ++id}, {"iteration", row.iteration}, {"x", row.x}});
    Measurement m = measurement_from_row(row, config.constants());
    if (row.excluded) m.excluded = ExclusionReason::high_relative_error;
    emit(s, {{"event", "measurement"}, {"id", id}, {"measurement", m}});
    last = std::max(last, row.iteration);
  }
  emit(s, {{"event", "iteration"}, {"value", last}});
  return s;
}

ParetoReport pareto_report(const CampaignState& state, int population, int generations,
                           std::optional<std::uint64_t> seed) {
  ParetoReport r;
  r.seed = seed.value_or(derive_seed(state.config.seed, kReport + static_cast<std::uint64_t>(state.iteration)));
  r.population = population;
  r.generations = generations;
  tsemo::TsemoConfig tc = state.config.tsemo;
  tc.ga_population = population;
  tc.ga_generations = generations;
  tc.seed = r.seed;
  const Dataset data = state.dataset();
  const tsemo::Models models = tsemo::train_models(data, state.config.bounds, tc);
  r.front = tsemo::sampled_pareto(models, state.config.bounds, tc, r.seed);
  const auto pf = models.product.predict_batch(r.front.decisions);
  const auto pr = models.radius.predict_batch(r.front.decisions);
  r.sigma = Eigen::MatrixXd::Zero(r.front.size(), kObjectives);
  r.sigma.col(kNegProductFlow) = pf.variance.cwiseSqrt();
  r.sigma.col(kSqRadiusDev) = pr.variance.cwiseSqrt();
  for (const auto& e : state.log) {
    if (e.trainable()) r.experiments.push_back({e.id, e.iteration, e.x, *e.objectives});
  }
  return r;
}

tsemo::Models campaign_models(const CampaignState& state) {
  tsemo::TsemoConfig tc = state.config.tsemo;
  tc.seed = derive_seed(state.config.seed, kModels + static_cast<std::uint64_t>(state.iteration));
  return tsemo::train_models(state.dataset(), state.config.bounds, tc);
}

double archive_hypervolume(const CampaignState& state, const Eigen::Vector3d& ref) {
  const Eigen::MatrixXd y = state.dataset().trainable_objectives();
  return moo::hypervolume(y, ref);
}

Eigen::Vector3d default_closed_loop_reference() { return {0.0, 900.0, 21.0}; }

ClosedLoopResult run_closed_loop(const CampaignConfig& config, const VirtualLabConfig& lab, int iterations,
                                 const Eigen::Vector3d& ref) {
  require(iterations >= 0, ErrorKind::invalid_input, "iteration count must be non-negative");
  ClosedLoopResult out{init_campaign(config), {}};
  const auto measure_pending = [&]() {
    for (const Experiment* e : out.state.pending()) {
      const int id = e->id;
      record_measurement(out.state, id, simulate(e->x, lab));
    }
  };
  measure_pending();
  out.hypervolume.push_back(archive_hypervolume(out.state, ref));
  for (int i = 0; i < iterations; ++i) {
    next_iteration(out.state);
    measure_pending();
    out.hypervolume.push_back(archive_hypervolume(out.state, ref));
  }
  return out;
}

double lhs_baseline_hypervolume(const CampaignConfig& config, const VirtualLabConfig& lab, int n,
                                const Eigen::Vector3d& ref) {
  const Eigen::MatrixXd u = lhs(n, kDesignDims, derive_seed(config.seed, kBaseline), config.placement);
  Eigen::MatrixXd y(n, kObjectives);
  Eigen::Index rows = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = config.bounds.lower + u.row(i).transpose().cwiseProduct(config.bounds.width());
    const DesignPoint p = DesignPoint::from_vector(x);
    const Measurement m = simulate(p, lab);
    if (m.is_excluded()) continue;
    y.row(rows++) = objectives_from_measurement(p, m, config.constants()).vector().transpose();
  }
  return moo::hypervolume(y.topRows(rows), ref);
}

GpSlice gp_slice(const gp::GPModel& model, const Bounds& bounds, Eigen::Index dim, const Eigen::Vector4d& fixed,
                 int points) {
  require(dim >= 0 && dim < kDesignDims, ErrorKind::invalid_input, "slice dimension out of range");
  require(points >= 2, ErrorKind::invalid_input, "slice needs at least 2 points");
  GpSlice s;
  s.x = Eigen::VectorXd::LinSpaced(points, bounds.lower(dim), bounds.upper(dim));
  Eigen::MatrixXd rows = fixed.transpose().replicate(points, 1);
  rows.col(dim) = s.x;
  const auto p = model.predict_batch(rows);
  s.mean = p.mean;
  s.variance = p.variance;
  return s;
}

}  // namespace flowopt::campaign
