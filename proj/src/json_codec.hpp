#pragma once

// nlohmann::json conversions shared by campaign persistence and the HTTP API.

#include <json.hpp>

#include "flowopt/campaign.hpp"
#include "flowopt/epsopt.hpp"
#include "flowopt/error.hpp"

namespace flowopt {

using nlohmann::json;

inline json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vec_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

inline json mat_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

inline Eigen::MatrixXd mat_from(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(static_cast<Eigen::Index>(j.at(i).size()) == cols, ErrorKind::parse_error, "matrix row has wrong length");
    m.row(static_cast<Eigen::Index>(i)) = vec_from(j.at(i)).transpose();
  }
  return m;
}

inline void to_json(json& j, const DesignPoint& x) {
  j = {{"f_i", x.f_i}, {"f_m", x.f_m}, {"temp", x.temp}, {"c_ctab", x.c_ctab}};
}
inline void from_json(const json& j, DesignPoint& x) {
  x.f_i = j.at("f_i").get<double>();
  x.f_m = j.at("f_m").get<double>();
  x.temp = j.at("temp").get<double>();
  x.c_ctab = j.at("c_ctab").get<double>();
}

inline void to_json(json& j, const Bounds& b) { j = {{"lower", vec_json(b.lower)}, {"upper", vec_json(b.upper)}}; }
inline void from_json(const json& j, Bounds& b) {
  b.lower = vec_from(j.at("lower"));
  b.upper = vec_from(j.at("upper"));
}

inline void to_json(json& j, const ProcessConstants& k) {
  j = {{"c_nipam_stock", k.c_nipam_stock}, {"r_h_target", k.r_h_target}, {"t_min", k.t_min},
       {"m_nipam", k.m_nipam},             {"rho_solution", k.rho_solution}, {"rmsecv", k.rmsecv}};
}
inline void from_json(const json& j, ProcessConstants& k) {
  k.c_nipam_stock = j.at("c_nipam_stock").get<double>();
  k.r_h_target = j.at("r_h_target").get<double>();
  k.t_min = j.at("t_min").get<double>();
  k.m_nipam = j.at("m_nipam").get<double>();
  k.rho_solution = j.at("rho_solution").get<double>();
  k.rmsecv = j.at("rmsecv").get<double>();
}

inline void to_json(json& j, const Measurement& m) {
  j = {{"w_nipam_f", m.w_nipam_f}, {"r_h", m.r_h}, {"excluded", std::string(to_string(m.excluded))}};
  if (m.sigma_w) j["sigma_w"] = *m.sigma_w;
  if (m.sigma_r) j["sigma_r"] = *m.sigma_r;
}
inline void from_json(const json& j, Measurement& m) {
  m.w_nipam_f = j.at("w_nipam_f").get<double>();
  m.r_h = j.at("r_h").get<double>();
  m.excluded = j.contains("excluded") ? parse_exclusion_reason(j.at("excluded").get<std::string>())
                                      : ExclusionReason::none;
  m.sigma_w.reset();
  m.sigma_r.reset();
  if (j.contains("sigma_w") && !j.at("sigma_w").is_null()) m.sigma_w = j.at("sigma_w").get<double>();
  if (j.contains("sigma_r") && !j.at("sigma_r").is_null()) m.sigma_r = j.at("sigma_r").get<double>();
}

inline void to_json(json& j, const ObjectiveVector& y) {
  j = {{"neg_product_flow", y.neg_product_flow}, {"sq_radius_dev", y.sq_radius_dev}, {"temp_dev", y.temp_dev}};
  if (y.sigma) j["sigma"] = vec_json(*y.sigma);
}
inline void from_json(const json& j, ObjectiveVector& y) {
  y.neg_product_flow = j.at("neg_product_flow").get<double>();
  y.sq_radius_dev = j.at("sq_radius_dev").get<double>();
  y.temp_dev = j.at("temp_dev").get<double>();
  y.sigma.reset();
  if (j.contains("sigma")) y.sigma = Eigen::Vector3d(vec_from(j.at("sigma")));
}

namespace gp {

inline std::string smoothness_name(Smoothness nu) {
  switch (nu) {
    case Smoothness::half: return "1/2";
    case Smoothness::three_halves: return "3/2";
    case Smoothness::five_halves: return "5/2";
  }
  return "1/2";
}
inline Smoothness parse_smoothness(const std::string& s) {
  if (s == "1/2") return Smoothness::half;
  if (s == "3/2") return Smoothness::three_halves;
  if (s == "5/2") return Smoothness::five_halves;
  fail(ErrorKind::parse_error, "unknown Matern smoothness '" + s + "'");
}

inline void to_json(json& j, const FitConfig& c) {
  j = {{"restarts", c.restarts},
       {"seed", c.seed},
       {"nu", smoothness_name(c.nu)},
       {"lengthscale", {c.lengthscale_min, c.lengthscale_max}},
       {"signal_var", {c.signal_var_min, c.signal_var_max}},
       {"noise_var", {c.noise_var_min, c.noise_var_max}},
       {"max_iterations", c.max_iterations}};
}
inline void from_json(const json& j, FitConfig& c) {
  c.restarts = j.at("restarts").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.nu = parse_smoothness(j.at("nu").get<std::string>());
  c.lengthscale_min = j.at("lengthscale").at(0).get<double>();
  c.lengthscale_max = j.at("lengthscale").at(1).get<double>();
  c.signal_var_min = j.at("signal_var").at(0).get<double>();
  c.signal_var_max = j.at("signal_var").at(1).get<double>();
  c.noise_var_min = j.at("noise_var").at(0).get<double>();
  c.noise_var_max = j.at("noise_var").at(1).get<double>();
  c.max_iterations = j.at("max_iterations").get<int>();
}

}  // namespace gp

namespace tsemo {

inline void to_json(json& j, const TsemoConfig& c) {
  j = {{"spectral_points", c.spectral_points},
       {"ga_generations", c.ga_generations},
       {"ga_population", c.ga_population},
       {"batch_size", c.batch_size},
       {"group_dims", c.group_dims},
       {"hv_margin", c.hv_margin},
       {"hv_normalization", "data_range"},
       {"redraw_per_point", c.redraw_per_point},
       {"fit", c.fit},
       {"constants", c.constants},
       {"seed", c.seed}};
}
inline void from_json(const json& j, TsemoConfig& c) {
  c.spectral_points = j.at("spectral_points").get<int>();
  c.ga_generations = j.at("ga_generations").get<int>();
  c.ga_population = j.at("ga_population").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.group_dims = j.at("group_dims").get<std::vector<Eigen::Index>>();
  c.hv_margin = j.at("hv_margin").get<double>();
  c.redraw_per_point = j.at("redraw_per_point").get<bool>();
  c.fit = j.at("fit").get<gp::FitConfig>();
  c.constants = j.at("constants").get<ProcessConstants>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(json& j, const SuggestionRecord& r) {
  json var = json::array();
  for (const auto& v : r.variance) var.push_back(vec_json(v));
  j = {{"iteration", r.iteration}, {"seed", r.seed},           {"batch", r.batch},   {"sample_seeds", r.sample_seeds},
       {"predicted", r.predicted}, {"variance", std::move(var)}, {"padded", r.padded}};
}
inline void from_json(const json& j, SuggestionRecord& r) {
  r.iteration = j.at("iteration").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.batch = j.at("batch").get<std::vector<DesignPoint>>();
  r.sample_seeds = j.at("sample_seeds").get<std::vector<std::uint64_t>>();
  r.predicted = j.at("predicted").get<std::vector<ObjectiveVector>>();
  r.variance.clear();
  for (const auto& v : j.at("variance")) r.variance.emplace_back(vec_from(v));
  r.padded = j.at("padded").get<bool>();
}

}  // namespace tsemo

namespace campaign {

inline void to_json(json& j, const CampaignConfig& c) {
  j = {{"bounds", c.bounds},
       {"tsemo", c.tsemo},
       {"n_groups", c.n_groups},
       {"per_group", c.per_group},
       {"placement", c.placement == LhsPlacement::centered ? "centered" : "random"},
       {"max_iterations", c.max_iterations},
       {"seed", c.seed}};
}
inline void from_json(const json& j, CampaignConfig& c) {
  c.bounds = j.at("bounds").get<Bounds>();
  c.tsemo = j.at("tsemo").get<tsemo::TsemoConfig>();
  c.n_groups = j.at("n_groups").get<int>();
  c.per_group = j.at("per_group").get<int>();
  const auto placement = j.at("placement").get<std::string>();
  require(placement == "random" || placement == "centered", ErrorKind::parse_error,
          "unknown placement '" + placement + "'");
  c.placement = placement == "centered" ? LhsPlacement::centered : LhsPlacement::random;
  c.max_iterations = j.at("max_iterations").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

inline json experiment_json(const Experiment& e) {
  json j = {{"id", e.id},
            {"iteration", e.iteration},
            {"x", e.x},
            {"status", e.pending() ? "pending" : (e.trainable() ? "recorded" : "excluded")}};
  j["measurement"] = e.measurement ? json(*e.measurement) : json(nullptr);
  j["objectives"] = e.objectives ? json(*e.objectives) : json(nullptr);
  return j;
}

inline json report_json(const ParetoReport& r) {
  json front = json::array();
  for (Eigen::Index i = 0; i < r.front.size(); ++i) {
    front.push_back({{"x", DesignPoint::from_vector(r.front.decisions.row(i).transpose())},
                     {"objectives", vec_json(r.front.objectives.row(i).transpose())},
                     {"sigma", vec_json(r.sigma.row(i).transpose())}});
  }
  json exps = json::array();
  for (const auto& e : r.experiments) {
    exps.push_back({{"id", e.id}, {"iteration", e.iteration}, {"x", e.x}, {"objectives", e.y}});
  }
  return {{"columns", {"neg_product_flow", "sq_radius_dev", "temp_dev"}},
          {"front", std::move(front)},
          {"reference", vec_json(r.front.reference)},
          {"experiments", std::move(exps)},
          {"seed", r.seed},
          {"population", r.population},
          {"generations", r.generations}};
}

}  // namespace campaign

namespace epsopt {

inline json solution_json(const EpsSolution& s) {
  json j = {{"eps", s.epsilon},         {"temp_upper", s.temp_upper}, {"feasible", s.feasible},
            {"certified", s.certified}, {"slack", s.slack}};
  if (s.feasible) {
    j["x"] = s.x;
    j["objective"] = s.objective;
    j["radius"] = s.radius;
  }
  j["grid_objective"] = std::isfinite(s.grid_objective) ? json(s.grid_objective) : json(nullptr);
  return j;
}

}  // namespace epsopt

}  // namespace flowopt

namespace flowopt::campaign::detail {

/// Applies one journal event to the state (without touching the journal).
void apply_event(CampaignState& state, const json& event);

}  // namespace flowopt::campaign::detail
