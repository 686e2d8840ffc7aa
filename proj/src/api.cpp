#include "flowopt/api.hpp"

#include <httplib.h>

#include <charconv>
#include <regex>
#include <sstream>

#include "flowopt/epsopt.hpp"
#include "json_codec.hpp"

namespace flowopt::api {
namespace {

Response reply(int status, const json& body) { return {status, body.dump()}; }

Response error_reply(int status, std::string_view kind, const std::string& message) {
  return reply(status, {{"error", kind}, {"message", message}});
}

double to_double(const std::string& s, const std::string& name) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::invalid_input, "query parameter '" + name + "' is not a number: '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s, const std::string& name) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::invalid_input, "query parameter '" + name + "' is not an integer: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> double_list(const Request& req, const std::string& name, std::vector<double> fallback) {
  const auto it = req.query.find(name);
  if (it == req.query.end()) return fallback;
  std::vector<double> out;
  for (const auto& item : split(it->second, ',')) out.push_back(to_double(item, name));
  require(!out.empty(), ErrorKind::invalid_input, "query parameter '" + name + "' is empty");
  return out;
}

int int_param(const Request& req, const std::string& name, int fallback) {
  const auto it = req.query.find(name);
  return it == req.query.end() ? fallback : to_int(it->second, name);
}

Eigen::Index dim_index(const std::string& name) {
  if (name == "f_i") return kFlowInitiator;
  if (name == "f_m") return kFlowMonomer;
  if (name == "c_ctab") return kCtab;
  if (name == "temp") return kTemp;
  fail(ErrorKind::invalid_input, "unknown input '" + name + "' (expected f_i, f_m, c_ctab or temp)");
}

}  // namespace

int status_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::insufficient_data:
    case ErrorKind::excluded_data: return 422;
    case ErrorKind::parse_error: return 400;
    case ErrorKind::conflict:
    case ErrorKind::campaign_complete: return 409;
    case ErrorKind::not_found: return 404;
    case ErrorKind::numerical_failure: return 500;
  }
  return 500;
}

CampaignService::CampaignService(campaign::CampaignState state, std::optional<std::string> path)
    : state_(std::move(state)), path_(std::move(path)) {}

campaign::CampaignState CampaignService::snapshot() const {
  std::shared_lock lock(state_mu_);
  return state_;
}

void CampaignService::commit(campaign::CampaignState next) {
  if (path_) campaign::save_campaign(next, *path_);
  std::unique_lock lock(state_mu_);
  state_ = std::move(next);
}

Response CampaignService::handle(const Request& req) {
  static const std::regex measurement_route(R"(^/experiments/(\d+)/measurement$)");
  try {
    std::smatch m;
    if (req.method == "GET") {
      if (req.path == "/campaign") return get_campaign();
      if (req.path == "/experiments") return get_experiments(req);
      if (req.path == "/pareto") return get_pareto(req);
      if (req.path == "/gp/slice") return get_slice(req);
      if (req.path == "/validation") return get_validation(req);
    } else if (req.method == "POST") {
      if (std::regex_match(req.path, m, measurement_route)) return post_measurement(std::stoi(m[1]), req.body);
      if (req.path == "/iterations") return post_iteration();
    }
    return error_reply(404, "not_found", "no route for " + req.method + " " + req.path);
  } catch (const Error& e) {
    return error_reply(status_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const json::exception& e) {
    return error_reply(422, "invalid_input", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

Response CampaignService::get_campaign() const {
  const auto s = snapshot();
  json exps = json::array();
  int pending = 0;
  for (const auto& e : s.log) {
    exps.push_back(campaign::experiment_json(e));
    pending += e.pending() ? 1 : 0;
  }
  json sugg = json::array();
  for (const auto& r : s.suggestions) sugg.push_back(r);
  return reply(200, {{"config", s.config},
                     {"iteration", s.iteration},
                     {"max_iterations", s.config.max_iterations},
                     {"complete", s.complete()},
                     {"pending", pending},
                     {"experiments", std::move(exps)},
                     {"suggestions", std::move(sugg)}});
}

Response CampaignService::get_experiments(const Request& req) const {
  const auto s = snapshot();
  const auto it = req.query.find("status");
  const std::string status = it == req.query.end() ? "all" : it->second;
  require(status == "all" || status == "pending" || status == "recorded" || status == "excluded",
          ErrorKind::invalid_input, "status must be all, pending, recorded or excluded");
  json out = json::array();
  for (const auto& e : s.log) {
    json j = campaign::experiment_json(e);
    if (status == "all" || j.at("status") == status) out.push_back(std::move(j));
  }
  return reply(200, {{"experiments", std::move(out)}});
}

Response CampaignService::post_measurement(int id, const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("measurement body is not JSON: ") + e.what());
  }
  Measurement m;
  try {
    m = j.get<Measurement>();
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("measurement body: ") + e.what());
  }
  std::lock_guard writer(writer_mu_);
  auto next = snapshot();
  campaign::record_measurement(next, id, m);
  json out = campaign::experiment_json(*next.find(id));
  commit(std::move(next));
  return reply(200, out);
}

Response CampaignService::post_iteration() {
  std::lock_guard writer(writer_mu_);
  auto next = snapshot();
  const auto& rec = campaign::next_iteration(next);
  json exps = json::array();
  for (const auto& e : next.log) {
    if (e.iteration == rec.iteration) exps.push_back(campaign::experiment_json(e));
  }
  json out = {{"suggestion", rec}, {"experiments", std::move(exps)}};
  commit(std::move(next));
  return reply(201, out);
}

Response CampaignService::get_pareto(const Request& req) const {
  const auto s = snapshot();
  const int pop = int_param(req, "pop", s.config.tsemo.ga_population);
  const int gens = int_param(req, "gens", s.config.tsemo.ga_generations);
  std::optional<std::uint64_t> seed;
  if (const auto it = req.query.find("seed"); it != req.query.end()) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    require(ec == std::errc() && ptr == it->second.data() + it->second.size(), ErrorKind::invalid_input,
            "query parameter 'seed' is not an unsigned integer");
    seed = v;
  }
  return reply(200, campaign::report_json(campaign::pareto_report(s, pop, gens, seed)));
}

Response CampaignService::get_slice(const Request& req) const {
  const auto s = snapshot();
  const auto obj_it = req.query.find("objective");
  const std::string objective = obj_it == req.query.end() ? "product" : obj_it->second;
  require(objective == "product" || objective == "radius", ErrorKind::invalid_input,
          "objective must be product or radius");
  const auto dim_it = req.query.find("dim");
  require(dim_it != req.query.end(), ErrorKind::invalid_input, "dim is required");
  const Eigen::Index dim = dim_index(dim_it->second);
  Eigen::Vector4d fixed = 0.5 * (s.config.bounds.lower + s.config.bounds.upper);
  if (const auto f = req.query.find("fixed"); f != req.query.end()) {
    for (const auto& pair : split(f->second, ',')) {
      const auto colon = pair.find(':');
      require(colon != std::string::npos, ErrorKind::invalid_input, "fixed entries look like name:value");
      fixed(dim_index(pair.substr(0, colon))) = to_double(pair.substr(colon + 1), "fixed");
    }
  }
  const int points = int_param(req, "points", 101);
  const tsemo::Models models = campaign::campaign_models(s);
  const auto slice = campaign::gp_slice(objective == "product" ? models.product : models.radius,
                                        s.config.bounds, dim, fixed, points);
  return reply(200, {{"objective", objective},
                     {"dim", dim_it->second},
                     {"fixed", DesignPoint::from_vector(fixed)},
                     {"x", vec_json(slice.x)},
                     {"mean", vec_json(slice.mean)},
                     {"variance", vec_json(slice.variance)}});
}

Response CampaignService::get_validation(const Request& req) const {
  const auto s = snapshot();
  std::vector<double> eps_default;
  for (int e = 2; e <= 25; ++e) eps_default.push_back(e);
  const auto eps = double_list(req, "eps", eps_default);
  const auto tub = double_list(req, "tub", {s.config.bounds.upper(kTemp)});
  epsopt::EpsConfig cfg;
  cfg.bounds = s.config.bounds;
  cfg.seed = s.config.seed;
  const tsemo::Models models = campaign::campaign_models(s);
  json rows = json::array();
  for (const auto& r : epsopt::sweep(models, eps, tub, cfg)) rows.push_back(epsopt::solution_json(r));
  return reply(200, {{"rows", std::move(rows)}});
}

void serve(CampaignService& service, const std::string& host, int port) {
  httplib::Server server;
  const auto bridge = [&service](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query[k] = v;
    req.body = in.body;
    const Response r = service.handle(req);
    out.status = r.status;
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_content(r.body, "application/json");
  };
  server.Get(R"(/.*)", bridge);
  server.Post(R"(/.*)", bridge);
  // Browser preflight for the dashboard's JSON POSTs.
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& out) {
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    out.set_header("Access-Control-Allow-Headers", "Content-Type");
    out.status = 204;
  });
  require(server.listen(host, port), ErrorKind::invalid_input,
          "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace flowopt::api
