#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "flowopt/campaign.hpp"

namespace flowopt::api {

struct Request {
  std::string method;  ///< "GET" or "POST"
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;  ///< JSON
};

/// Owner of one campaign. Writes are serialized; reads work on snapshots
/// and are not blocked by a long-running suggestion.
class CampaignService {
 public:
  explicit CampaignService(campaign::CampaignState state, std::optional<std::string> path = std::nullopt);

  /// Routes one request. Never throws; failures map to 4xx/5xx bodies of
  /// the form {"error": kind, "message": text}.
  Response handle(const Request& req);

  campaign::CampaignState snapshot() const;

 private:
  Response get_campaign() const;
  Response get_experiments(const Request& req) const;
  Response post_measurement(int id, const std::string& body);
  Response post_iteration();
  Response get_pareto(const Request& req) const;
  Response get_slice(const Request& req) const;
  Response get_validation(const Request& req) const;
  void commit(campaign::CampaignState next);

  mutable std::shared_mutex state_mu_;
  std::mutex writer_mu_;
  campaign::CampaignState state_;
  std::optional<std::string> path_;
};

/// HTTP status for an error kind.
int status_for(ErrorKind kind) noexcept;

/// Blocks serving the service on host:port until the process stops.
void serve(CampaignService& service, const std::string& host, int port);

}  // namespace flowopt::api
