#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowopt/campaign.hpp"
#include "json_codec.hpp"

namespace flowopt::campaign {
namespace {

constexpr const char* kFormat = "flowopt-campaign";
constexpr int kVersion = 1;

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse_error, "campaign line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

std::string serialize_header(const CampaignConfig& config) {
  return json{{"format", kFormat}, {"version", kVersion}, {"config", config}}.dump();
}

std::string serialize(const CampaignState& state) {
  std::string out = serialize_header(state.config);
  out += '\n';
  for (const auto& line : state.journal) {
    out += line;
    out += '\n';
  }
  return out;
}

CampaignState deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  CampaignState s;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_line(line, line_no);
    try {
      if (!have_header) {
        require(j.value("format", "") == kFormat, ErrorKind::parse_error, "not a campaign file");
        require(j.value("version", 0) == kVersion, ErrorKind::parse_error,
                "unsupported campaign file version " + std::to_string(j.value("version", 0)));
        s.config = j.at("config").get<CampaignConfig>();
        s.config.validate();
        have_header = true;
        continue;
      }
      detail::apply_event(s, j);
    } catch (const json::exception& e) {
      fail(ErrorKind::parse_error, "campaign line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::parse_error, "campaign line " + std::to_string(line_no) + ": " + e.what());
    }
    s.journal.push_back(line);
  }
  require(have_header, ErrorKind::parse_error, "campaign file is empty");
  return s;
}

void save_campaign(const CampaignState& state, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::invalid_input, "cannot write '" + tmp + "'");
    out << serialize(state);
    out.flush();
    require(static_cast<bool>(out), ErrorKind::invalid_input, "write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

CampaignState load_campaign(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open campaign file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void create_campaign_file(const CampaignState& state, const std::string& path, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path)) {
    fail(ErrorKind::conflict, "campaign file '" + path + "' exists; pass overwrite to replace it");
  }
  save_campaign(state, path);
}

std::string serialize_model(const gp::GPModel& model) {
  const auto& p = model.params();
  const auto& sc = model.scaling();
  json j = {{"format", "flowopt-gp"},
            {"version", 1},
            {"kernel", "matern"},
            {"nu", gp::smoothness_name(p.nu)},
            {"lengthscales", vec_json(p.lengthscales)},
            {"signal_var", p.signal_var},
            {"noise_var", p.noise_var},
            {"scaling",
             {{"lower", vec_json(sc.lower)}, {"upper", vec_json(sc.upper)}, {"y_mean", sc.y_mean}, {"y_std", sc.y_std}}},
            {"x_train", mat_json(model.x_train())},
            {"y_train", vec_json(model.y_train())}};
  return j.dump(2);
}

gp::GPModel deserialize_model(const std::string& text) {
  try {
    const json j = json::parse(text);
    require(j.value("format", "") == "flowopt-gp", ErrorKind::parse_error, "not a GP model document");
    gp::KernelParams p;
    p.nu = gp::parse_smoothness(j.at("nu").get<std::string>());
    p.lengthscales = vec_from(j.at("lengthscales"));
    p.signal_var = j.at("signal_var").get<double>();
    p.noise_var = j.at("noise_var").get<double>();
    gp::Scaling sc;
    sc.lower = vec_from(j.at("scaling").at("lower"));
    sc.upper = vec_from(j.at("scaling").at("upper"));
    sc.y_mean = j.at("scaling").at("y_mean").get<double>();
    sc.y_std = j.at("scaling").at("y_std").get<double>();
    Eigen::MatrixXd x = mat_from(j.at("x_train"), p.dims());
    Eigen::VectorXd y = vec_from(j.at("y_train"));
    return gp::GPModel(std::move(p), std::move(sc), std::move(x), std::move(y));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse_error, std::string("GP model document: ") + e.what());
  }
}

}  // namespace flowopt::campaign
