// Command-line front end for a flow-synthesis optimization campaign. Every
// subcommand loads the campaign file, calls one library operation and
// writes the file back.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "flowopt/api.hpp"
#include "flowopt/campaign.hpp"
#include "flowopt/dataset.hpp"
#include "flowopt/epsopt.hpp"
#include "flowopt/error.hpp"

using namespace flowopt;

namespace {

void print_experiments(const std::vector<const campaign::Experiment*>& exps) {
  std::cout << "id,iteration,f_i,f_m,temp,c_ctab\n";
  for (const auto* e : exps) {
    std::cout << e->id << ',' << e->iteration << ',' << std::setprecision(6) << e->x.f_i << ',' << e->x.f_m << ','
              << e->x.temp << ',' << e->x.c_ctab << '\n';
  }
}

std::vector<const campaign::Experiment*> of_iteration(const campaign::CampaignState& s, int it) {
  std::vector<const campaign::Experiment*> out;
  for (const auto& e : s.log) {
    if (e.iteration == it) out.push_back(&e);
  }
  return out;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::parse_error: return 2;
    case ErrorKind::conflict:
    case ErrorKind::campaign_complete: return 3;
    case ErrorKind::not_found: return 4;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective Bayesian optimization of a continuous-flow microgel synthesis"};
  app.require_subcommand(1);
  std::string path = "campaign.jsonl";
  std::uint64_t seed = 0;
  app.add_option("--campaign", path, "Campaign file (JSON lines)");
  app.add_option("--seed", seed, "Campaign seed");

  campaign::CampaignConfig config;

  auto* init = app.add_subcommand("init", "Create a campaign with the grouped initial design");
  bool overwrite = false;
  bool centered = false;
  init->add_option("--groups", config.n_groups, "Number of (temp, c_ctab) groups")->capture_default_str();
  init->add_option("--per-group", config.per_group, "Runs per group")->capture_default_str();
  init->add_option("--max-iterations", config.max_iterations, "Iteration limit")->capture_default_str();
  init->add_option("--spectral-points", config.tsemo.spectral_points, "Random features per draw")
      ->capture_default_str();
  init->add_option("--generations", config.tsemo.ga_generations, "GA generations per suggestion")
      ->capture_default_str();
  init->add_option("--population", config.tsemo.ga_population, "GA population per suggestion")
      ->capture_default_str();
  init->add_flag("--centered", centered, "Centre LHS samples in their bins");
  init->add_flag("--overwrite", overwrite, "Replace an existing campaign file");

  auto* suggest = app.add_subcommand("suggest", "Run one TS-EMO iteration and append the batch");

  auto* record = app.add_subcommand("record", "Record a measurement for a pending experiment");
  int id = 0;
  double wf = 0.0, rh = 0.0;
  std::string exclude = "none";
  std::optional<double> sigma_w, sigma_r;
  record->add_option("--id", id, "Experiment id")->required();
  record->add_option("--wf", wf, "Final monomer weight fraction")->required();
  record->add_option("--rh", rh, "Hydrodynamic radius, nm")->required();
  record->add_option("--exclude", exclude, "Exclusion reason: none, high_polydispersity, high_relative_error");
  record->add_option("--sigma-w", sigma_w, "Raman model error, weight fraction");
  record->add_option("--sigma-r", sigma_r, "DLS radius standard deviation, nm");

  auto* pareto = app.add_subcommand("pareto", "Sampled Pareto front of the current models");
  int pop = 5000, gens = 1000;
  pareto->add_option("--pop", pop, "GA population")->capture_default_str();
  pareto->add_option("--gens", gens, "GA generations")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Epsilon-constraint sweep over the GP means");
  std::vector<double> eps_list;
  std::vector<double> temp_ub{80.0};
  validate->add_option("--eps-list", eps_list, "Bounds on the squared radius deviation, nm^2")->delimiter(',');
  validate->add_option("--temp-ub", temp_ub, "Temperature upper bounds, degC")->delimiter(',');

  auto* replay = app.add_subcommand("replay", "Build a campaign from a bundled data table");
  std::string fixture;
  replay->add_option("--fixture", fixture, "Bundled table")->required()->check(CLI::IsMember({"si-table-s1"}));
  replay->add_flag("--overwrite", overwrite, "Replace an existing campaign file");

  auto* simulate = app.add_subcommand("simulate", "Closed loop against the virtual lab");
  int iterations = 8;
  std::uint64_t lab_seed = 0;
  simulate->add_option("--iterations", iterations, "TS-EMO iterations")->capture_default_str();
  simulate->add_option("--lab-seed", lab_seed, "Virtual lab noise seed");
  simulate->add_flag("--overwrite", overwrite, "Replace an existing campaign file");

  auto* serve = app.add_subcommand("serve", "Serve the campaign over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  config.seed = seed;
  config.placement = centered ? LhsPlacement::centered : LhsPlacement::random;

  try {
    if (init->parsed()) {
      const auto state = campaign::init_campaign(config);
      campaign::create_campaign_file(state, path, overwrite);
      print_experiments(state.pending());
    } else if (suggest->parsed()) {
      auto state = campaign::load_campaign(path);
      const auto& rec = campaign::next_iteration(state);
      campaign::save_campaign(state, path);
      if (rec.padded) std::cerr << "warning: sampled front was smaller than the batch; padded by perturbation\n";
      print_experiments(of_iteration(state, rec.iteration));
    } else if (record->parsed()) {
      auto state = campaign::load_campaign(path);
      Measurement m;
      m.w_nipam_f = wf;
      m.r_h = rh;
      m.excluded = parse_exclusion_reason(exclude);
      m.sigma_w = sigma_w;
      m.sigma_r = sigma_r;
      campaign::record_measurement(state, id, m);
      campaign::save_campaign(state, path);
      const auto* e = state.find(id);
      if (e->objectives) {
        std::cout << "neg_product_flow,sq_radius_dev,temp_dev\n"
                  << e->objectives->neg_product_flow << ',' << e->objectives->sq_radius_dev << ','
                  << e->objectives->temp_dev << '\n';
      } else {
        std::cout << "excluded: " << to_string(m.excluded) << '\n';
      }
    } else if (pareto->parsed()) {
      const auto state = campaign::load_campaign(path);
      const auto report = campaign::pareto_report(state, pop, gens);
      std::cout << "f_i,f_m,temp,c_ctab,neg_product_flow,sq_radius_dev,temp_dev,sigma_product,sigma_radius\n";
      for (Eigen::Index i = 0; i < report.front.size(); ++i) {
        const auto& x = report.front.decisions;
        const auto& y = report.front.objectives;
        std::cout << x(i, kFlowInitiator) << ',' << x(i, kFlowMonomer) << ',' << x(i, kTemp) << ',' << x(i, kCtab)
                  << ',' << y(i, 0) << ',' << y(i, 1) << ',' << y(i, 2) << ',' << report.sigma(i, 0) << ','
                  << report.sigma(i, 1) << '\n';
      }
    } else if (validate->parsed()) {
      const auto state = campaign::load_campaign(path);
      if (eps_list.empty()) {
        for (int e = 2; e <= 25; ++e) eps_list.push_back(e);
      }
      epsopt::EpsConfig cfg;
      cfg.bounds = state.config.bounds;
      cfg.seed = state.config.seed;
      const auto rows = epsopt::sweep(campaign::campaign_models(state), eps_list, temp_ub, cfg);
      epsopt::write_sweep_csv(std::cout, rows);
      for (const auto& r : rows) {
        if (!r.feasible) std::cerr << "infeasible: eps=" << r.epsilon << " temp_ub=" << r.temp_upper << '\n';
        if (r.feasible && !r.certified) {
          std::cerr << "uncertified: eps=" << r.epsilon << " temp_ub=" << r.temp_upper << '\n';
        }
      }
    } else if (replay->parsed()) {
      const auto state = campaign::campaign_from_dataset(si_table_s1(), config);
      campaign::create_campaign_file(state, path, overwrite);
      std::cout << "replayed " << state.log.size() << " experiments through iteration " << state.iteration << '\n';
    } else if (simulate->parsed()) {
      VirtualLabConfig lab;
      lab.seed = lab_seed;
      const auto result = campaign::run_closed_loop(config, lab, iterations);
      campaign::create_campaign_file(result.state, path, overwrite);
      std::cout << "iteration,hypervolume\n";
      for (std::size_t i = 0; i < result.hypervolume.size(); ++i) {
        std::cout << i << ',' << result.hypervolume[i] << '\n';
      }
    } else if (serve->parsed()) {
      api::CampaignService service(campaign::load_campaign(path), path);
      std::cerr << "serving " << path << " on http://" << host << ':' << port << '\n';
      api::serve(service, host, port);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
