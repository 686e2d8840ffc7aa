#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowopt/campaign.hpp"

using namespace flowopt;
using namespace flowopt::campaign;

namespace {

CampaignConfig quick(std::uint64_t seed = 3) {
  CampaignConfig c;
  c.seed = seed;
  c.tsemo.spectral_points = 300;
  c.tsemo.ga_generations = 20;
  c.tsemo.ga_population = 20;
  return c;
}

std::string temp_path(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("flowopt_test_" + name);
  std::filesystem::remove(p);
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::invalid_input;
}

void measure_all(CampaignState& s, std::uint64_t seed) {
  VirtualLabConfig lab;
  lab.seed = seed;
  for (const auto* e : s.pending()) {
    const int id = e->id;
    record_measurement(s, id, simulate(e->x, lab));
  }
}

}  // namespace

TEST_CASE("initial design") {
  const auto s = init_campaign(quick());
  CHECK(s.log.size() == 15);
  CHECK(s.pending().size() == 15);
  CHECK(s.iteration == 0);
  CHECK(s.journal.size() == 15);
  CHECK(s.log.front().id == 1);
  CHECK(s.log.back().id == 15);

  auto cfg = quick();
  cfg.n_groups = 1;
  cfg.per_group = 1;
  CHECK(init_campaign(cfg).pending().size() == 1);
  cfg.n_groups = 0;
  CHECK(kind_of([&] { init_campaign(cfg); }) == ErrorKind::invalid_input);
}

TEST_CASE("recording measurements") {
  auto s = init_campaign(quick());
  const DesignPoint x = s.log[0].x;
  Measurement m;
  m.w_nipam_f = 0.002;
  m.r_h = 104.0;
  m.sigma_w = 0.00037;
  m.sigma_r = 1.5;
  record_measurement(s, 1, m);
  const auto* e = s.find(1);
  REQUIRE(e->objectives);
  const auto direct = objectives_from_measurement(x, m, ProcessConstants{});
  CHECK(e->objectives->vector() == direct.vector());
  CHECK(e->objectives->sigma->isApprox(propagate_uncertainty(x, m, ProcessConstants{}).sigma));

  const std::string before = serialize(s);
  CHECK(kind_of([&] { record_measurement(s, 1, m); }) == ErrorKind::conflict);
  CHECK(kind_of([&] { record_measurement(s, 99, m); }) == ErrorKind::not_found);
  m.r_h = -3;
  CHECK(kind_of([&] { record_measurement(s, 2, m); }) == ErrorKind::invalid_input);
  CHECK(serialize(s) == before);

  Measurement pdi;
  pdi.r_h = 0.0;
  pdi.excluded = ExclusionReason::high_polydispersity;
  record_measurement(s, 2, pdi);
  CHECK_FALSE(s.find(2)->pending());
  CHECK_FALSE(s.find(2)->trainable());
  const Dataset d = s.dataset();
  CHECK(d.size() == 2);
  CHECK(d.trainable().size() == 1);
}

TEST_CASE("iterations") {
  auto s = init_campaign(quick());
  CHECK(kind_of([&] { next_iteration(s); }) == ErrorKind::insufficient_data);
  measure_all(s, 1);
  const auto& rec = next_iteration(s);
  CHECK(rec.iteration == 1);
  CHECK(s.iteration == 1);
  CHECK(s.pending().size() == 5);
  for (const auto* e : s.pending()) {
    CHECK(e->iteration == 1);
    CHECK(e->x.temp == s.pending()[0]->x.temp);
    CHECK(e->x.c_ctab == s.pending()[0]->x.c_ctab);
  }
  CHECK(rec.seed == s.iteration_seed(1));

  auto cfg = quick();
  cfg.max_iterations = 2;
  auto capped = init_campaign(cfg);
  measure_all(capped, 2);
  next_iteration(capped);
  next_iteration(capped);
  CHECK(capped.complete());
  CHECK(kind_of([&] { next_iteration(capped); }) == ErrorKind::campaign_complete);
}

TEST_CASE("replayed SI campaign") {
  const auto s = campaign_from_dataset(si_table_s1(), quick());
  CHECK(s.log.size() == 43);
  CHECK(s.pending().empty());
  CHECK(s.iteration == 8);
  CHECK_FALSE(s.complete());
  const Dataset d = s.dataset();
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.rows()[i].y.sq_radius_dev == si_table_s1().rows()[i].y.sq_radius_dev);
    CHECK(d.rows()[i].y.neg_product_flow ==
          doctest::Approx(si_table_s1().rows()[i].y.neg_product_flow).epsilon(1e-12));
  }
  auto next = s;
  const auto& rec = next_iteration(next);
  CHECK(rec.iteration == 9);
  CHECK(next.pending().size() == 5);

  auto full = quick();
  full.max_iterations = 11;
  auto after = campaign_from_dataset(si_table_s1(), full);
  for (int i = 0; i < 3; ++i) {
    next_iteration(after);
    measure_all(after, 3);
  }
  CHECK(after.iteration == 11);
  CHECK(kind_of([&] { next_iteration(after); }) == ErrorKind::campaign_complete);
}

TEST_CASE("persistence round trip") {
  auto s = init_campaign(quick(8));
  measure_all(s, 4);
  next_iteration(s);
  measure_all(s, 4);
  const auto loaded = deserialize(serialize(s));
  CHECK(serialize(loaded) == serialize(s));
  CHECK(loaded.log.size() == s.log.size());

  auto a = s;
  auto b = loaded;
  const auto ra = next_iteration(a);
  const auto rb = next_iteration(b);
  CHECK(ra.batch == rb.batch);
  CHECK(ra.sample_seeds == rb.sample_seeds);
  CHECK(serialize(a) == serialize(b));
}

TEST_CASE("campaign files only grow") {
  const std::string path = temp_path("grow.jsonl");
  auto s = init_campaign(quick(5));
  create_campaign_file(s, path, false);
  std::string prev = read_file(path);
  measure_all(s, 5);
  save_campaign(s, path);
  std::string cur = read_file(path);
  CHECK(cur.size() > prev.size());
  CHECK(cur.compare(0, prev.size(), prev) == 0);
  prev = cur;
  auto loaded = load_campaign(path);
  next_iteration(loaded);
  save_campaign(loaded, path);
  cur = read_file(path);
  CHECK(cur.compare(0, prev.size(), prev) == 0);

  CHECK(kind_of([&] { create_campaign_file(s, path, false); }) == ErrorKind::conflict);
  CHECK_NOTHROW(create_campaign_file(init_campaign(quick(6)), path, true));
  CHECK(load_campaign(path).pending().size() == 15);
  std::filesystem::remove(path);
  CHECK(kind_of([&] { load_campaign(path); }) == ErrorKind::not_found);
}

TEST_CASE("malformed campaign files") {
  CHECK(kind_of([] { deserialize(""); }) == ErrorKind::parse_error);
  CHECK(kind_of([] { deserialize("{\"format\":\"other\"}\n"); }) == ErrorKind::parse_error);
  const std::string header = serialize_header(quick());
  CHECK(kind_of([&] { deserialize(header + "\nnot json\n"); }) == ErrorKind::parse_error);
  CHECK(kind_of([&] { deserialize(header + "\n{\"event\":\"bogus\"}\n"); }) == ErrorKind::parse_error);
  CHECK(kind_of([&] {
          deserialize(header + "\n{\"event\":\"measurement\",\"id\":4,\"measurement\":{\"w_nipam_f\":0,\"r_h\":90}}\n");
        }) == ErrorKind::parse_error);
}

TEST_CASE("model serialization is bit exact") {
  const auto s = campaign_from_dataset(si_table_s1(), quick());
  const auto models = campaign_models(s);
  const auto back = deserialize_model(serialize_model(models.radius));
  Eigen::MatrixXd probe(3, 4);
  probe << 0.5, 6, 0.3, 65, 0.74, 3.68, 0.33, 62, 0.2, 15, 0.15, 79;
  CHECK(back.predict_batch(probe).mean == models.radius.predict_batch(probe).mean);
  CHECK(back.predict_batch(probe).variance == models.radius.predict_batch(probe).variance);
  CHECK(kind_of([] { deserialize_model("{}"); }) == ErrorKind::parse_error);
}

TEST_CASE("pareto report") {
  const auto s = campaign_from_dataset(si_table_s1(), quick());
  const auto r = pareto_report(s, 40, 20);
  CHECK(r.front.size() > 0);
  CHECK(r.sigma.rows() == r.front.size());
  CHECK(r.experiments.size() == 43);
  CHECK((r.sigma.col(kTempDev).array() == 0.0).all());
  for (Eigen::Index i = 0; i < r.front.size(); ++i) {
    for (Eigen::Index j = 0; j < r.front.size(); ++j) {
      CHECK_FALSE(moo::dominates(r.front.objectives.row(i), r.front.objectives.row(j)));
    }
  }
  const auto again = pareto_report(s, 40, 20, r.seed);
  CHECK(again.front.objectives == r.front.objectives);
}

TEST_CASE("closed loop and slices") {
  VirtualLabConfig lab;
  const auto zero = run_closed_loop(quick(), lab, 0);
  CHECK(zero.hypervolume.size() == 1);
  CHECK(zero.state.log.size() == 15);
  const auto two = run_closed_loop(quick(), lab, 2);
  REQUIRE(two.hypervolume.size() == 3);
  CHECK(two.hypervolume[1] >= two.hypervolume[0]);
  CHECK(two.hypervolume[2] >= two.hypervolume[1]);
  CHECK(two.state.pending().empty());
  CHECK(lhs_baseline_hypervolume(quick(), lab, 25) > 0.0);

  const auto models = campaign_models(two.state);
  const Eigen::Vector4d fixed(0.5, 6, 0.3, 65);
  const auto slice = gp_slice(models.product, Bounds::reactor(), kTemp, fixed, 11);
  CHECK(slice.x.size() == 11);
  CHECK(slice.x(0) == 60.0);
  CHECK(slice.x(10) == 80.0);
  CHECK((slice.variance.array() >= 0).all());
  CHECK(slice.mean(5) == doctest::Approx(models.product.mean(Eigen::Vector4d(0.5, 6, 0.3, 70))).epsilon(1e-12));
  CHECK_THROWS_AS(gp_slice(models.product, Bounds::reactor(), 4, fixed), Error);
}
