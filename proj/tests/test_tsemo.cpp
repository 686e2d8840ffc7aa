#include <doctest.h>

#include <cmath>

#include "flowopt/dataset.hpp"
#include "flowopt/rng.hpp"
#include "flowopt/tsemo.hpp"

using namespace flowopt;
using namespace flowopt::tsemo;

namespace {

TsemoConfig quick(std::uint64_t seed) {
  TsemoConfig c;
  c.spectral_points = 500;
  c.ga_generations = 40;
  c.ga_population = 40;
  c.seed = seed;
  return c;
}

double mc_union(const Eigen::MatrixXd& p, const Eigen::VectorXd& ref, int samples) {
  Rng rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long hits = 0;
  Eigen::Vector3d z;
  for (int s = 0; s < samples; ++s) {
    for (int c = 0; c < 3; ++c) z(c) = u(rng) * ref(c);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      if ((p.row(i).transpose().array() <= z.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / samples * ref.prod();
}

}  // namespace

TEST_CASE("models on the SI table") {
  const Dataset d = si_table_s1();
  const Models m = train_models(d, Bounds::reactor(), quick(1));
  const Eigen::MatrixXd x = d.trainable_inputs();
  const Eigen::MatrixXd y = d.trainable_objectives();
  for (const auto* g : {&m.product, &m.radius}) {
    const Eigen::Index col = g == &m.product ? kNegProductFlow : kSqRadiusDev;
    const double tol = 3 * std::sqrt(g->params().noise_var) * g->scaling().y_std;
    const Eigen::VectorXd mu = g->mean_batch(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(std::abs(mu(i) - y(i, col)) <= tol + 1e-9);
  }

  Dataset two;
  for (int i = 0; i < 2; ++i) two.append(d.rows()[static_cast<std::size_t>(i)]);
  CHECK_NOTHROW(train_models(two, Bounds::reactor(), quick(1)));

  Dataset excluded;
  for (auto row : d.rows()) {
    row.excluded = true;
    excluded.append(row);
  }
  CHECK_THROWS_AS(train_models(excluded, Bounds::reactor(), quick(1)), Error);
  CHECK_THROWS_AS(suggest_batch(Dataset{}, Bounds::reactor(), quick(1)), Error);
}

TEST_CASE("sampled front") {
  const Dataset d = si_table_s1();
  const auto cfg = quick(2);
  const Models m = train_models(d, Bounds::reactor(), cfg);
  const auto a = sampled_pareto(m, Bounds::reactor(), cfg, 5);
  const auto b = sampled_pareto(m, Bounds::reactor(), cfg, 5);
  CHECK(a.decisions == b.decisions);
  CHECK(a.objectives == b.objectives);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    CHECK(a.objectives(i, kTempDev) == a.decisions(i, kTemp) - 60.0);
    CHECK(Bounds::reactor().contains(a.decisions.row(i).transpose()));
  }
  const auto draw = draw_objectives(m, cfg, 5);
  CHECK(draw(a.decisions) == a.objectives);
}

TEST_CASE("batches share temperature and surfactant") {
  const Dataset d = si_table_s1();
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto rec = suggest_batch(d, Bounds::reactor(), quick(seed), 3);
    REQUIRE(rec.batch.size() == 5);
    CHECK(rec.iteration == 3);
    CHECK(rec.seed == seed);
    CHECK(rec.predicted.size() == 5);
    CHECK(rec.variance.size() == 5);
    CHECK(rec.sample_seeds.size() >= 2);
    for (const auto& x : rec.batch) {
      CHECK(x.temp == rec.batch[0].temp);
      CHECK(x.c_ctab == rec.batch[0].c_ctab);
      CHECK_NOTHROW(validate_design(x, Bounds::reactor()));
    }
    for (std::size_t i = 0; i < rec.batch.size(); ++i) {
      CHECK(rec.predicted[i].temp_dev == rec.batch[i].temp - 60.0);
      CHECK(rec.variance[i](kTempDev) == 0.0);
      CHECK(rec.variance[i](kNegProductFlow) >= 0.0);
      for (std::size_t j = i + 1; j < rec.batch.size(); ++j) CHECK_FALSE(rec.batch[i] == rec.batch[j]);
    }
  }
}

TEST_CASE("suggestions are deterministic and ignore excluded rows") {
  const Dataset d = si_table_s1();
  const auto a = suggest_batch(d, Bounds::reactor(), quick(9));
  const auto b = suggest_batch(d, Bounds::reactor(), quick(9));
  CHECK(a.batch == b.batch);
  CHECK(a.sample_seeds == b.sample_seeds);

  std::vector<DatasetRow> rows = d.rows();
  DatasetRow junk = rows.back();
  junk.x.f_m = 17.5;
  junk.y.neg_product_flow = -40.0;
  junk.excluded = true;
  rows.push_back(junk);
  const auto c = suggest_batch(Dataset(rows), Bounds::reactor(), quick(9));
  CHECK(c.batch == a.batch);
}

TEST_CASE("single-point batches and free grouping") {
  const Dataset d = si_table_s1();
  auto cfg = quick(4);
  cfg.batch_size = 1;
  const auto one = suggest_batch(d, Bounds::reactor(), cfg);
  CHECK(one.batch.size() == 1);

  cfg.batch_size = 3;
  cfg.group_dims.clear();
  cfg.redraw_per_point = true;
  const auto free = suggest_batch(d, Bounds::reactor(), cfg);
  CHECK(free.batch.size() == 3);
  CHECK(free.sample_seeds.size() > 2);
}

TEST_CASE("hypervolume improvement") {
  const Eigen::Vector3d ref(1, 1, 1);
  Eigen::MatrixXd inc(2, 3);
  inc << 0.2, 0.5, 0.5, 0.5, 0.2, 0.5;
  CHECK(hypervolume_improvement(Eigen::Vector3d(0.3, 0.6, 0.6), inc, ref) == 0.0);
  CHECK(hypervolume_improvement(Eigen::Vector3d(0.5, 0.5, 0.2), Eigen::MatrixXd(0, 3), ref) ==
        doctest::Approx(0.5 * 0.5 * 0.8));

  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd p(9, 3);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  const Eigen::Vector3d cand(0.15, 0.3, 0.2);
  Eigen::MatrixXd with(10, 3);
  with << p, cand.transpose();
  const Eigen::Vector3d big(1.2, 1.2, 1.2);
  const double mc = mc_union(with, big, 1000000) - mc_union(p, big, 1000000);
  const double exact = hypervolume_improvement(cand, p, big);
  CHECK(std::abs(exact - mc) <= 0.01 * mc_union(with, big, 1000000));

  const ObjectiveScaling s = ObjectiveScaling::from_data(inc);
  const Eigen::MatrixXd scaled = s.apply(inc);
  CHECK(scaled.col(0).minCoeff() == 0.0);
  CHECK(scaled.col(0).maxCoeff() == 1.0);
  CHECK((scaled.col(2).array() == 0.0).all());
}
