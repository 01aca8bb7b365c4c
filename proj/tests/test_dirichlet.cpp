#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lifelong/dirichlet.hpp"

using namespace lifelong;

TEST_CASE("posterior mean converges to the generating multinomial") {
  Rng rng(21);
  const std::vector<double> truth{0.5, 0.2, 0.2, 0.1};
  DirichletPosterior post(4, 1, RewardSupport{{0.0, 1.0}});
  std::discrete_distribution<int> gen(truth.begin(), truth.end());
  for (int i = 0; i < 10000; ++i) post.observe(0, 0, 0.0, gen(rng));
  const auto mean = post.mean_transition(0, 0);
  double l1 = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) l1 += std::abs(mean[i] - truth[i]);
  CHECK(l1 < 0.05);
}

TEST_CASE("dirichlet draws are simplex points") {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> alpha(1 + trial % 7);
    for (auto& a : alpha) a = 1e-3 + 5.0 * uniform01(rng);
    const auto p = sample_dirichlet(alpha, rng);
    REQUIRE(p.size() == alpha.size());
    double total = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      CHECK(std::isfinite(x));
      total += x;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dirichlet draw mean matches alpha / sum(alpha)") {
  Rng rng(6);
  const std::vector<double> alpha{2.0, 3.0, 5.0};
  std::vector<double> acc(3, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_dirichlet(alpha, rng);
    for (int k = 0; k < 3; ++k) acc[k] += p[k] / n;
  }
  CHECK(acc[0] == doctest::Approx(0.2).epsilon(0.03));
  CHECK(acc[1] == doctest::Approx(0.3).epsilon(0.03));
  CHECK(acc[2] == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("world update adds kappa-scaled counts") {
  WorldPosterior world{DirichletPosterior(2, 1, RewardSupport{{0.0, 1.0}}, 1.0), 0.2};
  CountTable counts(2, 1, 2);
  for (int i = 0; i < 5; ++i) counts.record(0, 0, 1, 1);
  const auto updated = update_world_posterior(world, counts);
  CHECK(updated.counts.counts(0, 0)[1] == doctest::Approx(2.0));
  CHECK(updated.counts.counts(0, 0)[0] == doctest::Approx(1.0));
  CHECK(updated.counts.reward_row(0, 0)[1] == doctest::Approx(2.0));
}

TEST_CASE("task prior is a deep copy of the world counts") {
  WorldPosterior world{DirichletPosterior(2, 2, RewardSupport{{0.0, 1.0}}, 0.5), 0.2};
  auto task = init_task_prior_from_world(world);
  task.observe(1, 1, 1.0, 0);
  CHECK(task.counts(1, 1)[0] == doctest::Approx(1.5));
  CHECK(world.counts.counts(1, 1)[0] == doctest::Approx(0.5));
}

TEST_CASE("knownness threshold") {
  KnownnessCounter k(2, 2, 3);
  CHECK_FALSE(k.known(0, 1));
  k.increment(0, 1);
  k.increment(0, 1);
  CHECK_FALSE(k.known(0, 1));
  CHECK(k.increment(0, 1) == 3);
  CHECK(k.known(0, 1));
  CHECK_FALSE(k.known(1, 1));
}

TEST_CASE("posterior json round trip") {
  DirichletPosterior post(3, 2, RewardSupport{{0.0, 1.0}}, 0.7);
  post.observe(2, 1, 1.0, 0);
  const WorldPosterior w{post, 0.25};
  const nlohmann::json j = w;
  CHECK(j.get<WorldPosterior>() == w);
}
