#include <algorithm>

#include "doctest.h"
#include "lifelong/blrl.hpp"
#include "lifelong/envs.hpp"

using namespace lifelong;

namespace {

TabularMDP random_mdp(int ns, int na, double gamma, Rng& rng) {
  TabularMDP m(ns, na, gamma);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      auto row = m.row(s, a);
      double total = 0.0;
      for (auto& p : row) total += (p = uniform01(rng));
      for (auto& p : row) p /= total;
      m.reward_at(s, a) = uniform01(rng);
    }
  }
  return m;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

TEST_CASE("merged optimal values dominate every constituent") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int ns = uniform_int(rng, 1, 6);
    const int na = uniform_int(rng, 1, 3);
    const int k = uniform_int(rng, 1, 4);
    std::vector<TabularMDP> models;
    for (int i = 0; i < k; ++i) models.push_back(random_mdp(ns, na, 0.9, rng));
    const auto merged = merge_models(models);
    const auto vm = value_iteration(merged.mdp, 1e-12);
    for (const auto& m : models) {
      const auto v = value_iteration(m, 1e-12);
      for (int s = 0; s < ns; ++s) CHECK(vm.values[s] >= v.values[s] - 1e-8);
    }
    if (k == 1) {
      const auto v = value_iteration(models[0], 1e-12);
      for (int s = 0; s < ns; ++s) CHECK(vm.values[s] == doctest::Approx(v.values[s]).epsilon(1e-12));
    }
  }
}

TEST_CASE("merged action encoding") {
  Rng rng(1);
  const auto merged = merge_models({random_mdp(2, 3, 0.9, rng), random_mdp(2, 3, 0.9, rng)});
  CHECK(merged.mdp.n_actions == 6);
  CHECK(merged.encode(2, 1) == 5);
  CHECK(project_action(5, 3) == 2);
  CHECK_THROWS(merge_models({}));
  CHECK_THROWS(merge_models({random_mdp(2, 3, 0.9, rng), random_mdp(3, 3, 0.9, rng)}));
}

TEST_CASE("run_task respects the episode budget and resamples at the knownness threshold") {
  const auto family = gridworld_family(7, 1);
  auto env = family.make(0);
  BlrlConfig cfg;
  const auto world = make_world_prior(*env, cfg);
  Rng rng(2);
  const auto res = run_task(*env, world, cfg, rng, TaskBudget{210, 10});
  CHECK(res.episodes.size() <= 10);
  CHECK(res.total_steps <= 210);
  CHECK(res.total_resamples >= 1);
  int steps = 0;
  for (const auto& ep : res.episodes) steps += ep.steps;
  CHECK(steps == res.total_steps);
  CHECK(res.counts.total() == doctest::Approx(res.total_steps));
}

TEST_CASE("fixed-prior run leaves the world posterior untouched") {
  const auto family = gridworld_family(3, 3);
  BlrlConfig cfg;
  cfg.world_updates = false;
  Rng rng(4);
  const auto res = run_lifelong_blrl(family, cfg, rng, TaskBudget{42, 2});
  const auto fresh = make_world_prior(*family.make(0), cfg);
  CHECK(res.world == fresh);
  CHECK(res.tasks.size() == 3);
}

TEST_CASE("lifelong run is reproducible") {
  const auto family = gridworld_family(11, 4);
  BlrlConfig cfg;
  Rng a(8), b(8);
  const auto r1 = run_lifelong_blrl(family, cfg, a, TaskBudget{63, 3});
  const auto r2 = run_lifelong_blrl(family, cfg, b, TaskBudget{63, 3});
  CHECK(r1.world == r2.world);
  for (std::size_t i = 0; i < r1.tasks.size(); ++i) {
    for (std::size_t e = 0; e < r1.tasks[i].episodes.size(); ++e) {
      CHECK(r1.tasks[i].episodes[e].episode_return == r2.tasks[i].episodes[e].episode_return);
    }
  }
}
