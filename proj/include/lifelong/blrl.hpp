#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lifelong/dirichlet.hpp"
#include "lifelong/env.hpp"
#include "lifelong/mdp.hpp"
#include "lifelong/random.hpp"

namespace lifelong {

/// K sampled models merged into one MDP whose action (a, k) follows model k's
/// dynamics for base action a. Merged index = k * base_actions + a.
struct MergedMDP {
  TabularMDP mdp;
  int base_actions = 0;
  int n_models = 0;

  int encode(int action, int model) const { return model * base_actions + action; }
};

MergedMDP merge_models(const std::vector<TabularMDP>& models);

/// Drops the model index of a merged action.
int project_action(int merged_action, int base_actions);

struct BlrlConfig {
  int K = 5;
  int B = 5;
  double gamma = 0.95;
  double vi_tolerance = kDefaultViTolerance;
  /// Base Dirichlet concentration of the world prior.
  double prior_concentration = 1.0;
  /// World aggregation scale; a negative value means 1 / B.
  double kappa = -1.0;
  /// false reproduces BOSS with a fixed prior (no inter-task transfer).
  bool world_updates = true;

  double effective_kappa() const;
  void validate() const;
};

struct TaskBudget {
  int max_steps = 210;
  /// 0 means no episode limit.
  int max_episodes = 0;
};

struct EpisodeStats {
  int episode_index = 0;
  double episode_return = 0.0;
  int steps = 0;
  int resample_count = 0;  // resamples triggered during this episode
  std::int64_t wall_ns = 0;
};

struct TaskResult {
  CountTable counts;
  DirichletPosterior task_posterior;
  std::vector<EpisodeStats> episodes;
  int total_steps = 0;
  int total_resamples = 0;
};

/// Fresh world posterior with the symmetric base prior for `env`'s tables.
WorldPosterior make_world_prior(const TabularEnv& env, const BlrlConfig& config);

/// One task of the lifelong sampling algorithm: the task posterior starts as
/// a copy of the world posterior; K models are sampled, merged and solved at
/// task start and whenever a visit count first reaches B; the task posterior
/// absorbs every transition. Episodes end on termination or truncation and
/// the environment is reset without touching any posterior.
TaskResult run_task(TabularEnv& env, const WorldPosterior& world, const BlrlConfig& config,
                    Rng& rng, TaskBudget budget);

struct BlrlTaskMetrics {
  int task_index = 0;
  std::vector<EpisodeStats> episodes;
};

struct BlrlRunResult {
  std::vector<BlrlTaskMetrics> tasks;
  WorldPosterior world;
};

/// Outer lifelong loop over the family. Snapshot callback (optional) is
/// invoked with the world posterior after each task.
BlrlRunResult run_lifelong_blrl(
    const TaskFamily<TabularEnv>& family, const BlrlConfig& config, Rng& rng, TaskBudget budget,
    const std::function<void(int, const WorldPosterior&)>& on_task_end = {});

}  // namespace lifelong
