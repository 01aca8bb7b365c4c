#include "lifelong/blrl.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace lifelong {

MergedMDP merge_models(const std::vector<TabularMDP>& models) {
  if (models.empty()) throw std::invalid_argument("merge_models: no models");
  const auto& first = models.front();
  for (const auto& m : models) {
    if (m.n_states != first.n_states || m.n_actions != first.n_actions ||
        m.gamma != first.gamma) {
      throw std::invalid_argument("merge_models: models differ in shape or discount");
    }
  }
  const int k_models = static_cast<int>(models.size());
  MergedMDP merged{TabularMDP(first.n_states, first.n_actions * k_models, first.gamma),
                   first.n_actions, k_models};
  for (int k = 0; k < k_models; ++k) {
    for (int s = 0; s < first.n_states; ++s) {
      for (int a = 0; a < first.n_actions; ++a) {
        const int ma = merged.encode(a, k);
        const auto src = models[k].row(s, a);
        std::copy(src.begin(), src.end(), merged.mdp.row(s, ma).begin());
        merged.mdp.reward_at(s, ma) = models[k].reward_at(s, a);
      }
    }
  }
  return merged;
}

int project_action(int merged_action, int base_actions) {
  if (base_actions <= 0 || merged_action < 0) {
    throw std::invalid_argument("project_action: invalid merged action");
  }
  return merged_action % base_actions;
}

double BlrlConfig::effective_kappa() const {
  return kappa >= 0.0 ? kappa : 1.0 / static_cast<double>(std::max(B, 1));
}

void BlrlConfig::validate() const {
  if (K < 1) throw std::invalid_argument("BlrlConfig: K must be >= 1");
  if (B < 1) throw std::invalid_argument("BlrlConfig: B must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("BlrlConfig: gamma in [0,1)");
  if (!(vi_tolerance > 0.0)) throw std::invalid_argument("BlrlConfig: vi_tolerance > 0");
  if (!(prior_concentration > 0.0)) {
    throw std::invalid_argument("BlrlConfig: prior_concentration > 0");
  }
}

WorldPosterior make_world_prior(const TabularEnv& env, const BlrlConfig& config) {
  return WorldPosterior{DirichletPosterior(env.n_states(), env.n_actions(),
                                           env.reward_support(), config.prior_concentration),
                        config.effective_kappa()};
}

namespace {

std::vector<int> solve_merged(const DirichletPosterior& task, const WorldPosterior& world,
                              const KnownnessCounter& known, const BlrlConfig& config,
                              const std::vector<int>& absorbing, Rng& rng) {
  std::vector<TabularMDP> models;
  models.reserve(config.K);
  for (int k = 0; k < config.K; ++k) {
    auto m = sample_mdp(task, world, known, config.gamma, rng);
    for (int s : absorbing) {
      for (int a = 0; a < m.n_actions; ++a) {
        auto row = m.row(s, a);
        std::fill(row.begin(), row.end(), 0.0);
        row[s] = 1.0;
        m.reward_at(s, a) = 0.0;
      }
    }
    models.push_back(std::move(m));
  }
  const auto merged = merge_models(models);
  const auto vf = value_iteration(merged.mdp, config.vi_tolerance);
  std::vector<int> policy(vf.policy.size());
  for (std::size_t s = 0; s < policy.size(); ++s) {
    policy[s] = project_action(vf.policy[s], merged.base_actions);
  }
  return policy;
}

}  // namespace

TaskResult run_task(TabularEnv& env, const WorldPosterior& world, const BlrlConfig& config,
                    Rng& rng, TaskBudget budget) {
  config.validate();
  if (budget.max_steps < 1) throw std::invalid_argument("run_task: budget must be >= 1 step");
  if (world.counts.n_states != env.n_states() || world.counts.n_actions != env.n_actions()) {
    throw std::invalid_argument("run_task: posterior tables do not match the environment");
  }
  const int n_states = env.n_states();
  const int n_actions = env.n_actions();
  const auto absorbing = env.absorbing_states();
  const auto support = env.reward_support();

  TaskResult out;
  out.counts = CountTable(n_states, n_actions, support.size());
  out.task_posterior = init_task_prior_from_world(world);
  KnownnessCounter known(n_states, n_actions, config.B);

  using Clock = std::chrono::steady_clock;
  bool do_sample = true;
  std::vector<int> policy;
  int state = env.reset(rng);
  EpisodeStats episode;
  auto episode_start = Clock::now();

  for (int t = 0; t < budget.max_steps; ++t) {
    if (do_sample) {
      policy = solve_merged(out.task_posterior, world, known, config, absorbing, rng);
      do_sample = false;
      ++episode.resample_count;
      ++out.total_resamples;
    }
    const int action = policy[state];
    const auto step = env.step(action);
    const int count = known.increment(state, action);
    out.task_posterior.observe(state, action, step.reward, step.next_state);
    out.counts.record(state, action, support.nearest_bin(step.reward), step.next_state);
    if (count == config.B) do_sample = true;

    episode.episode_return += step.reward;
    ++episode.steps;
    ++out.total_steps;
    state = step.next_state;

    if (step.done || step.truncated) {
      episode.wall_ns =
          std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - episode_start)
              .count();
      out.episodes.push_back(episode);
      if (budget.max_episodes > 0 &&
          static_cast<int>(out.episodes.size()) >= budget.max_episodes) {
        break;
      }
      episode = EpisodeStats{};
      episode.episode_index = static_cast<int>(out.episodes.size());
      episode_start = Clock::now();
      state = env.reset(rng);
    }
  }
  if (episode.steps > 0 &&
      (out.episodes.empty() || out.episodes.back().episode_index != episode.episode_index)) {
    episode.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - episode_start)
            .count();
    out.episodes.push_back(episode);
  }
  return out;
}

BlrlRunResult run_lifelong_blrl(const TaskFamily<TabularEnv>& family, const BlrlConfig& config,
                                Rng& rng, TaskBudget budget,
                                const std::function<void(int, const WorldPosterior&)>& on_task_end) {
  config.validate();
  BlrlRunResult out;
  if (family.task_count <= 0) return out;

  std::unique_ptr<TabularEnv> env = family.make(0);
  out.world = make_world_prior(*env, config);
  for (int i = 0; i < family.task_count; ++i) {
    if (i > 0) env = family.make(i);
    auto result = run_task(*env, out.world, config, rng, budget);
    if (config.world_updates) {
      out.world = update_world_posterior(std::move(out.world), result.counts);
    }
    out.tasks.push_back({i, std::move(result.episodes)});
    if (on_task_end) on_task_end(i, out.world);
  }
  return out;
}

}  // namespace lifelong
