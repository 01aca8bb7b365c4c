#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"
#include "lifelong/mdp.hpp"
#include "lifelong/random.hpp"

namespace lifelong {

/// Finite set of reward values an environment can emit. Observed rewards are
/// binned to the nearest value.
struct RewardSupport {
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  int nearest_bin(double r) const;
  bool operator==(const RewardSupport&) const = default;
};

/// Raw observation counts for one task, shaped like a posterior.
struct CountTable {
  int n_states = 0;
  int n_actions = 0;
  int n_reward_bins = 0;
  std::vector<double> transition;  // (s, a, s')
  std::vector<double> reward;      // (s, a, bin)

  CountTable() = default;
  CountTable(int n_states, int n_actions, int n_reward_bins);
  void record(int s, int a, int reward_bin, int s2);
  double total() const;
};

/// Dirichlet posterior over successors and reward bins for every (s, a).
struct DirichletPosterior {
  int n_states = 0;
  int n_actions = 0;
  RewardSupport support;
  std::vector<double> pseudo_counts;  // (s, a, s')
  std::vector<double> reward_counts;  // (s, a, bin)

  DirichletPosterior() = default;
  /// Symmetric prior with `concentration` on every successor and reward bin.
  DirichletPosterior(int n_states, int n_actions, RewardSupport support,
                     double concentration = 1.0);

  std::span<const double> counts(int s, int a) const;
  std::span<const double> reward_row(int s, int a) const;
  std::vector<double> mean_transition(int s, int a) const;
  double mean_reward(int s, int a) const;

  /// In-place conjugate update with one transition.
  void observe(int s, int a, double r, int s2);

  /// Throws std::invalid_argument if a row has non-positive total or a
  /// negative entry.
  void validate() const;

  bool operator==(const DirichletPosterior&) const = default;

 private:
  void check_pair(int s, int a) const;
};

/// World-level posterior: base prior plus kappa-scaled task counts.
struct WorldPosterior {
  DirichletPosterior counts;
  double kappa = 0.2;

  bool operator==(const WorldPosterior&) const = default;
};

/// Visit counts per (s, a) and the knownness threshold B.
struct KnownnessCounter {
  static constexpr int kNever = std::numeric_limits<int>::max();

  int n_states = 0;
  int n_actions = 0;
  int threshold = 5;
  std::vector<int> visits;

  KnownnessCounter() = default;
  KnownnessCounter(int n_states, int n_actions, int threshold);

  bool known(int s, int a) const;
  /// Returns the count after incrementing.
  int increment(int s, int a);
};

DirichletPosterior update_task_posterior(DirichletPosterior posterior, int s, int a, double r,
                                         int s2);

/// Deep copy of the world counts, to be updated by the new task.
DirichletPosterior init_task_prior_from_world(const WorldPosterior& world);

/// world + kappa * task_counts. Throws on negative counts or shape mismatch.
WorldPosterior update_world_posterior(WorldPosterior world, const CountTable& task_counts);

/// Draw from Dirichlet(alpha) by normalising independent Gamma(alpha_i, 1)
/// draws. Result sums to 1.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

/// Sample one MDP: known pairs draw their row from the task posterior,
/// unknown pairs from the world posterior; rewards are posterior means.
TabularMDP sample_mdp(const DirichletPosterior& task, const WorldPosterior& world,
                      const KnownnessCounter& known, double gamma, Rng& rng);

void to_json(nlohmann::json& j, const DirichletPosterior& p);
void from_json(const nlohmann::json& j, DirichletPosterior& p);
void to_json(nlohmann::json& j, const WorldPosterior& w);
void from_json(const nlohmann::json& j, WorldPosterior& w);

}  // namespace lifelong
