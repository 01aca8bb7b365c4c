#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace lifelong {

/// Finite MDP with rewards per (s, a) in [0, 1].
///
/// Transition probabilities are stored flat in (s, a, s') order and rewards
/// in (s, a) order. Use validate() before handing an instance to a solver;
/// every public solver validates its input.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.95;
  std::vector<double> transition;
  std::vector<double> reward;

  TabularMDP() = default;
  /// Zero transitions and rewards; rows must be filled before use.
  TabularMDP(int n_states, int n_actions, double gamma);

  std::size_t pair_index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
           static_cast<std::size_t>(a);
  }
  std::span<double> row(int s, int a);
  std::span<const double> row(int s, int a) const;
  double& reward_at(int s, int a) { return reward[pair_index(s, a)]; }
  double reward_at(int s, int a) const { return reward[pair_index(s, a)]; }

  /// Throws std::invalid_argument on any violated invariant: gamma outside
  /// [0, 1), rows not summing to 1 within 1e-9, entries outside [0, 1].
  void validate() const;

  bool operator==(const TabularMDP&) const = default;
};

struct ValueFunction {
  std::vector<double> values;
  std::vector<int> policy;
  int sweeps = 0;
};

/// Default stopping threshold for value iteration.
inline constexpr double kDefaultViTolerance = 0.01;

/// r(s,a) + gamma * sum_s' T(s,a,s') V(s'). Throws std::out_of_range.
double bellman_backup(const TabularMDP& mdp, std::span<const double> values, int s, int a);

/// One synchronous Bellman optimality sweep: returns T V.
std::vector<double> bellman_sweep(const TabularMDP& mdp, std::span<const double> values);

/// Greedy policy with ties broken towards the lowest action index.
std::vector<int> greedy_policy(const TabularMDP& mdp, std::span<const double> values);

/// Synchronous value iteration from V = 0, stopping once the max-norm change
/// of a sweep is at most `tolerance`. The returned values therefore have a
/// Bellman residual of at most gamma * tolerance.
ValueFunction value_iteration(const TabularMDP& mdp, double tolerance = kDefaultViTolerance);

void to_json(nlohmann::json& j, const TabularMDP& mdp);
void from_json(const nlohmann::json& j, TabularMDP& mdp);

}  // namespace lifelong
