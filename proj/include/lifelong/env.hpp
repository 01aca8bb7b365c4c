#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lifelong/dirichlet.hpp"
#include "lifelong/random.hpp"

namespace lifelong {

struct TabularStep {
  int next_state = 0;
  double reward = 0.0;
  bool done = false;       // terminal transition
  bool truncated = false;  // episode step cap reached
};

/// Finite-state environment consumed by the tabular pipeline.
class TabularEnv {
 public:
  virtual ~TabularEnv() = default;

  virtual int n_states() const = 0;
  virtual int n_actions() const = 0;
  virtual RewardSupport reward_support() const = 0;
  /// States whose dynamics are known a priori to be zero-reward self-loops.
  virtual std::vector<int> absorbing_states() const { return {}; }

  virtual int reset(Rng& rng) = 0;
  virtual TabularStep step(int action) = 0;
};

struct ContinuousStep {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
};

struct ActionBound {
  double lo = -1.0;
  double hi = 1.0;
  bool operator==(const ActionBound&) const = default;
};

/// Vector-state environment consumed by the neural pipeline.
class ContinuousEnv {
 public:
  virtual ~ContinuousEnv() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::vector<ActionBound> action_bounds() const = 0;

  virtual Eigen::VectorXd reset(Rng& rng) = 0;
  virtual ContinuousStep step(const Eigen::VectorXd& action) = 0;

  /// Maps raw planner actions (one per column) to the encoding the
  /// environment actually executes, e.g. thresholding for discrete actions.
  /// Identity by default.
  virtual void canonicalize_actions(Eigen::Ref<Eigen::MatrixXd> actions) const { (void)actions; }
};

/// A HiP-MDP family: task i is a deterministic function of the family seed
/// and i, so separate algorithms see the same task sequence.
template <typename Env>
struct TaskFamily {
  std::function<std::unique_ptr<Env>(int task_index)> make;
  int task_count = 0;
};

}  // namespace lifelong
