#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lifelong/bnn.hpp"
#include "lifelong/cem.hpp"
#include "lifelong/env.hpp"
#include "lifelong/replay.hpp"

namespace lifelong {

enum class VblrlVariant {
  kVblrl,
  /// Task nets use their means only and never train rho.
  kDeterministic,
  /// Fresh random task model per task, no world model.
  kSingleTask,
  /// One model shared by all tasks, no task-specific posterior.
  kWorldOnly,
};

std::string variant_name(VblrlVariant v);
VblrlVariant parse_variant(const std::string& name);

enum class BackwardStrategy { kCombined, kTaskOnly, kWorldOnly };

std::string strategy_name(BackwardStrategy s);
/// Accepts "combined", "task", "task-only", "world", "world-only".
BackwardStrategy parse_strategy(const std::string& name);

struct ConfidenceParams {
  double alpha = 1.0;
  int particles = 20;
};

enum class ConfidenceTarget { kReward, kState, kCombined };

/// c = -Var_p(mu) - alpha * Var_p(sigma) with the unbiased sample variance.
/// kState sums c over state dimensions; kCombined adds the reward term.
/// Requires at least two predictions.
double confidence(std::span<const BNNPrediction> preds, const ConfidenceParams& params,
                  ConfidenceTarget target = ConfidenceTarget::kCombined);

struct VblrlConfig {
  VblrlVariant variant = VblrlVariant::kVblrl;
  Architecture arch;  // state/action dims are filled in from the environment
  OutputLimits limits;
  double init_sigma = 0.01;
  TrainConfig world_train{1e-3, 1e-4};
  TrainConfig task_train{1e-3, 1e-4};
  int task_batch = 256;
  int world_batch_tasks = 8;
  int world_batch_per_task = 64;
  int task_train_steps = 10;   // per episode
  int world_train_steps = 10;  // per episode
  /// The task model plans once its buffer holds one full episode and at
  /// least this many transitions.
  int warmup_transitions = 256;
  std::size_t buffer_capacity = 0;
  CemConfig cem;
  ConfidenceParams confidence;

  bool uses_world_model() const { return variant != VblrlVariant::kSingleTask; }
  bool uses_task_models() const { return variant != VblrlVariant::kWorldOnly; }
  void validate() const;
};

struct TaskModel {
  GaussianWeightPosterior posterior;
  GaussianWeightPosterior prior;  // KL anchor while the task is active
  AdamState adam;
  ReplayBuffer buffer;
  int episodes = 0;
  bool ready = false;  // trained at least once
};

struct LifelongState {
  GaussianWeightPosterior world_model;
  GaussianWeightPosterior world_prior;
  AdamState world_adam;
  std::map<int, TaskModel> tasks;
  std::vector<int> task_order;
  int current_task = -1;
};

/// World model drawn from `rng` (for variants that have one).
LifelongState make_lifelong_state(const VblrlConfig& cfg, Rng& rng);

/// Task model = copy of the world model, or a fresh init for single-task.
void begin_task(LifelongState& state, const VblrlConfig& cfg, int task_id, Rng& rng);
/// Releases optimizer state and the KL anchor of the current task.
void end_task(LifelongState& state);

struct ForwardEpisode {
  double episode_return = 0.0;
  int steps = 0;
  /// Fraction of steps planned with the task model.
  double task_model_fraction = 0.0;
};

/// Plan, act and record for one episode, then run one task-model round and
/// one world-model round. Actions are uniform while the planning model has
/// never been trained.
ForwardEpisode forward_episode(LifelongState& state, const VblrlConfig& cfg, ContinuousEnv& env,
                               Rng& rng);

/// One train step per call: 64 transitions from each of min(8, visited)
/// distinct task buffers chosen uniformly.
ElboResult train_world_model(LifelongState& state, const VblrlConfig& cfg, Rng& rng);
ElboResult train_task_model(LifelongState& state, const VblrlConfig& cfg, Rng& rng);

struct SelectionEntry {
  double c_task = 0.0;
  double c_world = 0.0;
  bool chose_world = false;
};

struct SelectionLog {
  long decisions = 0;
  long world_chosen = 0;
  std::size_t max_entries = 4096;
  std::vector<SelectionEntry> entries;

  void record(double c_task, double c_world, bool chose_world);
  double world_fraction() const {
    return decisions == 0 ? 0.0 : static_cast<double>(world_chosen) / static_cast<double>(decisions);
  }
};

/// Particle evaluator over a task and a world posterior. At every
/// (candidate, step) both models predict for all P particles and the
/// higher-confidence model's predictions drive the rollout; ties go to the
/// task model. Particle p of both models is drawn from the same seed, and
/// both share one noise table.
class GatedEvaluator final : public SequenceEvaluator {
 public:
  GatedEvaluator(const ModelSampler& task, const ModelSampler& world, BackwardStrategy strategy,
                 ConfidenceParams params, ActionTransform transform = {},
                 SelectionLog* log = nullptr);
  void begin_plan(int horizon, int population, Rng& rng) override;
  void evaluate(const Eigen::VectorXd& s0, const std::vector<Eigen::MatrixXd>& actions,
                Eigen::VectorXd& scores) override;

 private:
  const ModelSampler* task_;
  const ModelSampler* world_;
  BackwardStrategy strategy_;
  ConfidenceParams params_;
  ActionTransform transform_;
  SelectionLog* log_;
  std::vector<std::unique_ptr<DynamicsModel>> task_nets_;
  std::vector<std::unique_ptr<DynamicsModel>> world_nets_;
  ParticleNoise noise_;
};

struct BackwardEpisode {
  double episode_return = 0.0;
  int steps = 0;
  SelectionLog log;
};

/// Evaluation only: no buffer writes and no parameter updates.
BackwardEpisode backward_episode(const LifelongState& state, const VblrlConfig& cfg,
                                 ContinuousEnv& env, int task_id, BackwardStrategy strategy,
                                 Rng& rng);

}  // namespace lifelong
