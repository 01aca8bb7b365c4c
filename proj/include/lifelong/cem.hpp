#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lifelong/bnn.hpp"
#include "lifelong/env.hpp"
#include "lifelong/random.hpp"

namespace lifelong {

struct CemConfig {
  int horizon = 20;
  int population = 500;
  int n_elites = 50;
  int particles = 20;
  int iterations = 5;
  /// Per action dimension; empty means half of each bound's width.
  std::vector<double> init_std;
  std::vector<ActionBound> action_bounds;
  double min_std = 1e-3;
  /// Carry the best sequence seen so far into each later population.
  bool keep_best = true;

  int action_dim() const { return static_cast<int>(action_bounds.size()); }
  Eigen::VectorXd initial_std() const;
  void validate() const;
};

/// Gaussian over action sequences, one row per time step.
struct ActionSequenceDistribution {
  Eigen::MatrixXd mean;  // T x k
  Eigen::MatrixXd std;   // T x k
};

struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scores a population of action sequences from a start state.
class SequenceEvaluator {
 public:
  virtual ~SequenceEvaluator() = default;
  /// Called once per plan; fixes every random quantity the scores depend on.
  virtual void begin_plan(int horizon, int population, Rng& rng) = 0;
  /// actions[t] is k x N (one column per candidate). Writes N scores.
  virtual void evaluate(const Eigen::VectorXd& s0, const std::vector<Eigen::MatrixXd>& actions,
                        Eigen::VectorXd& scores) = 0;
};

using ActionTransform = std::function<void(Eigen::Ref<Eigen::MatrixXd>)>;

/// Per-particle noise: particle p at step t uses noise[p * T + t], a d x N
/// standard normal block.
struct ParticleNoise {
  int particles = 0;
  int horizon = 0;
  std::vector<Eigen::MatrixXd> blocks;
  const Eigen::MatrixXd& at(int p, int t) const { return blocks[static_cast<std::size_t>(p * horizon + t)]; }
  void draw(int particles, int horizon, int state_dim, int population, Rng& rng);
};

/// Averages predicted reward over P particles, each propagated through its
/// own fixed weight draw. Next states are sampled from the predictive
/// Gaussian. Score of candidate n is (sum_p sum_t mu_r) / P.
class ParticleEvaluator final : public SequenceEvaluator {
 public:
  ParticleEvaluator(const ModelSampler& sampler, int particles, ActionTransform transform = {});
  void begin_plan(int horizon, int population, Rng& rng) override;
  void evaluate(const Eigen::VectorXd& s0, const std::vector<Eigen::MatrixXd>& actions,
                Eigen::VectorXd& scores) override;

 private:
  const ModelSampler* sampler_;
  int particles_;
  ActionTransform transform_;
  std::vector<std::unique_ptr<DynamicsModel>> nets_;
  ParticleNoise noise_;
};

struct CemDiagnostics {
  std::vector<double> best_score;  // per iteration, best finite score
  long nonfinite_scores = 0;
};

/// Model-predictive CEM with a warm start from the previous plan shifted by
/// one step.
class CemPlanner {
 public:
  explicit CemPlanner(CemConfig cfg);

  /// First action of the final mean sequence, clamped to the bounds.
  Eigen::VectorXd plan(SequenceEvaluator& evaluator, const Eigen::VectorXd& s0, Rng& rng,
                       CemDiagnostics* diag = nullptr);
  /// Drop the warm start; the next plan begins from the bound centres.
  void reset();

  const CemConfig& config() const { return cfg_; }
  const ActionSequenceDistribution& distribution() const { return dist_; }
  /// Best candidate of the last plan, flattened to T*k rows (row t*k + j).
  const Eigen::MatrixXd& best_sequence() const { return best_; }
  double best_score() const { return best_score_; }

 private:
  CemConfig cfg_;
  ActionSequenceDistribution dist_;
  Eigen::MatrixXd warm_mean_;
  Eigen::MatrixXd best_;
  double best_score_ = 0.0;
};

/// Moments of the elite rows. Sequences are flattened T*k rows, one column per
/// candidate. The std floor is applied.
ActionSequenceDistribution refit_elites(const Eigen::MatrixXd& flat_candidates,
                                        const std::vector<int>& elite_columns, int horizon,
                                        int action_dim, double min_std);

/// One-shot plan without warm start.
Eigen::VectorXd plan(const ModelSampler& sampler, const Eigen::VectorXd& s0, const CemConfig& cfg,
                     Rng& rng, ActionTransform transform = {});

/// Mean over P particles of the undiscounted predicted reward sum. T x k
/// actions. Draw order from `rng`: one seed for a local generator, then the
/// noise table, then the P nets.
double evaluate_sequence(const ModelSampler& sampler, const Eigen::VectorXd& s0,
                         const Eigen::MatrixXd& actions, int particles, Rng& rng);

struct ParticleStep {
  Eigen::MatrixXd next_states;  // d x P
  Eigen::VectorXd rewards;      // P reward draws
  std::vector<BNNPrediction> predictions;
};

/// Advance P particles one step, particle p through nets[p].
ParticleStep propagate_particles(const std::vector<const DynamicsModel*>& nets,
                                 const Eigen::MatrixXd& particles, const Eigen::VectorXd& action,
                                 Rng& rng);
/// Same, drawing one net per particle from the sampler first.
ParticleStep propagate_particles(const ModelSampler& sampler, const Eigen::MatrixXd& particles,
                                 const Eigen::VectorXd& action, Rng& rng);

}  // namespace lifelong
