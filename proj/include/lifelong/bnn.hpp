#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lifelong/random.hpp"
#include "lifelong/replay.hpp"

namespace lifelong {

enum class Activation { kTanh, kSwish };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Layer sizes of a dynamics/reward net. Inputs are (state, action); the
/// output vector is [delta mean (d), reward mean, raw delta std (d), raw
/// reward std].
struct Architecture {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> hidden{64, 64, 64};
  Activation activation = Activation::kTanh;

  struct Layer {
    int in = 0;
    int out = 0;
    Eigen::Index w_offset = 0;  // column-major out x in block
    Eigen::Index b_offset = 0;
  };

  int input_dim() const { return state_dim + action_dim; }
  int output_dim() const { return 2 * (state_dim + 1); }
  std::vector<Layer> layers() const;
  Eigen::Index parameter_count() const;
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct OutputLimits {
  double sigma_min = 1e-3;
  double sigma_max = 10.0;
};

/// Floor added to softplus(rho) for weight standard deviations.
inline constexpr double kWeightSigmaFloor = 1e-6;

double softplus(double x);
double inverse_softplus(double y);
double sigmoid(double x);

/// Running per-feature mean and variance (Welford). Until two samples have
/// been seen the scale is 1.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;
  double count = 0.0;

  Normalizer() = default;
  explicit Normalizer(int dim) : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::VectorXd::Zero(dim)) {}

  int dim() const { return static_cast<int>(mean.size()); }
  void observe(const Eigen::VectorXd& x);
  Eigen::VectorXd scale() const;
  /// Normalizes the columns of `x` in place.
  void apply(Eigen::Ref<Eigen::MatrixXd> x) const;
  bool operator==(const Normalizer& o) const {
    return mean == o.mean && m2 == o.m2 && count == o.count;
  }
};

/// Fully factorised Gaussian over every weight and bias, sigma = softplus(rho)
/// + kWeightSigmaFloor.
struct GaussianWeightPosterior {
  Architecture arch;
  Eigen::VectorXd mu;
  Eigen::VectorXd rho;
  Normalizer normalizer;

  GaussianWeightPosterior() = default;
  /// Standard normal per parameter.
  explicit GaussianWeightPosterior(const Architecture& a);

  /// Scaled random means (fan-in) with a small common sigma.
  static GaussianWeightPosterior initialized(const Architecture& a, Rng& rng,
                                             double init_sigma = 0.01);

  Eigen::VectorXd sigma() const;
  Eigen::Index size() const { return mu.size(); }
  void validate() const;
  bool operator==(const GaussianWeightPosterior& o) const {
    return arch == o.arch && mu == o.mu && rho == o.rho && normalizer == o.normalizer;
  }
};

struct BNNPrediction {
  Eigen::VectorXd mean_next_state;
  Eigen::VectorXd std_next_state;
  double mean_reward = 0.0;
  double std_reward = 1.0;
};

/// Column-per-sample predictions. State rows hold deltas, not next states.
struct BatchPrediction {
  Eigen::MatrixXd mean_delta;
  Eigen::MatrixXd std_state;
  Eigen::RowVectorXd mean_reward;
  Eigen::RowVectorXd std_reward;
};

/// Anything that maps (state, action) columns to Gaussian predictions.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  /// states: d x N, actions: k x N.
  virtual void predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                             BatchPrediction& out) const = 0;
};

/// One concrete weight draw.
class FixedWeightNet final : public DynamicsModel {
 public:
  FixedWeightNet() = default;
  FixedWeightNet(Architecture arch, Eigen::VectorXd weights, Normalizer normalizer,
                 OutputLimits limits = {});

  int state_dim() const override { return arch_.state_dim; }
  int action_dim() const override { return arch_.action_dim; }
  void predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                     BatchPrediction& out) const override;

  const Architecture& architecture() const { return arch_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const OutputLimits& limits() const { return limits_; }

  /// Gradient of one raw output row with respect to the unnormalised input
  /// [s; a].
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                 int output_row) const;

  bool operator==(const FixedWeightNet& o) const { return weights_ == o.weights_; }

 private:
  Architecture arch_;
  Eigen::VectorXd weights_;
  Normalizer normalizer_;
  OutputLimits limits_;
  std::vector<Architecture::Layer> layers_;
};

/// omega_j = mu_j + sigma_j * eps_j. With `use_mean` the draw is mu itself.
FixedWeightNet sample_weights(const GaussianWeightPosterior& q, Rng& rng,
                              const OutputLimits& limits = {}, bool use_mean = false);

BNNPrediction predict(const DynamicsModel& net, const Eigen::VectorXd& s, const Eigen::VectorXd& a);

/// Diagonal Gaussian NLL over (next-state delta, reward). The delta residual
/// equals the next-state residual, so the input state is not needed.
double gaussian_nll(const BNNPrediction& pred, const Eigen::VectorXd& target_next_state,
                    double target_reward);

double kl_factorized_gaussians(const GaussianWeightPosterior& q, const GaussianWeightPosterior& p);
double kl_factorized_gaussians(std::span<const double> mu_q, std::span<const double> sigma_q,
                               std::span<const double> mu_p, std::span<const double> sigma_p);

struct ElboResult {
  double loss = 0.0;
  double nll = 0.0;
  double kl = 0.0;
  Eigen::VectorXd grad_mu;
  Eigen::VectorXd grad_rho;
};

/// Standard normal noise for each of the n_mc weight draws, one column per
/// draw. Exposed so finite-difference checks can hold the draw fixed.
Eigen::MatrixXd draw_weight_noise(Eigen::Index n_params, int n_mc, Rng& rng);

/// loss = kl_weight * KL(q || prior) + mean over draws of the batch-mean NLL.
/// With `deterministic` the draws are the means and grad_rho is zero, so
/// training leaves rho where it started.
ElboResult elbo_loss(const GaussianWeightPosterior& q, const GaussianWeightPosterior& prior,
                     std::span<const Transition> batch, int n_mc, double kl_weight, Rng& rng,
                     const OutputLimits& limits = {}, bool deterministic = false);
ElboResult elbo_loss_with_noise(const GaussianWeightPosterior& q,
                                const GaussianWeightPosterior& prior,
                                std::span<const Transition> batch, const Eigen::MatrixXd& noise,
                                double kl_weight, const OutputLimits& limits = {},
                                bool deterministic = false);

struct TrainConfig {
  double lr = 1e-3;
  double kl_weight = 1e-4;
  int n_mc = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool deterministic = false;
};

struct AdamState {
  Eigen::VectorXd m_mu, v_mu, m_rho, v_rho;
  long step = 0;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One Adam step on elbo_loss. Throws DivergenceError, leaving `q` untouched,
/// when the loss or a gradient is not finite.
ElboResult train_step(GaussianWeightPosterior& q, const GaussianWeightPosterior& prior,
                      std::span<const Transition> batch, const TrainConfig& cfg, AdamState& adam,
                      Rng& rng, const OutputLimits& limits = {});

inline GaussianWeightPosterior copy_parameters(const GaussianWeightPosterior& world) {
  return world;
}

/// Source of independent weight draws.
class ModelSampler {
 public:
  virtual ~ModelSampler() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::unique_ptr<DynamicsModel> draw(Rng& rng) const = 0;
};

class PosteriorSampler final : public ModelSampler {
 public:
  /// Draws match sample_weights(q, rng, limits, use_mean). `q` must outlive
  /// the sampler and stay unchanged while it is in use.
  explicit PosteriorSampler(const GaussianWeightPosterior& q, OutputLimits limits = {},
                            bool use_mean = false);
  int state_dim() const override { return q_->arch.state_dim; }
  int action_dim() const override { return q_->arch.action_dim; }
  std::unique_ptr<DynamicsModel> draw(Rng& rng) const override;

 private:
  const GaussianWeightPosterior* q_;
  OutputLimits limits_;
  bool use_mean_;
  Eigen::VectorXd sigma_;
};

void to_json(nlohmann::json& j, const Architecture& a);
void from_json(const nlohmann::json& j, Architecture& a);
void to_json(nlohmann::json& j, const Normalizer& n);
void from_json(const nlohmann::json& j, Normalizer& n);
/// {"architecture", "layers": [{"mu_w","rho_w","mu_b","rho_b"}], "normalizer"}.
/// Weight matrices are nested row-major arrays.
void to_json(nlohmann::json& j, const GaussianWeightPosterior& q);
void from_json(const nlohmann::json& j, GaussianWeightPosterior& q);

}  // namespace lifelong
