#include "lifelong/cem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lifelong {

Eigen::VectorXd CemConfig::initial_std() const {
  Eigen::VectorXd s(action_dim());
  for (int j = 0; j < action_dim(); ++j) {
    s[j] = init_std.empty() ? 0.5 * (action_bounds[j].hi - action_bounds[j].lo) : init_std[j];
  }
  return s;
}

void CemConfig::validate() const {
  if (horizon < 0) throw std::invalid_argument("CemConfig: horizon must be >= 0");
  if (population < 1) throw std::invalid_argument("CemConfig: population must be >= 1");
  if (n_elites < 1 || n_elites > population) {
    throw std::invalid_argument("CemConfig: n_elites must lie in [1, population]");
  }
  if (particles < 1) throw std::invalid_argument("CemConfig: particles must be >= 1");
  if (iterations < 1) throw std::invalid_argument("CemConfig: iterations must be >= 1");
  if (action_bounds.empty()) throw std::invalid_argument("CemConfig: action_bounds required");
  for (const auto& b : action_bounds) {
    if (!(b.lo < b.hi)) throw std::invalid_argument("CemConfig: each bound needs lo < hi");
  }
  if (!init_std.empty()) {
    if (init_std.size() != action_bounds.size()) {
      throw std::invalid_argument("CemConfig: init_std needs one entry per action dimension");
    }
    for (double s : init_std) {
      if (!(s > 0.0)) throw std::invalid_argument("CemConfig: init_std entries must be positive");
    }
  }
  if (!(min_std > 0.0)) throw std::invalid_argument("CemConfig: min_std must be positive");
}

void ParticleNoise::draw(int n_particles, int n_horizon, int state_dim, int population, Rng& rng) {
  particles = n_particles;
  horizon = n_horizon;
  blocks.resize(static_cast<std::size_t>(n_particles) * n_horizon);
  for (auto& b : blocks) {
    b.resize(state_dim, population);
    fill_standard_normal(rng, b.data(), static_cast<std::size_t>(b.size()));
  }
}

ParticleEvaluator::ParticleEvaluator(const ModelSampler& sampler, int particles,
                                     ActionTransform transform)
    : sampler_(&sampler), particles_(particles), transform_(std::move(transform)) {
  if (particles < 1) throw std::invalid_argument("ParticleEvaluator: particles must be >= 1");
}

void ParticleEvaluator::begin_plan(int horizon, int population, Rng& rng) {
  Rng local(rng());
  noise_.draw(particles_, horizon, sampler_->state_dim(), population, local);
  nets_.clear();
  for (int p = 0; p < particles_; ++p) {
    Rng net_rng(local());
    nets_.push_back(sampler_->draw(net_rng));
  }
}

void ParticleEvaluator::evaluate(const Eigen::VectorXd& s0,
                                 const std::vector<Eigen::MatrixXd>& actions,
                                 Eigen::VectorXd& scores) {
  const int horizon = static_cast<int>(actions.size());
  const Eigen::Index n = horizon > 0 ? actions[0].cols() : scores.size();
  scores = Eigen::VectorXd::Zero(n);
  if (horizon == 0) return;
  if (horizon > noise_.horizon || n > noise_.at(0, 0).cols()) {
    throw std::logic_error("ParticleEvaluator: begin_plan was called with a smaller shape");
  }
  BatchPrediction pred;
  Eigen::MatrixXd a;
  for (int p = 0; p < particles_; ++p) {
    Eigen::MatrixXd s = s0.replicate(1, n);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
    for (int t = 0; t < horizon; ++t) {
      a = actions[t];
      if (transform_) transform_(a);
      nets_[p]->predict_batch(s, a, pred);
      acc += pred.mean_reward;
      s += pred.mean_delta + pred.std_state.cwiseProduct(noise_.at(p, t).leftCols(n));
    }
    scores += acc.transpose();
  }
  scores /= static_cast<double>(particles_);
}

CemPlanner::CemPlanner(CemConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void CemPlanner::reset() { warm_mean_.resize(0, 0); }

ActionSequenceDistribution refit_elites(const Eigen::MatrixXd& flat, const std::vector<int>& elites,
                                        int horizon, int action_dim, double min_std) {
  const Eigen::Index rows = flat.rows();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(rows);
  for (int c : elites) mean += flat.col(c);
  mean /= static_cast<double>(elites.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(rows);
  for (int c : elites) var += (flat.col(c) - mean).cwiseAbs2();
  var /= static_cast<double>(elites.size());
  ActionSequenceDistribution d;
  d.mean.resize(horizon, action_dim);
  d.std.resize(horizon, action_dim);
  for (int t = 0; t < horizon; ++t) {
    for (int j = 0; j < action_dim; ++j) {
      d.mean(t, j) = mean[t * action_dim + j];
      d.std(t, j) = std::max(std::sqrt(var[t * action_dim + j]), min_std);
    }
  }
  return d;
}

Eigen::VectorXd CemPlanner::plan(SequenceEvaluator& evaluator, const Eigen::VectorXd& s0, Rng& rng,
                                 CemDiagnostics* diag) {
  const int T = cfg_.horizon;
  const int k = cfg_.action_dim();
  const int N = cfg_.population;
  Eigen::VectorXd lo(k), hi(k), centre(k);
  for (int j = 0; j < k; ++j) {
    lo[j] = cfg_.action_bounds[j].lo;
    hi[j] = cfg_.action_bounds[j].hi;
    centre[j] = 0.5 * (lo[j] + hi[j]);
  }
  if (T == 0) {
    dist_ = {};
    return centre;
  }

  if (warm_mean_.rows() == T && warm_mean_.cols() == k) {
    dist_.mean = warm_mean_;
  } else {
    dist_.mean = centre.transpose().replicate(T, 1);
  }
  dist_.std = cfg_.initial_std().transpose().replicate(T, 1);

  evaluator.begin_plan(T, N, rng);
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(T) * k, N);
  std::vector<Eigen::MatrixXd> actions(T, Eigen::MatrixXd(k, N));
  Eigen::VectorXd scores(N);
  std::vector<int> order(N);
  bool have_best = false;

  for (int iter = 0; iter < cfg_.iterations; ++iter) {
    fill_standard_normal(rng, flat.data(), static_cast<std::size_t>(flat.size()));
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < k; ++j) {
        const Eigen::Index r = static_cast<Eigen::Index>(t) * k + j;
        flat.row(r) = (dist_.mean(t, j) + dist_.std(t, j) * flat.row(r).array())
                          .min(hi[j])
                          .max(lo[j])
                          .matrix();
      }
    }
    if (cfg_.keep_best && have_best) {
      flat.col(0) = Eigen::Map<const Eigen::VectorXd>(best_.data(), best_.size());
    }
    for (int t = 0; t < T; ++t) actions[t] = flat.middleRows(static_cast<Eigen::Index>(t) * k, k);

    evaluator.evaluate(s0, actions, scores);
    long bad = 0;
    for (int i = 0; i < N; ++i) {
      if (!std::isfinite(scores[i])) {
        scores[i] = -std::numeric_limits<double>::infinity();
        ++bad;
      }
    }
    if (diag != nullptr) diag->nonfinite_scores += bad;
    if (bad == N) throw PlanningError("CEM: every candidate scored non-finite");

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    const std::vector<int> elites(order.begin(), order.begin() + cfg_.n_elites);

    if (!have_best || scores[order[0]] > best_score_) {
      best_score_ = scores[order[0]];
      best_ = flat.col(order[0]);
      have_best = true;
    }
    if (diag != nullptr) diag->best_score.push_back(scores[order[0]]);
    dist_ = refit_elites(flat, elites, T, k, cfg_.min_std);
  }

  Eigen::VectorXd first = dist_.mean.row(0).transpose().cwiseMin(hi).cwiseMax(lo);
  warm_mean_.resize(T, k);
  if (T > 1) warm_mean_.topRows(T - 1) = dist_.mean.bottomRows(T - 1);
  warm_mean_.row(T - 1) = centre.transpose();
  return first;
}

Eigen::VectorXd plan(const ModelSampler& sampler, const Eigen::VectorXd& s0, const CemConfig& cfg,
                     Rng& rng, ActionTransform transform) {
  if (s0.size() != sampler.state_dim()) throw std::invalid_argument("plan: state dimension mismatch");
  ParticleEvaluator eval(sampler, cfg.particles, std::move(transform));
  CemPlanner planner(cfg);
  return planner.plan(eval, s0, rng);
}

double evaluate_sequence(const ModelSampler& sampler, const Eigen::VectorXd& s0,
                         const Eigen::MatrixXd& actions, int particles, Rng& rng) {
  const int T = static_cast<int>(actions.rows());
  if (T > 0 && actions.cols() != sampler.action_dim()) {
    throw std::invalid_argument("evaluate_sequence: action dimension mismatch");
  }
  ParticleEvaluator eval(sampler, particles);
  eval.begin_plan(T, 1, rng);
  std::vector<Eigen::MatrixXd> cols(T);
  for (int t = 0; t < T; ++t) cols[t] = actions.row(t).transpose();
  Eigen::VectorXd scores(1);
  eval.evaluate(s0, cols, scores);
  return scores[0];
}

ParticleStep propagate_particles(const std::vector<const DynamicsModel*>& nets,
                                 const Eigen::MatrixXd& particles, const Eigen::VectorXd& action,
                                 Rng& rng) {
  const Eigen::Index P = particles.cols();
  if (P < 1 || static_cast<Eigen::Index>(nets.size()) != P) {
    throw std::invalid_argument("propagate_particles: need one net per particle, P >= 1");
  }
  ParticleStep out;
  out.next_states.resize(particles.rows(), P);
  out.rewards.resize(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const Eigen::VectorXd s = particles.col(p);
    BNNPrediction pred = predict(*nets[static_cast<std::size_t>(p)], s, action);
    Eigen::VectorXd next = pred.mean_next_state;
    for (Eigen::Index i = 0; i < next.size(); ++i) {
      next[i] += pred.std_next_state[i] * standard_normal(rng);
    }
    out.next_states.col(p) = next;
    out.rewards[p] = pred.mean_reward + pred.std_reward * standard_normal(rng);
    out.predictions.push_back(std::move(pred));
  }
  return out;
}

ParticleStep propagate_particles(const ModelSampler& sampler, const Eigen::MatrixXd& particles,
                                 const Eigen::VectorXd& action, Rng& rng) {
  std::vector<std::unique_ptr<DynamicsModel>> owned;
  std::vector<const DynamicsModel*> nets;
  for (Eigen::Index p = 0; p < particles.cols(); ++p) {
    owned.push_back(sampler.draw(rng));
    nets.push_back(owned.back().get());
  }
  return propagate_particles(nets, particles, action, rng);
}

}  // namespace lifelong
