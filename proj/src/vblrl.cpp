#include "lifelong/vblrl.hpp"

#include <algorithm>
#include <stdexcept>

namespace lifelong {

std::string variant_name(VblrlVariant v) {
  switch (v) {
    case VblrlVariant::kVblrl:
      return "vblrl";
    case VblrlVariant::kDeterministic:
      return "vblrl-deterministic";
    case VblrlVariant::kSingleTask:
      return "single-task-mbrl";
    case VblrlVariant::kWorldOnly:
      return "world-model-only";
  }
  return "vblrl";
}

VblrlVariant parse_variant(const std::string& name) {
  if (name == "vblrl") return VblrlVariant::kVblrl;
  if (name == "vblrl-deterministic") return VblrlVariant::kDeterministic;
  if (name == "single-task-mbrl") return VblrlVariant::kSingleTask;
  if (name == "world-model-only") return VblrlVariant::kWorldOnly;
  throw std::invalid_argument("unknown VBLRL variant '" + name + "'");
}

std::string strategy_name(BackwardStrategy s) {
  switch (s) {
    case BackwardStrategy::kCombined:
      return "combined";
    case BackwardStrategy::kTaskOnly:
      return "task";
    case BackwardStrategy::kWorldOnly:
      return "world";
  }
  return "combined";
}

BackwardStrategy parse_strategy(const std::string& name) {
  if (name == "combined") return BackwardStrategy::kCombined;
  if (name == "task" || name == "task-only") return BackwardStrategy::kTaskOnly;
  if (name == "world" || name == "world-only") return BackwardStrategy::kWorldOnly;
  throw std::invalid_argument("unknown backward strategy '" + name + "'");
}

namespace {

// Shifted by the first value so that identical inputs give exactly zero.
double sample_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  double ss = 0.0;
  for (double x : v) {
    const double d = x - v[0];
    sum += d;
    ss += d * d;
  }
  return std::max(0.0, ss - sum * sum / n) / (n - 1.0);
}

}  // namespace

double confidence(std::span<const BNNPrediction> preds, const ConfidenceParams& params,
                  ConfidenceTarget target) {
  if (preds.size() < 2) throw std::invalid_argument("confidence: need at least two predictions");
  std::vector<double> mu(preds.size()), sd(preds.size());
  auto term = [&]() { return -sample_variance(mu) - params.alpha * sample_variance(sd); };
  double c = 0.0;
  if (target != ConfidenceTarget::kState) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      mu[p] = preds[p].mean_reward;
      sd[p] = preds[p].std_reward;
    }
    c += term();
  }
  if (target != ConfidenceTarget::kReward) {
    const Eigen::Index d = preds[0].mean_next_state.size();
    for (Eigen::Index i = 0; i < d; ++i) {
      for (std::size_t p = 0; p < preds.size(); ++p) {
        mu[p] = preds[p].mean_next_state[i];
        sd[p] = preds[p].std_next_state[i];
      }
      c += term();
    }
  }
  return c;
}

void VblrlConfig::validate() const {
  cem.validate();
  if (task_batch < 1 || world_batch_tasks < 1 || world_batch_per_task < 1) {
    throw std::invalid_argument("VblrlConfig: batch sizes must be positive");
  }
  if (task_train_steps < 0 || world_train_steps < 0 || warmup_transitions < 0) {
    throw std::invalid_argument("VblrlConfig: step counts must be nonnegative");
  }
  if (confidence.particles < 1 || !(confidence.alpha >= 0.0)) {
    throw std::invalid_argument("VblrlConfig: confidence needs particles >= 1 and alpha >= 0");
  }
  if (!(limits.sigma_min > 0.0 && limits.sigma_min < limits.sigma_max)) {
    throw std::invalid_argument("VblrlConfig: need 0 < sigma_min < sigma_max");
  }
}

LifelongState make_lifelong_state(const VblrlConfig& cfg, Rng& rng) {
  cfg.validate();
  LifelongState st;
  st.world_prior = GaussianWeightPosterior(cfg.arch);
  if (cfg.uses_world_model()) {
    st.world_model = GaussianWeightPosterior::initialized(cfg.arch, rng, cfg.init_sigma);
  }
  return st;
}

void begin_task(LifelongState& state, const VblrlConfig& cfg, int task_id, Rng& rng) {
  if (state.tasks.count(task_id) != 0) {
    throw std::invalid_argument("begin_task: task " + std::to_string(task_id) + " already begun");
  }
  TaskModel tm;
  tm.buffer = ReplayBuffer(cfg.buffer_capacity);
  if (cfg.variant == VblrlVariant::kSingleTask) {
    tm.posterior = GaussianWeightPosterior::initialized(cfg.arch, rng, cfg.init_sigma);
    tm.prior = GaussianWeightPosterior(cfg.arch);
  } else if (cfg.uses_task_models()) {
    tm.posterior = copy_parameters(state.world_model);
    tm.prior = copy_parameters(state.world_model);
  }
  state.tasks.emplace(task_id, std::move(tm));
  state.task_order.push_back(task_id);
  state.current_task = task_id;
}

void end_task(LifelongState& state) {
  auto it = state.tasks.find(state.current_task);
  if (it == state.tasks.end()) return;
  it->second.prior = GaussianWeightPosterior();
  it->second.adam = AdamState();
  state.current_task = -1;
}

ElboResult train_world_model(LifelongState& state, const VblrlConfig& cfg, Rng& rng) {
  std::vector<const ReplayBuffer*> visited;
  for (int id : state.task_order) {
    const auto& buf = state.tasks.at(id).buffer;
    if (!buf.empty()) visited.push_back(&buf);
  }
  if (visited.empty()) throw std::logic_error("train_world_model: every buffer is empty");
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(cfg.world_batch_tasks),
                                              visited.size());
  // Partial Fisher-Yates: the first m entries become a uniform subset.
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, visited.size() - 1);
    std::swap(visited[i], visited[pick(rng)]);
  }
  std::vector<Transition> batch;
  batch.reserve(m * static_cast<std::size_t>(cfg.world_batch_per_task));
  for (std::size_t i = 0; i < m; ++i) {
    visited[i]->sample_into(static_cast<std::size_t>(cfg.world_batch_per_task), rng, batch);
  }
  return train_step(state.world_model, state.world_prior, batch, cfg.world_train, state.world_adam,
                    rng, cfg.limits);
}

ElboResult train_task_model(LifelongState& state, const VblrlConfig& cfg, Rng& rng) {
  auto& tm = state.tasks.at(state.current_task);
  const auto batch = tm.buffer.sample(static_cast<std::size_t>(cfg.task_batch), rng);
  TrainConfig tc = cfg.task_train;
  if (cfg.variant == VblrlVariant::kDeterministic) tc.deterministic = true;
  return train_step(tm.posterior, tm.prior, batch, tc, tm.adam, rng, cfg.limits);
}

ForwardEpisode forward_episode(LifelongState& state, const VblrlConfig& cfg, ContinuousEnv& env,
                               Rng& rng) {
  auto it = state.tasks.find(state.current_task);
  if (it == state.tasks.end()) throw std::logic_error("forward_episode: no task has begun");
  TaskModel& tm = it->second;
  const bool deterministic_task = cfg.variant == VblrlVariant::kDeterministic;
  const ActionTransform transform = [&env](Eigen::Ref<Eigen::MatrixXd> a) {
    env.canonicalize_actions(a);
  };

  CemPlanner planner(cfg.cem);
  ForwardEpisode out;
  int task_steps = 0;
  Eigen::VectorXd s = env.reset(rng);
  while (true) {
    const bool use_task =
        cfg.variant == VblrlVariant::kSingleTask || (cfg.uses_task_models() && tm.ready);
    const GaussianWeightPosterior& q = use_task ? tm.posterior : state.world_model;
    // A model that has never been trained does not plan; act uniformly instead.
    const bool trained = use_task ? tm.ready : state.world_adam.step > 0;
    Eigen::VectorXd a(cfg.cem.action_dim());
    if (trained) {
      PosteriorSampler sampler(q, cfg.limits, use_task && deterministic_task);
      ParticleEvaluator eval(sampler, cfg.cem.particles, transform);
      a = planner.plan(eval, s, rng);
    } else {
      for (int j = 0; j < a.size(); ++j) {
        const auto& b = cfg.cem.action_bounds[static_cast<std::size_t>(j)];
        a[j] = b.lo + (b.hi - b.lo) * uniform01(rng);
      }
    }
    env.canonicalize_actions(a);
    ContinuousStep step = env.step(a);

    Transition tr{s, a, step.reward, step.next_state, step.done};
    Eigen::VectorXd input(s.size() + a.size());
    input << s, a;
    if (cfg.uses_world_model()) state.world_model.normalizer.observe(input);
    if (cfg.uses_task_models()) tm.posterior.normalizer.observe(input);
    tm.buffer.add(std::move(tr));

    out.episode_return += step.reward;
    ++out.steps;
    if (use_task) ++task_steps;
    s = step.next_state;
    if (step.done || step.truncated) break;
  }
  out.task_model_fraction = static_cast<double>(task_steps) / static_cast<double>(out.steps);
  ++tm.episodes;

  if (cfg.uses_task_models()) {
    const bool enough = cfg.variant == VblrlVariant::kSingleTask ||
                        static_cast<int>(tm.buffer.size()) >= cfg.warmup_transitions;
    if (enough) {
      for (int i = 0; i < cfg.task_train_steps; ++i) train_task_model(state, cfg, rng);
      tm.ready = true;
    }
  }
  if (cfg.uses_world_model()) {
    for (int i = 0; i < cfg.world_train_steps; ++i) train_world_model(state, cfg, rng);
  }
  return out;
}

void SelectionLog::record(double c_task, double c_world, bool chose_world) {
  ++decisions;
  if (chose_world) ++world_chosen;
  if (entries.size() < max_entries) entries.push_back({c_task, c_world, chose_world});
}

GatedEvaluator::GatedEvaluator(const ModelSampler& task, const ModelSampler& world,
                               BackwardStrategy strategy, ConfidenceParams params,
                               ActionTransform transform, SelectionLog* log)
    : task_(&task),
      world_(&world),
      strategy_(strategy),
      params_(params),
      transform_(std::move(transform)),
      log_(log) {
  if (params.particles < 1) throw std::invalid_argument("GatedEvaluator: particles must be >= 1");
}

void GatedEvaluator::begin_plan(int horizon, int population, Rng& rng) {
  Rng local(rng());
  noise_.draw(params_.particles, horizon, task_->state_dim(), population, local);
  task_nets_.clear();
  world_nets_.clear();
  for (int p = 0; p < params_.particles; ++p) {
    const auto seed = local();
    if (strategy_ != BackwardStrategy::kWorldOnly) {
      Rng r(seed);
      task_nets_.push_back(task_->draw(r));
    }
    if (strategy_ != BackwardStrategy::kTaskOnly) {
      Rng r(seed);
      world_nets_.push_back(world_->draw(r));
    }
  }
}

namespace {

// Per-column -sum_rows Var_p(mu) - alpha * sum_rows Var_p(sigma) over P
// batch predictions, unbiased.
Eigen::RowVectorXd batch_confidence(const std::vector<BatchPrediction>& preds, double alpha) {
  const std::size_t P = preds.size();
  const Eigen::Index n = preds[0].mean_reward.size();
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(n);
  if (P < 2) return c;
  const double denom = static_cast<double>(P) - 1.0;
  auto add = [&](auto get, double weight) {
    const Eigen::MatrixXd first = get(preds[0]);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.rows(), first.cols());
    Eigen::MatrixXd ss = sum;
    for (std::size_t p = 1; p < P; ++p) {
      const Eigen::MatrixXd d = get(preds[p]) - first;
      sum += d;
      ss += d.cwiseAbs2();
    }
    ss = (ss - sum.cwiseAbs2() / static_cast<double>(P)).cwiseMax(0.0);
    c -= weight * ss.colwise().sum() / denom;
  };
  add([](const BatchPrediction& b) -> Eigen::MatrixXd { return b.mean_delta; }, 1.0);
  add([](const BatchPrediction& b) -> Eigen::MatrixXd { return b.std_state; }, alpha);
  add([](const BatchPrediction& b) -> Eigen::MatrixXd { return b.mean_reward; }, 1.0);
  add([](const BatchPrediction& b) -> Eigen::MatrixXd { return b.std_reward; }, alpha);
  return c;
}

}  // namespace

void GatedEvaluator::evaluate(const Eigen::VectorXd& s0, const std::vector<Eigen::MatrixXd>& actions,
                              Eigen::VectorXd& scores) {
  const int horizon = static_cast<int>(actions.size());
  const Eigen::Index n = horizon > 0 ? actions[0].cols() : scores.size();
  scores = Eigen::VectorXd::Zero(n);
  if (horizon == 0) return;
  const int P = params_.particles;
  const bool need_task = strategy_ != BackwardStrategy::kWorldOnly;
  const bool need_world = strategy_ != BackwardStrategy::kTaskOnly;

  std::vector<Eigen::MatrixXd> states(P, s0.replicate(1, n));
  std::vector<Eigen::RowVectorXd> acc(P, Eigen::RowVectorXd::Zero(n));
  std::vector<BatchPrediction> tp(P), wp(P);
  Eigen::MatrixXd a;
  for (int t = 0; t < horizon; ++t) {
    a = actions[t];
    if (transform_) transform_(a);
    for (int p = 0; p < P; ++p) {
      if (need_task) task_nets_[p]->predict_batch(states[p], a, tp[p]);
      if (need_world) world_nets_[p]->predict_batch(states[p], a, wp[p]);
    }
    std::vector<bool> use_world(static_cast<std::size_t>(n), !need_task);
    if (strategy_ == BackwardStrategy::kCombined) {
      const Eigen::RowVectorXd ct = batch_confidence(tp, params_.alpha);
      const Eigen::RowVectorXd cw = batch_confidence(wp, params_.alpha);
      for (Eigen::Index i = 0; i < n; ++i) {
        use_world[i] = cw[i] > ct[i];
        if (log_ != nullptr) log_->record(ct[i], cw[i], use_world[i]);
      }
    }
    for (int p = 0; p < P; ++p) {
      BatchPrediction& chosen = need_task ? tp[p] : wp[p];
      if (strategy_ == BackwardStrategy::kCombined) {
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!use_world[i]) continue;
          chosen.mean_delta.col(i) = wp[p].mean_delta.col(i);
          chosen.std_state.col(i) = wp[p].std_state.col(i);
          chosen.mean_reward[i] = wp[p].mean_reward[i];
          chosen.std_reward[i] = wp[p].std_reward[i];
        }
      }
      acc[p] += chosen.mean_reward;
      states[p] += chosen.mean_delta + chosen.std_state.cwiseProduct(noise_.at(p, t).leftCols(n));
    }
  }
  for (int p = 0; p < P; ++p) scores += acc[p].transpose();
  scores /= static_cast<double>(P);
}

BackwardEpisode backward_episode(const LifelongState& state, const VblrlConfig& cfg,
                                 ContinuousEnv& env, int task_id, BackwardStrategy strategy,
                                 Rng& rng) {
  auto it = state.tasks.find(task_id);
  if (it == state.tasks.end()) {
    throw std::invalid_argument("backward_episode: unknown task " + std::to_string(task_id));
  }
  if (!cfg.uses_world_model()) strategy = BackwardStrategy::kTaskOnly;
  if (!cfg.uses_task_models()) strategy = BackwardStrategy::kWorldOnly;
  const TaskModel& tm = it->second;
  const bool deterministic_task = cfg.variant == VblrlVariant::kDeterministic;
  PosteriorSampler task_sampler(strategy == BackwardStrategy::kWorldOnly ? state.world_model
                                                                         : tm.posterior,
                                cfg.limits, deterministic_task);
  PosteriorSampler world_sampler(state.world_model, cfg.limits);
  const ActionTransform transform = [&env](Eigen::Ref<Eigen::MatrixXd> a) {
    env.canonicalize_actions(a);
  };
  ConfidenceParams params = cfg.confidence;
  params.particles = cfg.cem.particles;

  BackwardEpisode out;
  GatedEvaluator eval(task_sampler, world_sampler, strategy, params, transform, &out.log);
  CemPlanner planner(cfg.cem);
  Eigen::VectorXd s = env.reset(rng);
  while (true) {
    Eigen::VectorXd a = planner.plan(eval, s, rng);
    env.canonicalize_actions(a);
    const ContinuousStep step = env.step(a);
    out.episode_return += step.reward;
    ++out.steps;
    s = step.next_state;
    if (step.done || step.truncated) break;
  }
  return out;
}

}  // namespace lifelong
