#include <cmath>
#include <vector>

#include "doctest.h"
#include "lifelong/envs.hpp"
#include "lifelong/vblrl.hpp"

using namespace lifelong;

namespace {

// Reward and delta are a per-draw constant offset, drawn with `spread`.
class OffsetNet final : public DynamicsModel {
 public:
  explicit OffsetNet(double offset) : offset_(offset) {}
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  void predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                     BatchPrediction& out) const override {
    const auto n = states.cols();
    out.mean_delta = actions.array() + offset_;
    out.std_state = Eigen::MatrixXd::Constant(1, n, 0.1);
    out.mean_reward = (actions.array() + offset_).matrix();
    out.std_reward = Eigen::RowVectorXd::Constant(n, 0.1);
  }

 private:
  double offset_;
};

class OffsetSampler final : public ModelSampler {
 public:
  explicit OffsetSampler(double spread) : spread_(spread) {}
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  std::unique_ptr<DynamicsModel> draw(Rng& rng) const override {
    return std::make_unique<OffsetNet>(spread_ * standard_normal(rng));
  }

 private:
  double spread_;
};

VblrlConfig tiny_config(VblrlVariant variant) {
  VblrlConfig cfg;
  cfg.variant = variant;
  cfg.arch.state_dim = 4;
  cfg.arch.action_dim = 1;
  cfg.arch.hidden = {8};
  cfg.cem.horizon = 3;
  cfg.cem.population = 12;
  cfg.cem.n_elites = 3;
  cfg.cem.particles = 3;
  cfg.cem.iterations = 1;
  cfg.cem.action_bounds = {{-1.0, 1.0}};
  cfg.task_batch = 16;
  cfg.world_batch_tasks = 2;
  cfg.world_batch_per_task = 8;
  cfg.task_train_steps = 2;
  cfg.world_train_steps = 2;
  cfg.warmup_transitions = 10;
  cfg.init_sigma = 0.05;
  return cfg;
}

BoxJumpPhysics short_physics() {
  BoxJumpPhysics p;
  p.max_steps = 12;
  return p;
}

// Two tasks of forward learning with a couple of episodes each.
LifelongState train_two_tasks(const VblrlConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  auto st = make_lifelong_state(cfg, rng);
  for (int task = 0; task < 2; ++task) {
    BoxJumpEnv env(BoxJumpParams{15 + task}, short_physics());
    begin_task(st, cfg, task, rng);
    for (int ep = 0; ep < 2; ++ep) forward_episode(st, cfg, env, rng);
    end_task(st);
  }
  return st;
}

}  // namespace

TEST_CASE("confidence matches the hand computation") {
  std::vector<BNNPrediction> preds(4);
  const double mu[4] = {0.1, 0.2, 0.3, 0.4};
  for (int p = 0; p < 4; ++p) {
    preds[p].mean_reward = mu[p];
    preds[p].std_reward = 0.5;
    preds[p].mean_next_state = Eigen::VectorXd::Zero(2);
    preds[p].std_next_state = Eigen::VectorXd::Ones(2);
  }
  const ConfidenceParams params{1.0, 4};
  CHECK(confidence(preds, params, ConfidenceTarget::kReward) == doctest::Approx(-0.05 / 3.0));
  CHECK(confidence(preds, params) == doctest::Approx(-0.05 / 3.0));
  CHECK(confidence(preds, params, ConfidenceTarget::kState) == 0.0);
}

TEST_CASE("confidence is nonpositive and zero only for coinciding predictions") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BNNPrediction> preds(5);
    for (auto& p : preds) {
      p.mean_reward = standard_normal(rng);
      p.std_reward = uniform01(rng) + 0.1;
      p.mean_next_state = Eigen::VectorXd::Constant(3, standard_normal(rng));
      p.std_next_state = Eigen::VectorXd::Constant(3, uniform01(rng) + 0.1);
    }
    CHECK(confidence(preds, {0.7, 5}) < 0.0);
    for (auto& p : preds) p = preds[0];
    CHECK(confidence(preds, {0.7, 5}) == 0.0);
  }
  std::vector<BNNPrediction> one(1);
  CHECK_THROWS(confidence(one, {}));
}

TEST_CASE("gating picks the confidence argmax with ties going to the task model") {
  const OffsetSampler calm(0.01);
  const OffsetSampler wild(5.0);
  Rng rng(7);
  std::vector<Eigen::MatrixXd> actions(4, Eigen::MatrixXd::Random(1, 6));
  Eigen::VectorXd scores;

  SelectionLog log;
  GatedEvaluator prefers_world(wild, calm, BackwardStrategy::kCombined, {1.0, 6}, {}, &log);
  prefers_world.begin_plan(4, 6, rng);
  prefers_world.evaluate(Eigen::VectorXd::Zero(1), actions, scores);
  CHECK(log.decisions == 24);
  CHECK(log.world_fraction() == 1.0);

  SelectionLog tie;
  GatedEvaluator same(calm, calm, BackwardStrategy::kCombined, {1.0, 6}, {}, &tie);
  same.begin_plan(4, 6, rng);
  same.evaluate(Eigen::VectorXd::Zero(1), actions, scores);
  CHECK(tie.world_chosen == 0);
  for (const auto& e : tie.entries) CHECK(e.c_task == e.c_world);

  SelectionLog mixed;
  const OffsetSampler mid(0.5);
  GatedEvaluator m(mid, mid, BackwardStrategy::kCombined, {1.0, 2}, {}, &mixed);
  for (int rep = 0; rep < 10; ++rep) {
    m.begin_plan(4, 6, rng);
    m.evaluate(Eigen::VectorXd::Zero(1), actions, scores);
  }
  for (const auto& e : mixed.entries) CHECK(e.chose_world == (e.c_world > e.c_task));
}

TEST_CASE("identical task and world samplers give identical scores") {
  const OffsetSampler s(0.3);
  std::vector<Eigen::MatrixXd> actions(3, Eigen::MatrixXd::Random(1, 5));
  Eigen::VectorXd combined, task_only, world_only;
  for (auto [strategy, out] : {std::pair{BackwardStrategy::kCombined, &combined},
                               std::pair{BackwardStrategy::kTaskOnly, &task_only},
                               std::pair{BackwardStrategy::kWorldOnly, &world_only}}) {
    GatedEvaluator e(s, s, strategy, {1.0, 4});
    Rng rng(11);
    e.begin_plan(3, 5, rng);
    e.evaluate(Eigen::VectorXd::Zero(1), actions, *out);
  }
  CHECK(combined == task_only);
  CHECK(world_only == task_only);
}

TEST_CASE("untrained copy of the world model: combined equals task-only") {
  const auto cfg = tiny_config(VblrlVariant::kVblrl);
  Rng rng(2);
  auto st = make_lifelong_state(cfg, rng);
  begin_task(st, cfg, 0, rng);
  end_task(st);
  BoxJumpEnv env(BoxJumpParams{20}, short_physics());
  Rng r1(9), r2(9);
  const auto a = backward_episode(st, cfg, env, 0, BackwardStrategy::kCombined, r1);
  const auto b = backward_episode(st, cfg, env, 0, BackwardStrategy::kTaskOnly, r2);
  CHECK(a.episode_return == b.episode_return);
  CHECK(a.steps == b.steps);
  CHECK(a.log.world_chosen == 0);
}

TEST_CASE("backward evaluation leaves every model untouched") {
  const auto cfg = tiny_config(VblrlVariant::kVblrl);
  const auto st = train_two_tasks(cfg, 3);
  const auto before = st;
  BoxJumpEnv env(BoxJumpParams{15}, short_physics());
  Rng rng(4);
  for (auto strategy : {BackwardStrategy::kCombined, BackwardStrategy::kTaskOnly, BackwardStrategy::kWorldOnly}) {
    backward_episode(st, cfg, env, 0, strategy, rng);
  }
  CHECK(st.world_model == before.world_model);
  for (const auto& [id, tm] : st.tasks) {
    CHECK(tm.posterior == before.tasks.at(id).posterior);
    CHECK(tm.buffer.size() == before.tasks.at(id).buffer.size());
  }
  CHECK_THROWS(backward_episode(st, cfg, env, 7, BackwardStrategy::kCombined, rng));
}

TEST_CASE("finished task models are frozen by later training") {
  const auto cfg = tiny_config(VblrlVariant::kVblrl);
  Rng rng(6);
  auto st = make_lifelong_state(cfg, rng);
  BoxJumpEnv env0(BoxJumpParams{18}, short_physics());
  begin_task(st, cfg, 0, rng);
  for (int ep = 0; ep < 2; ++ep) forward_episode(st, cfg, env0, rng);
  end_task(st);
  const auto frozen = st.tasks.at(0).posterior;
  BoxJumpEnv env1(BoxJumpParams{25}, short_physics());
  begin_task(st, cfg, 1, rng);
  for (int ep = 0; ep < 3; ++ep) forward_episode(st, cfg, env1, rng);
  end_task(st);
  CHECK(st.tasks.at(0).posterior == frozen);
  CHECK_FALSE(st.tasks.at(1).posterior == frozen);
}

TEST_CASE("task models start from the world model") {
  const auto cfg = tiny_config(VblrlVariant::kVblrl);
  Rng rng(8);
  auto st = make_lifelong_state(cfg, rng);
  begin_task(st, cfg, 0, rng);
  CHECK(st.tasks.at(0).posterior == st.world_model);
  CHECK(st.tasks.at(0).prior == st.world_model);
  CHECK_THROWS(begin_task(st, cfg, 0, rng));
}

TEST_CASE("single-task variant ignores the world model") {
  const auto cfg = tiny_config(VblrlVariant::kSingleTask);
  Rng rng(8);
  auto st = make_lifelong_state(cfg, rng);
  CHECK(st.world_model.size() == 0);
  begin_task(st, cfg, 0, rng);
  CHECK(st.tasks.at(0).posterior.size() == cfg.arch.parameter_count());
  BoxJumpEnv env(BoxJumpParams{20}, short_physics());
  const auto ep = forward_episode(st, cfg, env, rng);
  CHECK(ep.task_model_fraction == 1.0);
  CHECK(st.world_model.size() == 0);
}

TEST_CASE("world-only variant keeps no task posterior") {
  const auto cfg = tiny_config(VblrlVariant::kWorldOnly);
  const auto st = train_two_tasks(cfg, 10);
  for (const auto& [id, tm] : st.tasks) {
    CHECK(tm.posterior.size() == 0);
    CHECK(tm.buffer.size() > 0);
  }
  BoxJumpEnv env(BoxJumpParams{15}, short_physics());
  Rng r1(1), r2(1);
  // Every strategy collapses onto the world model.
  const auto a = backward_episode(st, cfg, env, 0, BackwardStrategy::kCombined, r1);
  const auto b = backward_episode(st, cfg, env, 0, BackwardStrategy::kWorldOnly, r2);
  CHECK(a.episode_return == b.episode_return);
}

TEST_CASE("deterministic variant never moves task rho") {
  const auto cfg = tiny_config(VblrlVariant::kDeterministic);
  Rng rng(12);
  auto st = make_lifelong_state(cfg, rng);
  begin_task(st, cfg, 0, rng);
  const Eigen::VectorXd rho0 = st.tasks.at(0).posterior.rho;
  const Eigen::VectorXd mu0 = st.tasks.at(0).posterior.mu;
  BoxJumpEnv env(BoxJumpParams{20}, short_physics());
  for (int ep = 0; ep < 2; ++ep) forward_episode(st, cfg, env, rng);
  CHECK(st.tasks.at(0).posterior.rho == rho0);
  CHECK_FALSE(st.tasks.at(0).posterior.mu == mu0);
}

TEST_CASE("world batches draw from visited tasks") {
  auto cfg = tiny_config(VblrlVariant::kVblrl);
  Rng rng(13);
  auto st = make_lifelong_state(cfg, rng);
  CHECK_THROWS(train_world_model(st, cfg, rng));
  begin_task(st, cfg, 0, rng);
  CHECK_THROWS(train_world_model(st, cfg, rng));
  Transition t;
  t.state = Eigen::VectorXd::Zero(4);
  t.action = Eigen::VectorXd::Ones(1);
  t.next_state = Eigen::VectorXd::Ones(4);
  t.reward = 1.0;
  st.tasks.at(0).buffer.add(t);
  const auto res = train_world_model(st, cfg, rng);
  CHECK(std::isfinite(res.loss));
}

TEST_CASE("strategy and variant names round trip") {
  for (auto s : {BackwardStrategy::kCombined, BackwardStrategy::kTaskOnly, BackwardStrategy::kWorldOnly}) {
    CHECK(parse_strategy(strategy_name(s)) == s);
  }
  CHECK(parse_strategy("task") == BackwardStrategy::kTaskOnly);
  CHECK(parse_strategy("world-only") == BackwardStrategy::kWorldOnly);
  CHECK_THROWS(parse_strategy("both"));
  for (auto v : {VblrlVariant::kVblrl, VblrlVariant::kDeterministic, VblrlVariant::kSingleTask, VblrlVariant::kWorldOnly}) {
    CHECK(parse_variant(variant_name(v)) == v);
  }
}
