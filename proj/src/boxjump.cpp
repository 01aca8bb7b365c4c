#include <cmath>
#include <stdexcept>

#include "lifelong/envs.hpp"

namespace lifelong {

void BoxJumpPhysics::validate() const {
  if (!(gravity > 0.0) || !(jump_impulse > 0.0) || !(speed > 0.0) || !(wall_x > 0.0) ||
      !(obstacle_width > 0.0) || !(obstacle_height > 0.0)) {
    throw std::invalid_argument("BoxJumpPhysics: physical constants must be positive");
  }
  if (obstacle_min > obstacle_max || obstacle_min < 1 || obstacle_max >= wall_x) {
    throw std::invalid_argument("BoxJumpPhysics: obstacle range must lie inside the world");
  }
  if (max_steps < 1) throw std::invalid_argument("BoxJumpPhysics: max_steps must be >= 1");
}

Eigen::VectorXd BoxJumpState::vec() const {
  Eigen::VectorXd v(4);
  v << x, y, vx, vy;
  return v;
}

BoxJumpStepResult boxjump_step(const BoxJumpParams& params, const BoxJumpPhysics& physics,
                               const BoxJumpState& s, BoxJumpAction a) {
  BoxJumpState next = s;
  next.vx = physics.speed;
  if (s.grounded() && a == BoxJumpAction::kJump) next.vy = physics.jump_impulse;

  next.x = s.x + next.vx;
  next.y = std::max(0.0, s.y + next.vy);
  next.vy = next.y > 0.0 ? next.vy - physics.gravity : 0.0;

  const double ox = static_cast<double>(params.obstacle_x);
  const bool hit = next.x >= ox && next.x < ox + physics.obstacle_width &&
                   next.y < physics.obstacle_height;
  const bool wall = next.x >= physics.wall_x;

  BoxJumpStepResult out;
  out.next = next;
  out.hit = hit;
  out.reached_wall = wall && !hit;
  out.reward = (out.reached_wall ? 1.0 : 0.0) - (hit ? 1.0 : 0.0) + (hit ? 0.0 : next.vx);
  out.done = hit || wall;
  return out;
}

BoxJumpParams sample_boxjump_params(Rng& rng, const BoxJumpPhysics& physics) {
  std::uniform_int_distribution<int> pos(physics.obstacle_min, physics.obstacle_max);
  return {pos(rng)};
}

BoxJumpEnv::BoxJumpEnv(BoxJumpParams params, BoxJumpPhysics physics)
    : params_(params), physics_(physics) {
  physics_.validate();
}

Eigen::VectorXd BoxJumpEnv::reset(Rng& rng) {
  (void)rng;
  state_ = BoxJumpState{};
  steps_ = 0;
  return state_.vec();
}

ContinuousStep BoxJumpEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != 1) throw std::invalid_argument("BoxJumpEnv::step: action must be 1-D");
  const auto res = boxjump_step(params_, physics_, state_, decode(action[0]));
  state_ = res.next;
  ++steps_;
  ContinuousStep out;
  out.next_state = state_.vec();
  out.reward = res.reward;
  out.done = res.done;
  out.truncated = !res.done && steps_ >= physics_.max_steps;
  return out;
}

void BoxJumpEnv::canonicalize_actions(Eigen::Ref<Eigen::MatrixXd> actions) const {
  actions = actions.unaryExpr([](double v) { return v > 0.0 ? 1.0 : -1.0; });
}

BoxJumpParams boxjump_task_params(std::uint64_t seed, int task_index,
                                  const BoxJumpPhysics& physics) {
  auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(task_index)),
                      stream_id("boxjump-task"));
  return sample_boxjump_params(rng, physics);
}

TaskFamily<ContinuousEnv> boxjump_family(std::uint64_t seed, int task_count,
                                         BoxJumpPhysics physics) {
  physics.validate();
  TaskFamily<ContinuousEnv> family;
  family.task_count = task_count;
  family.make = [seed, physics](int task_index) -> std::unique_ptr<ContinuousEnv> {
    return std::make_unique<BoxJumpEnv>(boxjump_task_params(seed, task_index, physics), physics);
  };
  return family;
}

void to_json(nlohmann::json& j, const BoxJumpPhysics& p) {
  j = nlohmann::json{{"gravity", p.gravity},
                     {"jump_impulse", p.jump_impulse},
                     {"speed", p.speed},
                     {"wall_x", p.wall_x},
                     {"obstacle_width", p.obstacle_width},
                     {"obstacle_height", p.obstacle_height},
                     {"obstacle_min", p.obstacle_min},
                     {"obstacle_max", p.obstacle_max},
                     {"max_steps", p.max_steps}};
}

void from_json(const nlohmann::json& j, BoxJumpPhysics& p) {
  BoxJumpPhysics out;
  out.gravity = j.value("gravity", out.gravity);
  out.jump_impulse = j.value("jump_impulse", out.jump_impulse);
  out.speed = j.value("speed", out.speed);
  out.wall_x = j.value("wall_x", out.wall_x);
  out.obstacle_width = j.value("obstacle_width", out.obstacle_width);
  out.obstacle_height = j.value("obstacle_height", out.obstacle_height);
  out.obstacle_min = j.value("obstacle_min", out.obstacle_min);
  out.obstacle_max = j.value("obstacle_max", out.obstacle_max);
  out.max_steps = j.value("max_steps", out.max_steps);
  out.validate();
  p = out;
}

}  // namespace lifelong
