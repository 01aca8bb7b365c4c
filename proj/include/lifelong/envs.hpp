#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lifelong/env.hpp"

namespace lifelong {

// ---------------------------------------------------------------------------
// Gridworld item searching
// ---------------------------------------------------------------------------

enum class Quadrant { kTopLeft = 0, kBottomLeft = 1, kTopRight = 2, kBottomRight = 3 };
enum class ObjectType { kBlueBall = 0, kGreenBox = 1, kPurpleBox = 2 };
enum class GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

inline constexpr int kRoomTypes = 4;
inline constexpr int kObjectTypes = 3;

/// P(room type | quadrant); rows are quadrants in Quadrant order, columns
/// room types 1..4.
inline constexpr std::array<std::array<double, kRoomTypes>, 4> kRoomTypeTable = {{
    {0.4, 0.0, 0.4, 0.2},  // top-left
    {0.0, 0.8, 0.0, 0.2},  // bottom-left
    {0.1, 0.0, 0.0, 0.9},  // top-right
    {0.0, 0.0, 0.8, 0.2},  // bottom-right
}};

/// P(object present | room type); columns blue ball, green box, purple box.
inline constexpr std::array<std::array<double, kObjectTypes>, kRoomTypes> kObjectTable = {{
    {0.0, 0.3, 0.0},
    {0.0, 0.2, 1.0},
    {0.6, 0.0, 0.0},
    {0.0, 0.0, 0.0},
}};

struct GridworldConfig {
  /// Odd side length; rooms are (grid_size - 1) / 2 cells square.
  int grid_size = 9;
  int max_steps = 21;

  int room_size() const { return (grid_size - 1) / 2; }
  int n_cells() const { return grid_size * grid_size; }
  void validate() const;
};

struct ObjectPlacement {
  ObjectType type = ObjectType::kBlueBall;
  int row = 0;
  int col = 0;
  bool operator==(const ObjectPlacement&) const = default;
};

/// Hidden parameter of one house: room type (1..4) per quadrant and the
/// sampled objects.
struct HouseParams {
  std::array<int, 4> room_types{};
  std::vector<ObjectPlacement> objects;
  bool operator==(const HouseParams&) const = default;
};

HouseParams sample_house(Rng& rng, const GridworldConfig& config = {});

/// Cell layout: four rooms separated by one wall row and one wall column,
/// an open hub at the centre and one doorway per adjacent room pair, each
/// adjoining the hub.
bool is_open_cell(const GridworldConfig& config, int row, int col);
Quadrant quadrant_of(const GridworldConfig& config, int row, int col);

struct GridState {
  int row = 0;
  int col = 0;
  ObjectType target = ObjectType::kBlueBall;
};

struct GridStepResult {
  GridState next;
  double reward = 0.0;
  bool done = false;
};

/// Deterministic move with wall blocking. Reward 1 (and done) when the agent
/// stands on, or moves onto, a cell holding the target object type.
GridStepResult gridworld_step(const HouseParams& house, const GridworldConfig& config,
                              const GridState& s, GridAction a);

/// Tabular view: state = cell index, plus one absorbing terminal state with
/// index n_cells() entered when the target is found.
class GridworldEnv final : public TabularEnv {
 public:
  GridworldEnv(HouseParams house, ObjectType target, GridworldConfig config = {});

  int n_states() const override { return config_.n_cells() + 1; }
  int n_actions() const override { return 4; }
  RewardSupport reward_support() const override { return RewardSupport{{0.0, 1.0}}; }
  std::vector<int> absorbing_states() const override { return {terminal_state()}; }

  int reset(Rng& rng) override;
  TabularStep step(int action) override;

  int terminal_state() const { return config_.n_cells(); }
  int start_state() const;
  int encode(int row, int col) const { return row * config_.grid_size + col; }
  const HouseParams& house() const { return house_; }
  ObjectType target() const { return target_; }
  const GridworldConfig& config() const { return config_; }

 private:
  HouseParams house_;
  ObjectType target_;
  GridworldConfig config_;
  GridState state_;
  int steps_ = 0;
  bool finished_ = true;
};

/// Houses and targets for task i derive from (seed, i).
TaskFamily<TabularEnv> gridworld_family(std::uint64_t seed, int task_count,
                                        GridworldConfig config = {});

// ---------------------------------------------------------------------------
// Box jumping
// ---------------------------------------------------------------------------

struct BoxJumpPhysics {
  double gravity = 1.0;
  double jump_impulse = 3.0;
  double speed = 1.0;
  double wall_x = 40.0;
  double obstacle_width = 1.0;
  double obstacle_height = 2.0;
  int obstacle_min = 15;
  int obstacle_max = 33;
  int max_steps = 60;

  void validate() const;
  bool operator==(const BoxJumpPhysics&) const = default;
};

struct BoxJumpParams {
  int obstacle_x = 20;
  bool operator==(const BoxJumpParams&) const = default;
};

struct BoxJumpState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  bool grounded() const { return y <= 0.0 && vy == 0.0; }
  Eigen::VectorXd vec() const;
  bool operator==(const BoxJumpState&) const = default;
};

enum class BoxJumpAction { kRight = 0, kJump = 1 };

struct BoxJumpStepResult {
  BoxJumpState next;
  double reward = 0.0;
  bool done = false;
  bool hit = false;
  bool reached_wall = false;
};

/// Unit-timestep kinematics. Moving always advances x by `speed`; a jump
/// issued while grounded sets vy to the impulse, a jump while airborne acts
/// like `right`. Reward is 1{reach wall} - 1{hit} + vx * 1{not hit}.
BoxJumpStepResult boxjump_step(const BoxJumpParams& params, const BoxJumpPhysics& physics,
                               const BoxJumpState& s, BoxJumpAction a);

BoxJumpParams sample_boxjump_params(Rng& rng, const BoxJumpPhysics& physics = {});

/// One continuous action in [-1, 1]; positive means jump. Canonical action
/// encoding fed to models is -1 (right) or +1 (jump).
class BoxJumpEnv final : public ContinuousEnv {
 public:
  explicit BoxJumpEnv(BoxJumpParams params, BoxJumpPhysics physics = {});

  int state_dim() const override { return 4; }
  int action_dim() const override { return 1; }
  std::vector<ActionBound> action_bounds() const override { return {{-1.0, 1.0}}; }

  Eigen::VectorXd reset(Rng& rng) override;
  ContinuousStep step(const Eigen::VectorXd& action) override;
  void canonicalize_actions(Eigen::Ref<Eigen::MatrixXd> actions) const override;

  const BoxJumpParams& params() const { return params_; }
  const BoxJumpPhysics& physics() const { return physics_; }
  const BoxJumpState& state() const { return state_; }

  static BoxJumpAction decode(double raw) {
    return raw > 0.0 ? BoxJumpAction::kJump : BoxJumpAction::kRight;
  }

 private:
  BoxJumpParams params_;
  BoxJumpPhysics physics_;
  BoxJumpState state_;
  int steps_ = 0;
};

TaskFamily<ContinuousEnv> boxjump_family(std::uint64_t seed, int task_count,
                                         BoxJumpPhysics physics = {});

/// Obstacle position of task i in boxjump_family(seed, ...).
BoxJumpParams boxjump_task_params(std::uint64_t seed, int task_index,
                                  const BoxJumpPhysics& physics = {});

/// House and target of task i in gridworld_family(seed, ...).
std::pair<HouseParams, ObjectType> gridworld_task_params(std::uint64_t seed, int task_index,
                                                         const GridworldConfig& config = {});

void to_json(nlohmann::json& j, const HouseParams& h);
void to_json(nlohmann::json& j, const BoxJumpPhysics& p);
void from_json(const nlohmann::json& j, BoxJumpPhysics& p);

}  // namespace lifelong
