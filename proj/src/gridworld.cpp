#include <algorithm>
#include <stdexcept>

#include "lifelong/envs.hpp"

namespace lifelong {

void GridworldConfig::validate() const {
  if (grid_size < 5 || grid_size % 2 == 0) {
    throw std::invalid_argument("GridworldConfig: grid_size must be odd and at least 5");
  }
  if (max_steps < 1) throw std::invalid_argument("GridworldConfig: max_steps must be >= 1");
}

bool is_open_cell(const GridworldConfig& config, int row, int col) {
  const int n = config.grid_size;
  const int m = config.room_size();
  if (row < 0 || row >= n || col < 0 || col >= n) return false;
  if (row != m && col != m) return true;
  if (row == m && col == m) return true;  // hub
  // Doorways adjoining the hub.
  return (row == m - 1 && col == m) || (row == m + 1 && col == m) ||
         (row == m && col == m - 1) || (row == m && col == m + 1);
}

Quadrant quadrant_of(const GridworldConfig& config, int row, int col) {
  const int m = config.room_size();
  const bool top = row < m;
  const bool left = col < m;
  if (top) return left ? Quadrant::kTopLeft : Quadrant::kTopRight;
  return left ? Quadrant::kBottomLeft : Quadrant::kBottomRight;
}

namespace {

int draw_categorical(const std::array<double, kRoomTypes>& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int i = 0; i < kRoomTypes; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the cumulative sum: pick the last nonzero entry.
  for (int i = kRoomTypes - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  return kRoomTypes - 1;
}

// Top-left cell of the room in quadrant q.
std::pair<int, int> room_origin(const GridworldConfig& config, Quadrant q) {
  const int m = config.room_size();
  switch (q) {
    case Quadrant::kTopLeft: return {0, 0};
    case Quadrant::kBottomLeft: return {m + 1, 0};
    case Quadrant::kTopRight: return {0, m + 1};
    case Quadrant::kBottomRight: return {m + 1, m + 1};
  }
  return {0, 0};
}

}  // namespace

HouseParams sample_house(Rng& rng, const GridworldConfig& config) {
  config.validate();
  const int m = config.room_size();
  HouseParams house;
  for (int q = 0; q < 4; ++q) {
    house.room_types[q] = draw_categorical(kRoomTypeTable[q], rng) + 1;
  }
  for (int q = 0; q < 4; ++q) {
    const auto& presence = kObjectTable[house.room_types[q] - 1];
    const auto [r0, c0] = room_origin(config, static_cast<Quadrant>(q));
    std::vector<int> taken;
    for (int o = 0; o < kObjectTypes; ++o) {
      if (presence[o] <= 0.0) continue;
      if (!(uniform01(rng) < presence[o])) continue;
      // Uniform cell inside the room, distinct from objects already placed.
      std::uniform_int_distribution<int> cell(0, m * m - 1);
      int idx = cell(rng);
      while (std::find(taken.begin(), taken.end(), idx) != taken.end()) idx = cell(rng);
      taken.push_back(idx);
      house.objects.push_back({static_cast<ObjectType>(o), r0 + idx / m, c0 + idx % m});
    }
  }
  return house;
}

namespace {

bool holds_target(const HouseParams& house, int row, int col, ObjectType target) {
  for (const auto& obj : house.objects) {
    if (obj.type == target && obj.row == row && obj.col == col) return true;
  }
  return false;
}

}  // namespace

GridStepResult gridworld_step(const HouseParams& house, const GridworldConfig& config,
                              const GridState& s, GridAction a) {
  GridStepResult out{s, 0.0, false};
  if (holds_target(house, s.row, s.col, s.target)) {
    out.reward = 1.0;
    out.done = true;
    return out;
  }
  int row = s.row;
  int col = s.col;
  switch (a) {
    case GridAction::kUp: --row; break;
    case GridAction::kDown: ++row; break;
    case GridAction::kLeft: --col; break;
    case GridAction::kRight: ++col; break;
  }
  if (is_open_cell(config, row, col)) {
    out.next.row = row;
    out.next.col = col;
  }
  if (holds_target(house, out.next.row, out.next.col, s.target)) {
    out.reward = 1.0;
    out.done = true;
  }
  return out;
}

GridworldEnv::GridworldEnv(HouseParams house, ObjectType target, GridworldConfig config)
    : house_(std::move(house)), target_(target), config_(config) {
  config_.validate();
}

int GridworldEnv::start_state() const {
  const int m = config_.room_size();
  return encode(m, m);
}

int GridworldEnv::reset(Rng& rng) {
  (void)rng;
  const int m = config_.room_size();
  state_ = {m, m, target_};
  steps_ = 0;
  finished_ = false;
  return start_state();
}

TabularStep GridworldEnv::step(int action) {
  if (finished_) throw std::logic_error("GridworldEnv::step called on a finished episode");
  if (action < 0 || action >= 4) throw std::out_of_range("GridworldEnv::step: bad action");
  const auto res = gridworld_step(house_, config_, state_, static_cast<GridAction>(action));
  state_ = res.next;
  ++steps_;
  TabularStep out;
  out.reward = res.reward;
  out.done = res.done;
  out.next_state = res.done ? terminal_state() : encode(state_.row, state_.col);
  out.truncated = !res.done && steps_ >= config_.max_steps;
  finished_ = out.done || out.truncated;
  return out;
}

std::pair<HouseParams, ObjectType> gridworld_task_params(std::uint64_t seed, int task_index,
                                                         const GridworldConfig& config) {
  auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(task_index)),
                      stream_id("gridworld-task"));
  HouseParams house = sample_house(rng, config);
  std::uniform_int_distribution<int> pick(0, kObjectTypes - 1);
  return {std::move(house), static_cast<ObjectType>(pick(rng))};
}

TaskFamily<TabularEnv> gridworld_family(std::uint64_t seed, int task_count,
                                        GridworldConfig config) {
  config.validate();
  TaskFamily<TabularEnv> family;
  family.task_count = task_count;
  family.make = [seed, config](int task_index) -> std::unique_ptr<TabularEnv> {
    auto [house, target] = gridworld_task_params(seed, task_index, config);
    return std::make_unique<GridworldEnv>(std::move(house), target, config);
  };
  return family;
}

void to_json(nlohmann::json& j, const HouseParams& h) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : h.objects) {
    objects.push_back({{"type", static_cast<int>(o.type)}, {"row", o.row}, {"col", o.col}});
  }
  j = nlohmann::json{{"room_types", h.room_types}, {"objects", std::move(objects)}};
}

}  // namespace lifelong
