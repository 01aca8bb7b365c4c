#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lifelong/blrl.hpp"
#include "lifelong/envs.hpp"
#include "lifelong/vblrl.hpp"

namespace lifelong {

enum class Algorithm {
  kBlrl,
  kBossFixedPrior,
  kVblrl,
  kVblrlDeterministic,
  kSingleTaskMbrl,
  kWorldModelOnly,
};

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
bool is_tabular(Algorithm a);

/// Validation failure. `field` is the dotted path of the offending key and
/// `line` its 1-based line in the source file when known (0 otherwise).
struct ConfigError : std::runtime_error {
  ConfigError(std::string field, const std::string& message, int line = 0);
  std::string field;
  int line = 0;
};

struct EnvSpec {
  std::string name = "gridworld";  // "gridworld" | "boxjump"
  int grid_size = 9;
  BoxJumpPhysics physics;
  /// Fixed task-sequence seed. Unset means derived from each run seed.
  std::optional<std::uint64_t> seed;
};

struct BackwardSettings {
  bool enabled = false;
  int episodes = 1;
  BackwardStrategy strategy = BackwardStrategy::kCombined;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::kBlrl;
  EnvSpec env;
  std::vector<std::uint64_t> seeds;
  int task_count = 0;
  int episodes_per_task = 0;
  int steps_per_episode = 0;
  std::string output_dir;

  BlrlConfig blrl;
  VblrlConfig vblrl;  // bnn and cem blocks
  BackwardSettings backward;
  bool checkpoint_tasks = true;
  bool checkpoint_buffers = true;
  bool parallel_seeds = true;
  bool timing = false;
};

/// Exhaustive validation; throws ConfigError naming the field.
RunConfig parse_run_config(const nlohmann::json& j);
/// Reads and validates a file. JSON syntax errors and validation errors are
/// reported with the line number.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_json(const RunConfig& cfg);

/// Output directory with LIFELONG_OUTPUT_ROOT applied to relative paths.
std::filesystem::path resolve_output_dir(const std::string& dir);

struct MetricRow {
  std::string phase;  // start | train | back
  int task_index = 0;
  int episode_index = 0;
  std::uint64_t seed = 0;
  double episode_return = 0.0;
  int steps = 0;
  double extra = 0.0;  // resample count, task-model fraction or world selection fraction
};

inline constexpr const char* kMetricsHeader = "phase,task_index,episode_index,seed,return,steps,extra";
std::string format_metric_row(const MetricRow& r);
std::string metrics_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_metrics_csv(const std::string& text);

struct TimingRow {
  std::uint64_t seed = 0;
  int task_index = 0;
  std::int64_t wall_ns = 0;
};

struct SeedResult {
  std::vector<MetricRow> rows;
  std::vector<TimingRow> timing;
  /// Kept for neural runs so callers can evaluate backward transfer in memory.
  std::optional<LifelongState> state;
  std::string error;  // non-empty after a divergence; rows hold the partial run
};

std::uint64_t family_seed(const RunConfig& cfg, std::uint64_t run_seed);
VblrlConfig effective_vblrl_config(const RunConfig& cfg);

/// One seed of a run. Artifacts go to `seed_dir` unless it is empty.
SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed,
                    const std::filesystem::path& seed_dir = {}, bool keep_state = false);

struct BackwardRequest {
  std::optional<std::vector<int>> tasks;  // unset means every task in the state
  BackwardStrategy strategy = BackwardStrategy::kCombined;
  double alpha = 1.0;
  int episodes = 1;
};

/// Back-phase rows for the listed tasks. Planning randomness depends on
/// (seed, task, episode) only, so strategies are compared on shared draws.
std::vector<MetricRow> run_backward(const RunConfig& cfg, std::uint64_t seed,
                                    const LifelongState& state, const BackwardRequest& req,
                                    SelectionLog* log = nullptr);

/// Neural lifelong state reloaded from a seed directory's checkpoints.
LifelongState load_lifelong_state(const std::filesystem::path& seed_dir, const VblrlConfig& cfg,
                                  const std::vector<int>& tasks);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // across seeds, n - 1 denominator, 0 for one seed
  std::vector<double> per_seed;
};

struct RunSummary {
  MetricSummary start, train, back;
  bool has_back = false;
};

/// Start = first-episode return per task, Train = mean of the final 10%
/// (at least one) of each task's episodes, Back = mean back-phase return.
/// Each is averaged over tasks per seed, then summarised across seeds.
RunSummary summarize(const std::vector<MetricRow>& rows);

// Command entry points. Messages go to `err`; return value is the exit code.
int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
/// `tasks` unset means every task; an empty list evaluates nothing.
int cmd_backward(const std::filesystem::path& run_dir, const std::optional<std::vector<int>>& tasks,
                 BackwardStrategy strategy, std::optional<double> alpha,
                 const std::string& metrics_name, std::ostream& out, std::ostream& err);
int cmd_coin_table(double epsilon, double delta, int total, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

}  // namespace lifelong
