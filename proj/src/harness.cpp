#include "lifelong/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "lifelong/coin.hpp"

namespace lifelong {

namespace fs = std::filesystem;
using nlohmann::json;

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kBlrl:
      return "blrl";
    case Algorithm::kBossFixedPrior:
      return "boss-fixed-prior";
    case Algorithm::kVblrl:
      return "vblrl";
    case Algorithm::kVblrlDeterministic:
      return "vblrl-deterministic";
    case Algorithm::kSingleTaskMbrl:
      return "single-task-mbrl";
    case Algorithm::kWorldModelOnly:
      return "world-model-only";
  }
  return "blrl";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kBlrl, Algorithm::kBossFixedPrior, Algorithm::kVblrl,
                      Algorithm::kVblrlDeterministic, Algorithm::kSingleTaskMbrl,
                      Algorithm::kWorldModelOnly}) {
    if (algorithm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool is_tabular(Algorithm a) { return a == Algorithm::kBlrl || a == Algorithm::kBossFixedPrior; }

namespace {

VblrlVariant variant_of(Algorithm a) {
  switch (a) {
    case Algorithm::kVblrlDeterministic:
      return VblrlVariant::kDeterministic;
    case Algorithm::kSingleTaskMbrl:
      return VblrlVariant::kSingleTask;
    case Algorithm::kWorldModelOnly:
      return VblrlVariant::kWorldOnly;
    default:
      return VblrlVariant::kVblrl;
  }
}

std::string message_with_line(const std::string& field, const std::string& message, int line) {
  std::string out = "config";
  if (line > 0) out += ":" + std::to_string(line);
  if (!field.empty()) out += ": field '" + field + "'";
  return out + ": " + message;
}

}  // namespace

ConfigError::ConfigError(std::string f, const std::string& message, int l)
    : std::runtime_error(message_with_line(f, message, l)), field(std::move(f)), line(l) {}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

/// Typed access to one JSON object that remembers which keys were read so
/// leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw(const std::string& key, bool required) {
    used_.insert(key);
    if (!j_.contains(key)) {
      if (required) throw ConfigError(field(key), "required field is missing");
      return null_;
    }
    return j_.at(key);
  }

  std::optional<long long> integer(const std::string& key, bool required, long long min_value) {
    const json& v = raw(key, required);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    const auto x = v.get<long long>();
    if (x < min_value) {
      throw ConfigError(field(key), "must be >= " + std::to_string(min_value));
    }
    return x;
  }

  int int_or(const std::string& key, int def, long long min_value) {
    const auto v = integer(key, false, min_value);
    return v ? static_cast<int>(*v) : def;
  }

  double number_or(const std::string& key, double def, double min_value, bool strict = false) {
    const json& v = raw(key, false);
    if (v.is_null()) return def;
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || (strict ? !(x > min_value) : !(x >= min_value))) {
      std::ostringstream msg;
      msg << "must be " << (strict ? "> " : ">= ") << min_value;
      throw ConfigError(field(key), msg.str());
    }
    return x;
  }

  bool bool_or(const std::string& key, bool def) {
    const json& v = raw(key, false);
    if (v.is_null()) return def;
    if (!v.is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v.get<bool>();
  }

  std::optional<std::string> string(const std::string& key, bool required) {
    const json& v = raw(key, required);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw ConfigError(field(key), "must be a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (used_.count(k) == 0) throw ConfigError(field(k), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
  json null_;
};

std::vector<double> positive_list(ObjectReader& r, const std::string& key) {
  const json& v = r.raw(key, false);
  if (v.is_null()) return {};
  if (!v.is_array()) throw ConfigError(r.field(key), "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number() || !(e.get<double>() > 0.0)) {
      throw ConfigError(r.field(key), "entries must be positive numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

void parse_env(const json& j, RunConfig& cfg) {
  ObjectReader r(j, "env");
  const auto name = r.string("env", true);
  if (*name != "gridworld" && *name != "boxjump") {
    throw ConfigError("env.env", "must be \"gridworld\" or \"boxjump\"");
  }
  cfg.env.name = *name;
  cfg.env.grid_size = r.int_or("grid_size", 9, 3);
  if (cfg.env.grid_size % 2 == 0) throw ConfigError("env.grid_size", "must be odd");
  if (const auto s = r.integer("seed", false, 0)) cfg.env.seed = static_cast<std::uint64_t>(*s);
  const json& phys = r.raw("physics", false);
  if (!phys.is_null()) {
    ObjectReader p(phys, "env.physics");
    BoxJumpPhysics ph;
    ph.gravity = p.number_or("gravity", ph.gravity, 0.0, true);
    ph.jump_impulse = p.number_or("jump_impulse", ph.jump_impulse, 0.0, true);
    ph.speed = p.number_or("speed", ph.speed, 0.0, true);
    ph.wall_x = p.number_or("wall_x", ph.wall_x, 0.0, true);
    ph.obstacle_width = p.number_or("obstacle_width", ph.obstacle_width, 0.0, true);
    ph.obstacle_height = p.number_or("obstacle_height", ph.obstacle_height, 0.0, true);
    ph.obstacle_min = p.int_or("obstacle_min", ph.obstacle_min, 1);
    ph.obstacle_max = p.int_or("obstacle_max", ph.obstacle_max, 1);
    p.integer("max_steps", false, 1);  // superseded by steps_per_episode
    p.finish();
    try {
      ph.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("env.physics", e.what());
    }
    cfg.env.physics = ph;
  }
  r.finish();
}

void parse_blrl(const json& j, BlrlConfig& b) {
  ObjectReader r(j, "blrl");
  b.K = r.int_or("K", b.K, 1);
  b.B = r.int_or("B", b.B, 1);
  b.gamma = r.number_or("gamma", b.gamma, 0.0);
  if (!(b.gamma < 1.0)) throw ConfigError("blrl.gamma", "must be < 1");
  b.vi_tolerance = r.number_or("vi_tolerance", b.vi_tolerance, 0.0, true);
  b.prior_concentration = r.number_or("prior_concentration", b.prior_concentration, 0.0, true);
  b.kappa = r.number_or("kappa", b.kappa, 0.0, true);
  r.finish();
}

void parse_bnn(const json& j, VblrlConfig& v) {
  ObjectReader r(j, "bnn");
  const json& hidden = r.raw("hidden", false);
  if (!hidden.is_null()) {
    if (!hidden.is_array() || hidden.empty()) {
      throw ConfigError("bnn.hidden", "must be a nonempty array of positive integers");
    }
    v.arch.hidden.clear();
    for (const auto& h : hidden) {
      if (!h.is_number_integer() || h.get<int>() < 1) {
        throw ConfigError("bnn.hidden", "must be a nonempty array of positive integers");
      }
      v.arch.hidden.push_back(h.get<int>());
    }
  }
  if (const auto act = r.string("activation", false)) {
    try {
      v.arch.activation = parse_activation(*act);
    } catch (const std::invalid_argument&) {
      throw ConfigError("bnn.activation", "must be \"tanh\" or \"swish\"");
    }
  }
  v.limits.sigma_min = r.number_or("sigma_min", v.limits.sigma_min, 0.0, true);
  v.limits.sigma_max = r.number_or("sigma_max", v.limits.sigma_max, v.limits.sigma_min, true);
  v.init_sigma = r.number_or("init_sigma", v.init_sigma, kWeightSigmaFloor, true);
  v.world_train.lr = r.number_or("world_lr", v.world_train.lr, 0.0);
  v.task_train.lr = r.number_or("task_lr", v.task_train.lr, 0.0);
  const double kl = r.number_or("kl_weight", v.world_train.kl_weight, 0.0);
  v.world_train.kl_weight = v.task_train.kl_weight = kl;
  const int n_mc = r.int_or("n_mc", v.world_train.n_mc, 1);
  v.world_train.n_mc = v.task_train.n_mc = n_mc;
  v.task_batch = r.int_or("task_batch", v.task_batch, 1);
  v.world_batch_tasks = r.int_or("world_batch_tasks", v.world_batch_tasks, 1);
  v.world_batch_per_task = r.int_or("world_batch_per_task", v.world_batch_per_task, 1);
  v.task_train_steps = r.int_or("task_train_steps", v.task_train_steps, 0);
  v.world_train_steps = r.int_or("world_train_steps", v.world_train_steps, 0);
  v.warmup_transitions = r.int_or("warmup_transitions", v.warmup_transitions, 0);
  v.confidence.alpha = r.number_or("alpha", v.confidence.alpha, 0.0);
  r.finish();
}

void parse_cem(const json& j, CemConfig& c) {
  ObjectReader r(j, "cem");
  c.horizon = r.int_or("horizon", c.horizon, 1);
  c.population = r.int_or("population", c.population, 1);
  c.n_elites = r.int_or("n_elites", c.n_elites, 1);
  if (c.n_elites > c.population) throw ConfigError("cem.n_elites", "must not exceed cem.population");
  c.particles = r.int_or("particles", c.particles, 1);
  c.iterations = r.int_or("iterations", c.iterations, 1);
  c.init_std = positive_list(r, "init_std");
  c.min_std = r.number_or("min_std", c.min_std, 0.0, true);
  c.keep_best = r.bool_or("keep_best", c.keep_best);
  r.finish();
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  ObjectReader r(j, "");
  const auto algo = r.string("algorithm", true);
  try {
    cfg.algorithm = parse_algorithm(*algo);
  } catch (const std::invalid_argument&) {
    throw ConfigError("algorithm",
                      "must be one of blrl, boss-fixed-prior, vblrl, vblrl-deterministic, "
                      "single-task-mbrl, world-model-only");
  }
  parse_env(r.raw("env", true), cfg);

  const json& seeds = r.raw("seeds", true);
  if (!seeds.is_array() || seeds.empty()) {
    throw ConfigError("seeds", "must be a nonempty array of nonnegative integers");
  }
  for (const auto& s : seeds) {
    if (!s.is_number_integer() || s.get<long long>() < 0) {
      throw ConfigError("seeds", "must be a nonempty array of nonnegative integers");
    }
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    throw ConfigError("seeds", "must not repeat");
  }
  cfg.task_count = static_cast<int>(*r.integer("task_count", true, 1));
  cfg.episodes_per_task = static_cast<int>(*r.integer("episodes_per_task", true, 1));
  cfg.steps_per_episode = static_cast<int>(*r.integer("steps_per_episode", true, 1));
  cfg.output_dir = *r.string("output_dir", true);
  if (cfg.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");

  if (r.has("blrl")) parse_blrl(r.raw("blrl", false), cfg.blrl);
  if (r.has("bnn")) parse_bnn(r.raw("bnn", false), cfg.vblrl);
  if (r.has("cem")) parse_cem(r.raw("cem", false), cfg.vblrl.cem);
  r.raw("blrl", false);
  r.raw("bnn", false);
  r.raw("cem", false);

  const json& bw = r.raw("backward", false);
  if (!bw.is_null()) {
    ObjectReader b(bw, "backward");
    cfg.backward.enabled = b.bool_or("enabled", cfg.backward.enabled);
    cfg.backward.episodes = b.int_or("episodes", cfg.backward.episodes, 1);
    if (const auto s = b.string("strategy", false)) {
      try {
        cfg.backward.strategy = parse_strategy(*s);
      } catch (const std::invalid_argument&) {
        throw ConfigError("backward.strategy", "must be combined, task or world");
      }
    }
    b.finish();
  }
  const json& ck = r.raw("checkpoints", false);
  if (!ck.is_null()) {
    ObjectReader c(ck, "checkpoints");
    cfg.checkpoint_tasks = c.bool_or("tasks", cfg.checkpoint_tasks);
    cfg.checkpoint_buffers = c.bool_or("buffers", cfg.checkpoint_buffers);
    c.finish();
  }
  cfg.parallel_seeds = r.bool_or("parallel_seeds", cfg.parallel_seeds);
  cfg.timing = r.bool_or("timing", cfg.timing);
  r.finish();

  const bool tabular_env = cfg.env.name == "gridworld";
  if (tabular_env != is_tabular(cfg.algorithm)) {
    throw ConfigError("algorithm", "'" + *algo + "' cannot run on env '" + cfg.env.name + "'");
  }
  if (cfg.backward.enabled && tabular_env) {
    throw ConfigError("backward.enabled", "backward evaluation needs a neural algorithm");
  }
  if (!tabular_env && (cfg.env.physics.max_steps = cfg.steps_per_episode) < 1) {
    throw ConfigError("steps_per_episode", "must be >= 1");
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ConfigError("", std::string("invalid JSON: ") + e.what(), line);
  }
  try {
    return parse_run_config(j);
  } catch (const ConfigError& e) {
    int line = 0;
    if (!e.field.empty()) {
      const std::string key = e.field.substr(e.field.rfind('.') + 1);
      const auto pos = text.find("\"" + key + "\"");
      if (pos != std::string::npos) {
        line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
      }
    }
    const std::string msg = e.what();
    const std::string prefix = message_with_line(e.field, "", 0);
    throw ConfigError(e.field, msg.substr(prefix.size()), line);
  }
}

json run_config_json(const RunConfig& cfg) {
  const auto& v = cfg.vblrl;
  json env = {{"env", cfg.env.name}};
  if (cfg.env.name == "gridworld") {
    env["grid_size"] = cfg.env.grid_size;
  } else {
    json phys = cfg.env.physics;
    phys.erase("max_steps");
    env["physics"] = phys;
  }
  if (cfg.env.seed) env["seed"] = *cfg.env.seed;
  json j = {
      {"algorithm", algorithm_name(cfg.algorithm)},
      {"env", env},
      {"seeds", cfg.seeds},
      {"task_count", cfg.task_count},
      {"episodes_per_task", cfg.episodes_per_task},
      {"steps_per_episode", cfg.steps_per_episode},
      {"output_dir", cfg.output_dir},
      {"backward",
       {{"enabled", cfg.backward.enabled},
        {"episodes", cfg.backward.episodes},
        {"strategy", strategy_name(cfg.backward.strategy)}}},
      {"checkpoints", {{"tasks", cfg.checkpoint_tasks}, {"buffers", cfg.checkpoint_buffers}}},
      {"parallel_seeds", cfg.parallel_seeds},
      {"timing", cfg.timing},
  };
  if (is_tabular(cfg.algorithm)) {
    j["blrl"] = {{"K", cfg.blrl.K},
                 {"B", cfg.blrl.B},
                 {"gamma", cfg.blrl.gamma},
                 {"vi_tolerance", cfg.blrl.vi_tolerance},
                 {"prior_concentration", cfg.blrl.prior_concentration}};
    if (cfg.blrl.kappa >= 0.0) j["blrl"]["kappa"] = cfg.blrl.kappa;
  } else {
    j["bnn"] = {{"hidden", v.arch.hidden},
                {"activation", activation_name(v.arch.activation)},
                {"sigma_min", v.limits.sigma_min},
                {"sigma_max", v.limits.sigma_max},
                {"init_sigma", v.init_sigma},
                {"world_lr", v.world_train.lr},
                {"task_lr", v.task_train.lr},
                {"kl_weight", v.world_train.kl_weight},
                {"n_mc", v.world_train.n_mc},
                {"task_batch", v.task_batch},
                {"world_batch_tasks", v.world_batch_tasks},
                {"world_batch_per_task", v.world_batch_per_task},
                {"task_train_steps", v.task_train_steps},
                {"world_train_steps", v.world_train_steps},
                {"warmup_transitions", v.warmup_transitions},
                {"alpha", v.confidence.alpha}};
    j["cem"] = {{"horizon", v.cem.horizon},
                {"population", v.cem.population},
                {"n_elites", v.cem.n_elites},
                {"particles", v.cem.particles},
                {"iterations", v.cem.iterations},
                {"min_std", v.cem.min_std},
                {"keep_best", v.cem.keep_best}};
    if (!v.cem.init_std.empty()) j["cem"]["init_std"] = v.cem.init_std;
  }
  return j;
}

fs::path resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("LIFELONG_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
      return fs::path(root) / p;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string format_metric_row(const MetricRow& r) {
  return r.phase + "," + std::to_string(r.task_index) + "," + std::to_string(r.episode_index) + "," +
         std::to_string(r.seed) + "," + shortest(r.episode_return) + "," + std::to_string(r.steps) +
         "," + shortest(r.extra);
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) out += format_metric_row(r) + "\n";
  return out;
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics.csv: missing or unexpected header");
  }
  std::vector<MetricRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) {
      throw std::runtime_error("metrics.csv:" + std::to_string(line_no) + ": expected 7 fields");
    }
    try {
      MetricRow r;
      r.phase = f[0];
      if (r.phase != "start" && r.phase != "train" && r.phase != "back") {
        throw std::invalid_argument("bad phase");
      }
      r.task_index = std::stoi(f[1]);
      r.episode_index = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.episode_return = std::stod(f[4]);
      r.steps = std::stoi(f[5]);
      r.extra = std::stod(f[6]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw std::runtime_error("metrics.csv:" + std::to_string(line_no) + ": malformed row");
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

std::uint64_t family_seed(const RunConfig& cfg, std::uint64_t run_seed) {
  return cfg.env.seed ? *cfg.env.seed : derive_seed(run_seed, stream_id("tasks"));
}

VblrlConfig effective_vblrl_config(const RunConfig& cfg) {
  VblrlConfig v = cfg.vblrl;
  v.variant = variant_of(cfg.algorithm);
  BoxJumpPhysics phys = cfg.env.physics;
  phys.max_steps = cfg.steps_per_episode;
  const BoxJumpEnv probe(BoxJumpParams{phys.obstacle_min}, phys);
  v.arch.state_dim = probe.state_dim();
  v.arch.action_dim = probe.action_dim();
  v.cem.action_bounds = probe.action_bounds();
  v.confidence.particles = v.cem.particles;
  return v;
}

namespace {

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

BoxJumpPhysics run_physics(const RunConfig& cfg) {
  BoxJumpPhysics p = cfg.env.physics;
  p.max_steps = cfg.steps_per_episode;
  return p;
}

std::int64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
      .count();
}

SeedResult run_tabular_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  SeedResult out;
  GridworldConfig gc;
  gc.grid_size = cfg.env.grid_size;
  gc.max_steps = cfg.steps_per_episode;
  const std::uint64_t fseed = family_seed(cfg, seed);
  const auto family = gridworld_family(fseed, cfg.task_count, gc);
  BlrlConfig bc = cfg.blrl;
  bc.world_updates = cfg.algorithm == Algorithm::kBlrl;
  const TaskBudget budget{cfg.episodes_per_task * cfg.steps_per_episode, cfg.episodes_per_task};
  Rng rng = make_rng(seed, stream_id("blrl"));

  json tasks = json::array();
  std::unique_ptr<TabularEnv> env = family.make(0);
  WorldPosterior world = make_world_prior(*env, bc);
  for (int i = 0; i < cfg.task_count; ++i) {
    if (i > 0) env = family.make(i);
    const auto t0 = std::chrono::steady_clock::now();
    TaskResult res = run_task(*env, world, bc, rng, budget);
    if (bc.world_updates) world = update_world_posterior(std::move(world), res.counts);
    out.timing.push_back({seed, i, elapsed_ns(t0)});
    for (const auto& ep : res.episodes) {
      out.rows.push_back({ep.episode_index == 0 ? "start" : "train", i, ep.episode_index, seed,
                          ep.episode_return, ep.steps, static_cast<double>(ep.resample_count)});
    }
    if (!dir.empty()) {
      const auto [house, target] = gridworld_task_params(fseed, i, gc);
      tasks.push_back({{"task_index", i}, {"house", house}, {"target", static_cast<int>(target)}});
      if (cfg.checkpoint_tasks) {
        write_file(dir / ("task_" + std::to_string(i) + ".ckpt"), json(res.task_posterior).dump());
      }
    }
  }
  if (!dir.empty()) {
    write_file(dir / "world.ckpt", json(world).dump());
    write_file(dir / "tasks.json", tasks.dump(1));
  }
  return out;
}

SeedResult run_neural_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir,
                           bool keep_state) {
  SeedResult out;
  const VblrlConfig vc = effective_vblrl_config(cfg);
  const BoxJumpPhysics phys = run_physics(cfg);
  const std::uint64_t fseed = family_seed(cfg, seed);
  const auto family = boxjump_family(fseed, cfg.task_count, phys);
  Rng init = make_rng(seed, stream_id("model-init"));
  LifelongState state = make_lifelong_state(vc, init);
  Rng rng = make_rng(seed, stream_id("vblrl"));

  json tasks = json::array();
  auto save_world = [&]() {
    if (!dir.empty() && vc.uses_world_model()) {
      write_file(dir / "world.ckpt", json(state.world_model).dump());
    }
    if (!dir.empty()) write_file(dir / "tasks.json", tasks.dump(1));
  };
  try {
    for (int i = 0; i < cfg.task_count; ++i) {
      auto env = family.make(i);
      const auto t0 = std::chrono::steady_clock::now();
      begin_task(state, vc, i, rng);
      for (int e = 0; e < cfg.episodes_per_task; ++e) {
        const ForwardEpisode fe = forward_episode(state, vc, *env, rng);
        out.rows.push_back({e == 0 ? "start" : "train", i, e, seed, fe.episode_return, fe.steps,
                            fe.task_model_fraction});
      }
      end_task(state);
      out.timing.push_back({seed, i, elapsed_ns(t0)});
      tasks.push_back({{"task_index", i}, {"obstacle_x", boxjump_task_params(fseed, i, phys).obstacle_x}});
      if (!dir.empty()) {
        const auto& tm = state.tasks.at(i);
        if (cfg.checkpoint_tasks && vc.uses_task_models()) {
          write_file(dir / ("task_" + std::to_string(i) + ".ckpt"), json(tm.posterior).dump());
        }
        if (cfg.checkpoint_buffers) {
          write_file(dir / "buffers" / (std::to_string(i) + ".jsonl"), tm.buffer.to_jsonl());
        }
      }
    }
  } catch (const DivergenceError& e) {
    out.error = e.what();
  } catch (const PlanningError& e) {
    out.error = e.what();
  }
  save_world();
  if (out.error.empty() && cfg.backward.enabled) {
    BackwardRequest req;
    req.strategy = cfg.backward.strategy;
    req.alpha = vc.confidence.alpha;
    req.episodes = cfg.backward.episodes;
    auto back = run_backward(cfg, seed, state, req);
    out.rows.insert(out.rows.end(), back.begin(), back.end());
  }
  if (keep_state) out.state = std::move(state);
  return out;
}

}  // namespace

SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& seed_dir,
                    bool keep_state) {
  if (is_tabular(cfg.algorithm)) return run_tabular_seed(cfg, seed, seed_dir);
  return run_neural_seed(cfg, seed, seed_dir, keep_state);
}

std::vector<MetricRow> run_backward(const RunConfig& cfg, std::uint64_t seed,
                                    const LifelongState& state, const BackwardRequest& req,
                                    SelectionLog* log) {
  VblrlConfig vc = effective_vblrl_config(cfg);
  vc.confidence.alpha = req.alpha;
  const BoxJumpPhysics phys = run_physics(cfg);
  const std::uint64_t fseed = family_seed(cfg, seed);
  std::vector<int> tasks;
  if (req.tasks) {
    tasks = *req.tasks;
  } else {
    tasks = state.task_order;
    if (tasks.empty()) {
      for (const auto& [id, tm] : state.tasks) tasks.push_back(id);
    }
  }
  std::vector<MetricRow> rows;
  for (int id : tasks) {
    BoxJumpEnv env(boxjump_task_params(fseed, id, phys), phys);
    for (int e = 0; e < req.episodes; ++e) {
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(id)),
                          stream_id("backward") + static_cast<std::uint64_t>(e)));
      BackwardEpisode be = backward_episode(state, vc, env, id, req.strategy, rng);
      rows.push_back({"back", id, e, seed, be.episode_return, be.steps, be.log.world_fraction()});
      if (log != nullptr) {
        log->decisions += be.log.decisions;
        log->world_chosen += be.log.world_chosen;
        for (const auto& entry : be.log.entries) {
          if (log->entries.size() >= log->max_entries) break;
          log->entries.push_back(entry);
        }
      }
    }
  }
  return rows;
}

LifelongState load_lifelong_state(const fs::path& seed_dir, const VblrlConfig& cfg,
                                  const std::vector<int>& tasks) {
  LifelongState st;
  st.world_prior = GaussianWeightPosterior(cfg.arch);
  if (cfg.uses_world_model()) {
    st.world_model = json::parse(read_file(seed_dir / "world.ckpt")).get<GaussianWeightPosterior>();
  }
  for (int id : tasks) {
    TaskModel tm;
    if (cfg.uses_task_models()) {
      const fs::path p = seed_dir / ("task_" + std::to_string(id) + ".ckpt");
      if (!fs::exists(p)) throw std::runtime_error("missing checkpoint " + p.string());
      tm.posterior = json::parse(read_file(p)).get<GaussianWeightPosterior>();
    }
    tm.ready = true;
    st.tasks.emplace(id, std::move(tm));
    st.task_order.push_back(id);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

MetricSummary across_seeds(std::vector<double> values) {
  MetricSummary s;
  s.per_seed = std::move(values);
  if (s.per_seed.empty()) return s;
  double sum = 0.0;
  for (double v : s.per_seed) sum += v;
  s.mean = sum / static_cast<double>(s.per_seed.size());
  if (s.per_seed.size() > 1) {
    double ss = 0.0;
    for (double v : s.per_seed) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.per_seed.size() - 1));
  }
  return s;
}

struct TaskValues {
  // seed -> task -> value
  std::map<std::uint64_t, std::map<int, double>> start, train, back;
};

TaskValues per_task_values(const std::vector<MetricRow>& rows) {
  std::map<std::uint64_t, std::map<int, std::map<int, double>>> forward;
  std::map<std::uint64_t, std::map<int, std::pair<double, int>>> back_sum;
  for (const auto& r : rows) {
    if (r.phase == "back") {
      auto& acc = back_sum[r.seed][r.task_index];
      acc.first += r.episode_return;
      acc.second += 1;
    } else {
      forward[r.seed][r.task_index][r.episode_index] = r.episode_return;
    }
  }
  TaskValues tv;
  for (const auto& [seed, tasks] : forward) {
    for (const auto& [task, eps] : tasks) {
      tv.start[seed][task] = eps.begin()->second;
      const std::size_t n = eps.size();
      const std::size_t tail = std::max<std::size_t>(1, (n + 9) / 10);
      double sum = 0.0;
      std::size_t k = 0;
      for (auto it = eps.rbegin(); it != eps.rend() && k < tail; ++it, ++k) sum += it->second;
      tv.train[seed][task] = sum / static_cast<double>(tail);
    }
  }
  for (const auto& [seed, tasks] : back_sum) {
    for (const auto& [task, acc] : tasks) tv.back[seed][task] = acc.first / acc.second;
  }
  return tv;
}

MetricSummary summarize_metric(const std::map<std::uint64_t, std::map<int, double>>& m) {
  std::vector<double> per_seed;
  for (const auto& [seed, tasks] : m) {
    double sum = 0.0;
    for (const auto& [task, v] : tasks) sum += v;
    per_seed.push_back(sum / static_cast<double>(tasks.size()));
  }
  return across_seeds(std::move(per_seed));
}

std::string per_task_csv(const std::map<std::uint64_t, std::map<int, double>>& m) {
  std::map<int, std::vector<double>> by_task;
  for (const auto& [seed, tasks] : m) {
    for (const auto& [task, v] : tasks) by_task[task].push_back(v);
  }
  std::string out = "task_index,mean,std,n_seeds\n";
  for (const auto& [task, vals] : by_task) {
    const auto s = across_seeds(vals);
    out += std::to_string(task) + "," + shortest(s.mean) + "," + shortest(s.std) + "," +
           std::to_string(vals.size()) + "\n";
  }
  return out;
}

json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"per_seed", s.per_seed}};
}

}  // namespace

RunSummary summarize(const std::vector<MetricRow>& rows) {
  const TaskValues tv = per_task_values(rows);
  RunSummary s;
  s.start = summarize_metric(tv.start);
  s.train = summarize_metric(tv.train);
  s.has_back = !tv.back.empty();
  if (s.has_back) s.back = summarize_metric(tv.back);
  return s;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_run(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const ConfigError& e) {
    err << config_path.string() << ": " << e.what() << "\n";
    return 2;
  }
  const fs::path dir = resolve_output_dir(cfg.output_dir);
  try {
    fs::create_directories(dir);
    write_file(dir / "config.json", run_config_json(cfg).dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "run: " << e.what() << "\n";
    return 1;
  }

  std::vector<SeedResult> results(cfg.seeds.size());
  std::vector<std::string> failures(cfg.seeds.size());
  auto work = [&](std::size_t i) {
    try {
      results[i] = run_seed(cfg, cfg.seeds[i], dir / ("seed_" + std::to_string(cfg.seeds[i])));
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };
  if (cfg.parallel_seeds && cfg.seeds.size() > 1) {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) threads.emplace_back(work, i);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) work(i);
  }

  std::vector<MetricRow> rows;
  std::vector<TimingRow> timing;
  int status = 0;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    rows.insert(rows.end(), results[i].rows.begin(), results[i].rows.end());
    timing.insert(timing.end(), results[i].timing.begin(), results[i].timing.end());
    if (!results[i].error.empty()) {
      err << "seed " << cfg.seeds[i] << ": divergence: " << results[i].error << "\n";
      status = 3;
    }
    if (!failures[i].empty()) {
      err << "seed " << cfg.seeds[i] << ": " << failures[i] << "\n";
      if (status == 0) status = 1;
    }
  }
  write_file(dir / "metrics.csv", metrics_csv(rows));
  if (cfg.timing) {
    std::string t = "seed,task_index,wall_ns\n";
    for (const auto& r : timing) {
      t += std::to_string(r.seed) + "," + std::to_string(r.task_index) + "," +
           std::to_string(r.wall_ns) + "\n";
    }
    write_file(dir / "timing.csv", t);
  }
  out << "wrote " << rows.size() << " rows to " << (dir / "metrics.csv").string() << "\n";
  return status;
}

int cmd_backward(const fs::path& run_dir, const std::optional<std::vector<int>>& tasks,
                 BackwardStrategy strategy, std::optional<double> alpha,
                 const std::string& metrics_name, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(run_dir / "config.json");
  } catch (const ConfigError& e) {
    err << "backward: " << e.what() << "\n";
    return 2;
  }
  if (is_tabular(cfg.algorithm)) {
    err << "backward: algorithm '" << algorithm_name(cfg.algorithm)
        << "' has no backward evaluation\n";
    return 2;
  }
  const VblrlConfig vc = effective_vblrl_config(cfg);
  std::vector<MetricRow> rows;
  try {
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path seed_dir = run_dir / ("seed_" + std::to_string(seed));
      std::vector<int> ids;
      if (tasks) {
        ids = *tasks;
      } else {
        for (const auto& t : json::parse(read_file(seed_dir / "tasks.json"))) {
          ids.push_back(t.at("task_index").get<int>());
        }
      }
      const LifelongState state = load_lifelong_state(seed_dir, vc, ids);
      BackwardRequest req;
      req.tasks = ids;
      req.strategy = strategy;
      req.alpha = alpha.value_or(vc.confidence.alpha);
      req.episodes = cfg.backward.episodes;
      auto r = run_backward(cfg, seed, state, req);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  } catch (const std::exception& e) {
    err << "backward: " << e.what() << "\n";
    return 1;
  }
  const fs::path metrics = run_dir / metrics_name;
  std::string text;
  if (fs::exists(metrics)) {
    text = read_file(metrics);
    if (!text.empty() && text.back() != '\n') text += '\n';
  } else {
    text = std::string(kMetricsHeader) + "\n";
  }
  for (const auto& r : rows) text += format_metric_row(r) + "\n";
  write_file(metrics, text);
  out << "appended " << rows.size() << " back rows to " << metrics.string() << "\n";
  return 0;
}

int cmd_coin_table(double epsilon, double delta, int total, std::ostream& out, std::ostream& err) {
  try {
    if (total < 1) throw std::invalid_argument("total must be >= 1");
    out << complexity_csv(complexity_profile(total, epsilon, delta));
  } catch (const std::exception& e) {
    err << "coin-table: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  std::vector<MetricRow> rows;
  try {
    rows = parse_metrics_csv(read_file(run_dir / "metrics.csv"));
  } catch (const std::exception& e) {
    err << "report: " << e.what() << "\n";
    return 1;
  }
  const TaskValues tv = per_task_values(rows);
  const RunSummary s = summarize(rows);
  json j = {{"n_seeds", s.start.per_seed.size()},
            {"start", summary_json(s.start)},
            {"train", summary_json(s.train)}};
  if (s.has_back) j["back"] = summary_json(s.back);
  write_file(run_dir / "summary.json", j.dump(2) + "\n");
  write_file(run_dir / "start.csv", per_task_csv(tv.start));
  write_file(run_dir / "train.csv", per_task_csv(tv.train));
  if (s.has_back) write_file(run_dir / "back.csv", per_task_csv(tv.back));
  out << j.dump(2) << "\n";
  return 0;
}

}  // namespace lifelong
