// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any selected criterion fails.
//
//   acceptance                  every criterion
//   acceptance --only 1,2,11    a subset
//   acceptance --task-count 20  shorter lifelong runs (criteria 8-10), for smoke testing only

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lifelong/blrl.hpp"
#include "lifelong/bnn.hpp"
#include "lifelong/cem.hpp"
#include "lifelong/coin.hpp"
#include "lifelong/dirichlet.hpp"
#include "lifelong/harness.hpp"
#include "lifelong/mdp.hpp"
#include "lifelong/vblrl.hpp"

using namespace lifelong;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  int task_count = 300;
  fs::path work_dir;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TabularMDP random_mdp(int ns, int na, double gamma, Rng& rng) {
  TabularMDP m(ns, na, gamma);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      auto row = m.row(s, a);
      double total = 0.0;
      for (auto& p : row) total += (p = uniform01(rng) + 1e-3);
      for (auto& p : row) p /= total;
      m.reward_at(s, a) = uniform01(rng);
    }
  }
  return m;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// 1 ------------------------------------------------------------------------

Outcome coin_table(const Options&) {
  const std::string golden =
      "n1,n2,B\n0,10,78\n1,9,68\n2,8,58\n3,7,49\n4,6,42\n5,5,40\n6,4,42\n7,3,48\n8,2,58\n"
      "9,1,68\n10,0,78\n";
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  const int rc = cmd_coin_table(0.1, 0.3, 10, out, err);
  const double secs = seconds_since(t0);
  std::string got = out.str();
  std::string mismatched;
  std::istringstream g(golden), o(got);
  std::string gl, ol;
  while (std::getline(g, gl)) {
    if (!std::getline(o, ol)) ol = "<missing>";
    if (gl != ol) mismatched += " want " + gl + " got " + ol + ";";
  }
  const bool pass = rc == 0 && got == golden && secs < 60.0;
  return {pass, fmt(secs, 3) + " s" + (mismatched.empty() ? "" : ", rows differ:" + mismatched)};
}

// 2 ------------------------------------------------------------------------

Outcome bnn_gradients(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  Architecture arch;
  arch.state_dim = 3;
  arch.action_dim = 1;
  arch.hidden = {16, 16};
  auto q = GaussianWeightPosterior::initialized(arch, rng, 0.05);
  auto prior = GaussianWeightPosterior::initialized(arch, rng, 0.2);
  for (Eigen::Index j = 0; j < q.size(); ++j) q.rho[j] = -3.0 + uniform01(rng);
  std::vector<Transition> batch;
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.state = Eigen::VectorXd::NullaryExpr(3, [&] { return standard_normal(rng); });
    t.action = Eigen::VectorXd::NullaryExpr(1, [&] { return 2.0 * uniform01(rng) - 1.0; });
    t.next_state = t.state + 0.3 * Eigen::VectorXd::NullaryExpr(3, [&] { return standard_normal(rng); });
    t.reward = standard_normal(rng);
    batch.push_back(t);
  }
  const Eigen::MatrixXd noise = draw_weight_noise(q.size(), 1, rng);
  const OutputLimits lim{1e-3, 1e3};
  const double kl_weight = 0.1;
  const auto base = elbo_loss_with_noise(q, prior, batch, noise, kl_weight, lim);
  const double h = 1e-5;
  auto loss = [&](const GaussianWeightPosterior& x) {
    return elbo_loss_with_noise(x, prior, batch, noise, kl_weight, lim).loss;
  };
  auto ok = [](double a, double n) {
    return std::abs(a - n) <= std::max(1e-8, 1e-4 * std::max(std::abs(a), std::abs(n)));
  };
  int bad = 0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    for (int which = 0; which < 2; ++which) {
      auto qp = q, qm = q;
      (which == 0 ? qp.mu : qp.rho)[j] += h;
      (which == 0 ? qm.mu : qm.rho)[j] -= h;
      const double fd = (loss(qp) - loss(qm)) / (2.0 * h);
      const double an = which == 0 ? base.grad_mu[j] : base.grad_rho[j];
      if (!ok(an, fd)) ++bad;
      const double denom = std::max(std::abs(an), std::abs(fd));
      if (denom > 1e-8) worst = std::max(worst, std::abs(an - fd) / denom);
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 10.0, std::to_string(2 * q.size()) + " partials, " +
                                       std::to_string(bad) + " outside tolerance, worst rel " +
                                       fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// 3 ------------------------------------------------------------------------

Outcome kl_monte_carlo(const Options&) {
  Rng rng(77);
  const int pairs = 20;
  const int dim = 6;
  const long draws = 1'000'000;
  int bad = 0;
  double worst_z = 0.0;
  for (int i = 0; i < pairs; ++i) {
    std::vector<double> mq(dim), sq(dim), mp(dim), sp(dim);
    for (int j = 0; j < dim; ++j) {
      mq[j] = standard_normal(rng);
      mp[j] = standard_normal(rng);
      sq[j] = 0.3 + uniform01(rng);
      sp[j] = 0.5 + uniform01(rng);
    }
    const double exact = kl_factorized_gaussians(mq, sq, mp, sp);
    double sum = 0.0, sum2 = 0.0;
    for (long n = 0; n < draws; ++n) {
      double lr = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double w = mq[j] + sq[j] * standard_normal(rng);
        const double zq = (w - mq[j]) / sq[j];
        const double zp = (w - mp[j]) / sp[j];
        lr += std::log(sp[j] / sq[j]) - 0.5 * zq * zq + 0.5 * zp * zp;
      }
      sum += lr;
      sum2 += lr * lr;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    const double z = std::abs(mean - exact) / se;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++bad;
  }
  Architecture arch;
  arch.state_dim = 2;
  arch.action_dim = 1;
  arch.hidden = {8};
  const auto q = GaussianWeightPosterior::initialized(arch, rng, 0.1);
  const double self = kl_factorized_gaussians(q, q);
  return {bad == 0 && self == 0.0, std::to_string(pairs - bad) + "/" + std::to_string(pairs) +
                                       " pairs within 3 SE (worst " + fmt(worst_z, 3) +
                                       " SE), KL(q||q) = " + fmt(self)};
}

// 4 ------------------------------------------------------------------------

Outcome value_iteration_checks(const Options&) {
  TabularMDP single(1, 1, 0.95);
  single.row(0, 0)[0] = 1.0;
  single.reward_at(0, 0) = 1.0;
  const double v20 = value_iteration(single, 1e-10).values[0];

  TabularMDP chain(2, 1, 0.9);
  chain.row(0, 0)[1] = 1.0;
  chain.reward_at(0, 0) = 0.5;
  chain.row(1, 0)[1] = 1.0;
  chain.reward_at(1, 0) = 1.0;
  const auto vc = value_iteration(chain, 1e-10).values;

  Rng rng(404);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int ns = uniform_int(rng, 1, 8);
    const int na = uniform_int(rng, 1, 4);
    const double gamma = 0.5 + 0.49 * uniform01(rng);
    const auto m = random_mdp(ns, na, gamma, rng);
    std::vector<double> a(ns), b(ns);
    for (int s = 0; s < ns; ++s) {
      a[s] = 10.0 * (uniform01(rng) - 0.5);
      b[s] = 10.0 * (uniform01(rng) - 0.5);
    }
    const auto ta = bellman_sweep(m, a);
    const auto tb = bellman_sweep(m, b);
    double before = 0.0, after = 0.0;
    for (int s = 0; s < ns; ++s) {
      before = std::max(before, std::abs(a[s] - b[s]));
      after = std::max(after, std::abs(ta[s] - tb[s]));
    }
    if (after > gamma * before + 1e-12) ++violations;
  }
  const bool pass = std::abs(v20 - 20.0) < 1e-6 && std::abs(vc[0] - 9.5) < 1e-6 &&
                    std::abs(vc[1] - 10.0) < 1e-6 && violations == 0;
  return {pass, "V=" + fmt(v20, 10) + ", chain=(" + fmt(vc[0], 10) + ", " + fmt(vc[1], 10) +
                    "), contraction violations " + std::to_string(violations) + "/100"};
}

// 5 ------------------------------------------------------------------------

Outcome merged_optimism(const Options&) {
  Rng rng(505);
  int bad = 0, identity_bad = 0, k1 = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int ns = uniform_int(rng, 1, 6);
    const int na = uniform_int(rng, 1, 3);
    const int k = uniform_int(rng, 1, 4);
    std::vector<TabularMDP> models;
    for (int i = 0; i < k; ++i) models.push_back(random_mdp(ns, na, 0.9, rng));
    const auto vm = value_iteration(merge_models(models).mdp, 1e-12).values;
    for (const auto& m : models) {
      const auto v = value_iteration(m, 1e-12).values;
      for (int s = 0; s < ns; ++s) {
        if (vm[s] < v[s] - 1e-8) ++bad;
        if (k == 1 && vm[s] != v[s]) ++identity_bad;
      }
    }
    k1 += k == 1 ? 1 : 0;
  }
  return {bad == 0 && identity_bad == 0,
          "50 instances, " + std::to_string(bad) + " dominance violations, " + std::to_string(k1) +
              " K=1 instances with " + std::to_string(identity_bad) + " value mismatches"};
}

// 6 ------------------------------------------------------------------------

class Integrator final : public DynamicsModel {
 public:
  explicit Integrator(double target) : target_(target) {}
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  void predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                     BatchPrediction& out) const override {
    const auto n = states.cols();
    out.mean_delta = actions;
    out.std_state = Eigen::MatrixXd::Zero(1, n);
    out.mean_reward = -((states.array() + actions.array()) - target_).square().matrix();
    out.std_reward = Eigen::RowVectorXd::Zero(n);
  }

 private:
  double target_;
};

class IntegratorSampler final : public ModelSampler {
 public:
  explicit IntegratorSampler(double target) : target_(target) {}
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  std::unique_ptr<DynamicsModel> draw(Rng&) const override {
    return std::make_unique<Integrator>(target_);
  }

 private:
  double target_;
};

class Quadratic final : public SequenceEvaluator {
 public:
  void begin_plan(int, int, Rng&) override {}
  void evaluate(const Eigen::VectorXd&, const std::vector<Eigen::MatrixXd>& actions,
                Eigen::VectorXd& scores) override {
    scores = -(actions[0].row(0).array() - 0.3).square().matrix().transpose();
  }
};

Outcome cem_optimality(const Options&) {
  CemConfig cfg;
  cfg.population = 200;
  cfg.n_elites = 20;
  cfg.particles = 2;
  cfg.iterations = 6;
  cfg.action_bounds = {{-1.0, 1.0}};

  cfg.horizon = 1;
  CemPlanner single(cfg);
  Quadratic quad;
  Rng rng(6);
  const double a_star = single.plan(quad, Eigen::VectorXd::Zero(1), rng)[0];

  const double target = 1.7;
  auto true_return = [&](const double* a) {
    double s = 0.0, r = 0.0;
    for (int t = 0; t < 3; ++t) {
      s += a[t];
      r -= (s - target) * (s - target);
    }
    return r;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      for (int k = 0; k <= 100; ++k) {
        const double a[3] = {-1.0 + 0.02 * i, -1.0 + 0.02 * j, -1.0 + 0.02 * k};
        best = std::max(best, true_return(a));
      }
    }
  }
  cfg.horizon = 3;
  const IntegratorSampler sampler(target);
  int within = 0;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CemPlanner planner(cfg);
    ParticleEvaluator eval(sampler, cfg.particles);
    Rng r(seed);
    planner.plan(eval, Eigen::VectorXd::Zero(1), r);
    const auto& seq = planner.best_sequence();
    const double a[3] = {seq(0, 0), seq(1, 0), seq(2, 0)};
    const double gap = (best - true_return(a)) / std::abs(best);
    worst_gap = std::max(worst_gap, gap);
    if (gap <= 0.05) ++within;
  }
  const bool pass = std::abs(a_star - 0.3) < 1e-2 && within == 20;
  return {pass, "quadratic argmax " + fmt(a_star, 6) + " (want 0.3), integrator " +
                    std::to_string(within) + "/20 seeds within 5% (worst gap " +
                    fmt(100.0 * worst_gap, 3) + "%)"};
}

// 7 ------------------------------------------------------------------------

Outcome dirichlet_consistency(const Options&) {
  Rng rng(707);
  const std::vector<double> truth{0.45, 0.25, 0.2, 0.1};
  DirichletPosterior post(4, 1, RewardSupport{{0.0, 1.0}});
  std::discrete_distribution<int> gen(truth.begin(), truth.end());
  for (int i = 0; i < 10000; ++i) post.observe(0, 0, 0.0, gen(rng));
  const auto mean = post.mean_transition(0, 0);
  double l1 = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) l1 += std::abs(mean[i] - truth[i]);

  int invalid = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<double> alpha(1 + trial % 9);
    for (auto& a : alpha) a = 1e-3 + 5.0 * uniform01(rng);
    const auto p = sample_dirichlet(alpha, rng);
    double total = 0.0;
    bool ok = p.size() == alpha.size();
    for (double x : p) {
      ok = ok && std::isfinite(x) && x >= 0.0;
      total += x;
    }
    if (!ok || std::abs(total - 1.0) > 1e-12) ++invalid;
  }
  return {l1 < 0.05 && invalid == 0,
          "L1 " + fmt(l1, 3) + " after 1e4 observations, " + std::to_string(invalid) +
              "/5000 invalid draws"};
}

// Lifelong runs ------------------------------------------------------------

RunConfig preset(const std::string& file, const std::string& algorithm, const Options& opt) {
  auto j = nlohmann::json::parse(slurp(fs::path(LIFELONG_CONFIG_DIR) / file));
  j["algorithm"] = algorithm;
  j["seeds"] = {1, 2, 3};
  j["task_count"] = opt.task_count;
  j["output_dir"] = (opt.work_dir / algorithm).string();
  j["backward"] = {{"enabled", false}};
  j["checkpoints"] = {{"tasks", false}, {"buffers", false}};
  return parse_run_config(j);
}

// Mean return over every episode of tasks [first, task_count) for one seed.
double late_mean(const std::vector<MetricRow>& rows, int first) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.phase == "back" || r.task_index < first) continue;
    sum += r.episode_return;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

int late_window_start(const Options& opt) {
  // Tasks 251-300 (1-based) of 300; the last sixth for shorter runs.
  return opt.task_count - std::max(1, opt.task_count / 6);
}

Outcome blrl_forward(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const int first = late_window_start(opt);
  std::string detail;
  double diff_sum = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto blrl = run_seed(preset("gridworld_blrl.json", "blrl", opt), seed);
    const auto boss = run_seed(preset("gridworld_blrl.json", "boss-fixed-prior", opt), seed);
    const double a = late_mean(blrl.rows, first);
    const double b = late_mean(boss.rows, first);
    diff_sum += a - b;
    detail += " seed " + std::to_string(seed) + ": " + fmt(a) + " vs " + fmt(b) + ";";
  }
  const double mean_diff = diff_sum / 3.0;
  return {mean_diff > 0.0, "tasks " + std::to_string(first + 1) + "-" +
                               std::to_string(opt.task_count) + " BLRL minus BOSS " +
                               fmt(mean_diff) + " (" + detail.substr(1) + ") " +
                               fmt(seconds_since(t0) / 60.0, 3) + " min"};
}

struct NeuralRuns {
  bool done = false;
  std::map<std::string, std::vector<SeedResult>> by_algorithm;
  double minutes = 0.0;
};

NeuralRuns& neural_runs(const Options& opt) {
  static NeuralRuns runs;
  if (runs.done) return runs;
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* algo : {"vblrl", "world-model-only", "single-task-mbrl"}) {
    const auto cfg = preset("boxjump_vblrl.json", algo, opt);
    for (std::uint64_t seed : cfg.seeds) {
      runs.by_algorithm[algo].push_back(run_seed(cfg, seed, {}, std::string(algo) == "vblrl"));
    }
  }
  runs.minutes = seconds_since(t0) / 60.0;
  runs.done = true;
  return runs;
}

Outcome vblrl_forward(const Options& opt) {
  auto& runs = neural_runs(opt);
  const int first = late_window_start(opt);
  std::map<std::string, double> mean;
  std::string detail;
  for (const auto& [algo, results] : runs.by_algorithm) {
    double sum = 0.0;
    for (const auto& r : results) {
      if (!r.error.empty()) return {false, algo + " diverged: " + r.error};
      sum += late_mean(r.rows, first);
    }
    mean[algo] = sum / static_cast<double>(results.size());
    detail += " " + algo + " " + fmt(mean[algo]) + ";";
  }
  const bool pass = mean["vblrl"] > mean["world-model-only"] && mean["vblrl"] > mean["single-task-mbrl"];
  return {pass, "tasks " + std::to_string(first + 1) + "-" + std::to_string(opt.task_count) +
                    " mean return:" + detail + " " + fmt(runs.minutes, 3) + " min"};
}

Outcome backward_transfer(const Options& opt) {
  auto& runs = neural_runs(opt);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = preset("boxjump_vblrl.json", "vblrl", opt);
  std::map<BackwardStrategy, double> sums;
  long decisions = 0, mismatches = 0, world_chosen = 0;
  int n = 0;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const auto& result = runs.by_algorithm.at("vblrl")[i];
    if (!result.state) return {false, "vblrl run kept no state"};
    for (auto strategy : {BackwardStrategy::kCombined, BackwardStrategy::kTaskOnly,
                          BackwardStrategy::kWorldOnly}) {
      BackwardRequest req;
      req.strategy = strategy;
      SelectionLog log;
      log.max_entries = std::numeric_limits<std::size_t>::max();
      const auto rows = run_backward(cfg, cfg.seeds[i], *result.state, req, &log);
      for (const auto& r : rows) sums[strategy] += r.episode_return;
      if (strategy == BackwardStrategy::kCombined) {
        n += static_cast<int>(rows.size());
        decisions += log.decisions;
        world_chosen += log.world_chosen;
        for (const auto& e : log.entries) {
          if (e.chose_world != (e.c_world > e.c_task)) ++mismatches;
        }
      }
    }
  }
  const double combined = sums[BackwardStrategy::kCombined] / n;
  const double task = sums[BackwardStrategy::kTaskOnly] / n;
  const double world = sums[BackwardStrategy::kWorldOnly] / n;
  const bool pass = combined >= task && combined >= world && mismatches == 0 && decisions > 0;
  return {pass, "combined " + fmt(combined) + ", task-only " + fmt(task) + ", world-only " +
                    fmt(world) + " over " + std::to_string(n) + " task evaluations; " +
                    std::to_string(mismatches) + "/" + std::to_string(decisions) +
                    " selections off the confidence argmax (world chosen " +
                    fmt(100.0 * world_chosen / std::max(1L, decisions), 3) + "%), " +
                    fmt(seconds_since(t0) / 60.0, 3) + " min"};
}

// 11 -----------------------------------------------------------------------

Outcome determinism(const Options& opt) {
  std::vector<nlohmann::json> configs;
  configs.push_back({{"algorithm", "blrl"},
                     {"env", {{"env", "gridworld"}}},
                     {"seeds", {1, 2}},
                     {"task_count", 4},
                     {"episodes_per_task", 4},
                     {"steps_per_episode", 21}});
  configs.push_back({{"algorithm", "vblrl"},
                     {"env", {{"env", "boxjump"}}},
                     {"seeds", {1, 2}},
                     {"task_count", 3},
                     {"episodes_per_task", 3},
                     {"steps_per_episode", 30},
                     {"bnn", {{"hidden", {16, 16}}, {"warmup_transitions", 32}, {"task_train_steps", 5},
                              {"world_train_steps", 5}}},
                     {"cem", {{"horizon", 5}, {"population", 16}, {"n_elites", 4}, {"particles", 3},
                              {"iterations", 2}}},
                     {"backward", {{"enabled", true}}}});
  std::string detail;
  bool pass = true;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = opt.work_dir / ("determinism_" + std::to_string(i) + "_" + std::to_string(rep));
      fs::remove_all(dir);
      auto j = configs[i];
      j["output_dir"] = dir.string();
      fs::create_directories(opt.work_dir);
      const fs::path cfg_path = opt.work_dir / "determinism.json";
      std::ofstream(cfg_path) << j.dump(2);
      std::ostringstream out, err;
      if (cmd_run(cfg_path, out, err) != 0) return {false, "run failed: " + err.str()};
      const std::string text = slurp(dir / "metrics.csv");
      if (rep == 0) {
        first = text;
      } else {
        const bool same = text == first && !text.empty();
        pass = pass && same;
        detail += std::string(i == 0 ? "" : ", ") + configs[i]["algorithm"].get<std::string>() +
                  (same ? " identical" : " differs") + " (" + std::to_string(text.size()) + " bytes)";
      }
    }
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  Options opt;
  opt.work_dir = fs::temp_directory_path() / "lifelong_acceptance";
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--task-count", opt.task_count, "Tasks per lifelong run for criteria 8-10")
      ->check(CLI::Range(6, 100000));
  app.add_option("--work-dir", opt.work_dir, "Scratch directory for run outputs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> criteria{
      {"coin-example table", coin_table},
      {"BNN gradient fidelity", bnn_gradients},
      {"KL correctness", kl_monte_carlo},
      {"value iteration", value_iteration_checks},
      {"merged-MDP optimism", merged_optimism},
      {"CEM optimality", cem_optimality},
      {"Dirichlet consistency", dirichlet_consistency},
      {"BLRL forward transfer", blrl_forward},
      {"VBLRL forward transfer", vblrl_forward},
      {"backward transfer", backward_transfer},
      {"determinism", determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && selected.count(id) == 0) continue;
    Outcome o;
    try {
      o = criteria[i].second(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << criteria[i].first
              << " | " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
