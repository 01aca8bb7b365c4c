#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lifelong/blrl.hpp"
#include "lifelong/coin.hpp"
#include "lifelong/envs.hpp"
#include "lifelong/harness.hpp"
#include "lifelong/mdp.hpp"
#include "lifelong/vblrl.hpp"

namespace py = pybind11;
using namespace lifelong;

namespace {

// Command wrappers return (exit code, stdout, stderr).
using CommandResult = std::tuple<int, std::string, std::string>;

template <typename F>
CommandResult capture(F&& f) {
  std::ostringstream out, err;
  const int rc = f(out, err);
  return {rc, out.str(), err.str()};
}

TabularMDP make_mdp(const std::vector<std::vector<std::vector<double>>>& transition,
                    const std::vector<std::vector<double>>& reward, double gamma) {
  const int ns = static_cast<int>(transition.size());
  const int na = ns == 0 ? 0 : static_cast<int>(transition[0].size());
  TabularMDP m(ns, na, gamma);
  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(transition[s].size()) != na || static_cast<int>(reward.at(s).size()) != na) {
      throw std::invalid_argument("transition and reward must be |S| x |A| (x |S|)");
    }
    for (int a = 0; a < na; ++a) {
      auto row = m.row(s, a);
      if (transition[s][a].size() != row.size()) throw std::invalid_argument("ragged transition row");
      std::copy(transition[s][a].begin(), transition[s][a].end(), row.begin());
      m.reward_at(s, a) = reward[s][a];
    }
  }
  m.validate();
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lifelong Bayesian model-based reinforcement learning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // Coin example -----------------------------------------------------------
  m.def(
      "coverage_probability",
      [](double n1, double n2, double epsilon, double delta, long B, bool observed_flips) {
        CoinPriorSpec spec{n1, n2, epsilon, delta,
                           observed_flips ? CoinCounting::kObservedFlips : CoinCounting::kSampleIndex};
        return coverage_probability(spec, B);
      },
      py::arg("n1"), py::arg("n2"), py::arg("epsilon"), py::arg("delta"), py::arg("B"),
      py::arg("observed_flips") = false);
  m.def(
      "min_sample_complexity",
      [](double n1, double n2, double epsilon, double delta, bool observed_flips) {
        CoinPriorSpec spec{n1, n2, epsilon, delta,
                           observed_flips ? CoinCounting::kObservedFlips : CoinCounting::kSampleIndex};
        return min_sample_complexity(spec);
      },
      py::arg("n1"), py::arg("n2"), py::arg("epsilon") = 0.1, py::arg("delta") = 0.3,
      py::arg("observed_flips") = false);
  m.def(
      "complexity_profile",
      [](int total, double epsilon, double delta) {
        std::vector<std::tuple<int, int, long>> out;
        for (const auto& r : complexity_profile(total, epsilon, delta)) out.emplace_back(r.n1, r.n2, r.B);
        return out;
      },
      py::arg("total") = 10, py::arg("epsilon") = 0.1, py::arg("delta") = 0.3,
      "List of (n1, n2, B) rows.");

  // Tabular planning -------------------------------------------------------
  m.def(
      "value_iteration",
      [](const std::vector<std::vector<std::vector<double>>>& transition,
         const std::vector<std::vector<double>>& reward, double gamma, double tolerance) {
        const auto vf = value_iteration(make_mdp(transition, reward, gamma), tolerance);
        return py::make_tuple(vf.values, vf.policy);
      },
      py::arg("transition"), py::arg("reward"), py::arg("gamma"),
      py::arg("tolerance") = kDefaultViTolerance,
      "transition[s][a][s'] and reward[s][a]; returns (values, greedy policy).");

  // Environments -----------------------------------------------------------
  py::class_<BoxJumpEnv>(m, "BoxJumpEnv")
      .def(py::init([](int obstacle_x, int max_steps) {
             BoxJumpPhysics p;
             p.max_steps = max_steps;
             return BoxJumpEnv(BoxJumpParams{obstacle_x}, p);
           }),
           py::arg("obstacle_x"), py::arg("max_steps") = 60)
      .def("reset", [](BoxJumpEnv& e) {
        Rng rng(0);
        return e.reset(rng);
      })
      .def(
          "step",
          [](BoxJumpEnv& e, double action) {
            Eigen::VectorXd a(1);
            a[0] = action;
            const auto st = e.step(a);
            return py::make_tuple(st.next_state, st.reward, st.done, st.truncated);
          },
          py::arg("action"), "Positive actions jump. Returns (state, reward, done, truncated).")
      .def_property_readonly("obstacle_x", [](const BoxJumpEnv& e) { return e.params().obstacle_x; });

  m.def(
      "boxjump_obstacles",
      [](std::uint64_t seed, int task_count) {
        std::vector<int> out;
        for (int i = 0; i < task_count; ++i) out.push_back(boxjump_task_params(seed, i).obstacle_x);
        return out;
      },
      py::arg("seed"), py::arg("task_count"));

  py::class_<GridworldEnv>(m, "GridworldEnv")
      .def(py::init([](std::uint64_t seed, int task_index, int grid_size) {
             GridworldConfig cfg;
             cfg.grid_size = grid_size;
             auto [house, target] = gridworld_task_params(seed, task_index, cfg);
             return GridworldEnv(house, target, cfg);
           }),
           py::arg("seed"), py::arg("task_index"), py::arg("grid_size") = 9)
      .def("reset", [](GridworldEnv& e) {
        Rng rng(0);
        return e.reset(rng);
      })
      .def(
          "step",
          [](GridworldEnv& e, int action) {
            const auto st = e.step(action);
            return py::make_tuple(st.next_state, st.reward, st.done, st.truncated);
          },
          py::arg("action"), "Actions 0-3 are up, down, left, right.")
      .def_property_readonly("n_states", &GridworldEnv::n_states)
      .def_property_readonly("n_actions", &GridworldEnv::n_actions)
      .def_property_readonly("target", [](const GridworldEnv& e) { return static_cast<int>(e.target()); })
      .def_property_readonly("room_types", [](const GridworldEnv& e) { return e.house().room_types; });

  // Confidence ---------------------------------------------------------------
  m.def(
      "confidence",
      [](const std::vector<double>& mu, const std::vector<double>& sigma, double alpha) {
        if (mu.size() != sigma.size()) throw std::invalid_argument("mu and sigma differ in length");
        std::vector<BNNPrediction> preds(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
          preds[i].mean_reward = mu[i];
          preds[i].std_reward = sigma[i];
          preds[i].mean_next_state = Eigen::VectorXd();
          preds[i].std_next_state = Eigen::VectorXd();
        }
        return confidence(preds, ConfidenceParams{alpha, static_cast<int>(mu.size())},
                          ConfidenceTarget::kReward);
      },
      py::arg("mu"), py::arg("sigma"), py::arg("alpha") = 1.0,
      "Reward confidence of P particle predictions.");

  // Runs -------------------------------------------------------------------
  m.def(
      "validate_config",
      [](const std::filesystem::path& path) { return run_config_json(load_run_config(path)).dump(); },
      py::arg("path"), "Normalised config as a JSON string; raises ConfigError.");
  m.def(
      "run",
      [](const std::filesystem::path& config) {
        py::gil_scoped_release release;
        return capture([&](auto& o, auto& e) { return cmd_run(config, o, e); });
      },
      py::arg("config"));
  m.def(
      "backward",
      [](const std::filesystem::path& run_dir, std::optional<std::vector<int>> tasks,
         const std::string& strategy, std::optional<double> alpha, const std::string& metrics) {
        const auto s = parse_strategy(strategy);
        py::gil_scoped_release release;
        return capture([&](auto& o, auto& e) {
          return cmd_backward(run_dir, tasks, s, alpha, metrics, o, e);
        });
      },
      py::arg("run_dir"), py::arg("tasks") = py::none(), py::arg("strategy") = "combined",
      py::arg("alpha") = py::none(), py::arg("metrics") = "metrics.csv");
  m.def(
      "report",
      [](const std::filesystem::path& run_dir) {
        return capture([&](auto& o, auto& e) { return cmd_report(run_dir, o, e); });
      },
      py::arg("run_dir"));
  m.def(
      "coin_table",
      [](double epsilon, double delta, int total) {
        return capture([&](auto& o, auto& e) { return cmd_coin_table(epsilon, delta, total, o, e); });
      },
      py::arg("epsilon") = 0.1, py::arg("delta") = 0.3, py::arg("total") = 10);
}
