#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lifelong/harness.hpp"

namespace {

std::vector<int> parse_task_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size() || v < 0) throw std::invalid_argument("bad task index '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifelong Bayesian model-based reinforcement learning"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a lifelong experiment from a JSON config");
  run->add_option("config", config_path, "Config file")->required();

  std::string run_dir;
  std::optional<std::string> tasks_text;
  std::string strategy_text = "combined";
  std::optional<double> alpha;
  std::string metrics_name = "metrics.csv";
  auto* back = app.add_subcommand("backward", "Evaluate past tasks with frozen checkpoints");
  back->add_option("dir", run_dir, "Run directory")->required();
  back->add_option("--tasks", tasks_text, "Comma-separated task indices (default: all)");
  back->add_option("--strategy", strategy_text, "combined, task or world")
      ->check(CLI::IsMember({"combined", "task", "world", "task-only", "world-only"}));
  back->add_option("--alpha", alpha, "Weight of the predictive-std variance term");
  back->add_option("--metrics", metrics_name, "Metrics file to append to, relative to dir");

  double epsilon = 0.1;
  double delta = 0.3;
  int total = 10;
  auto* coin = app.add_subcommand("coin-table", "Sample complexity of the two-coin example");
  coin->add_option("--epsilon", epsilon, "Interval half-width");
  coin->add_option("--delta", delta, "Allowed failure probability");
  coin->add_option("--total", total, "Observations split between the two coins");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Aggregate metrics.csv into Start/Train/Back");
  report->add_option("dir", report_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return lifelong::cmd_run(config_path, std::cout, std::cerr);
  if (*back) {
    std::optional<std::vector<int>> tasks;
    try {
      if (tasks_text) tasks = parse_task_list(*tasks_text);
    } catch (const std::exception& e) {
      std::cerr << "backward: --tasks: " << e.what() << "\n";
      return 2;
    }
    return lifelong::cmd_backward(run_dir, tasks, lifelong::parse_strategy(strategy_text), alpha,
                                  metrics_name, std::cout, std::cerr);
  }
  if (*coin) return lifelong::cmd_coin_table(epsilon, delta, total, std::cout, std::cerr);
  if (*report) return lifelong::cmd_report(report_dir, std::cout, std::cerr);
  return 1;
}
