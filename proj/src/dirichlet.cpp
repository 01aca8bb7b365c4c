#include "lifelong/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lifelong {

int RewardSupport::nearest_bin(double r) const {
  if (values.empty()) throw std::invalid_argument("RewardSupport: empty support");
  int best = 0;
  for (int i = 1; i < size(); ++i) {
    if (std::abs(values[i] - r) < std::abs(values[best] - r)) best = i;
  }
  return best;
}

CountTable::CountTable(int n_states_, int n_actions_, int n_reward_bins_)
    : n_states(n_states_), n_actions(n_actions_), n_reward_bins(n_reward_bins_) {
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  transition.assign(pairs * n_states, 0.0);
  reward.assign(pairs * n_reward_bins, 0.0);
}

void CountTable::record(int s, int a, int reward_bin, int s2) {
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions || s2 < 0 || s2 >= n_states ||
      reward_bin < 0 || reward_bin >= n_reward_bins) {
    throw std::out_of_range("CountTable::record: index out of range");
  }
  const auto pair = static_cast<std::size_t>(s) * n_actions + a;
  transition[pair * n_states + s2] += 1.0;
  reward[pair * n_reward_bins + reward_bin] += 1.0;
}

double CountTable::total() const {
  return std::accumulate(transition.begin(), transition.end(), 0.0);
}

DirichletPosterior::DirichletPosterior(int n_states_, int n_actions_, RewardSupport support_,
                                       double concentration)
    : n_states(n_states_), n_actions(n_actions_), support(std::move(support_)) {
  if (n_states <= 0 || n_actions <= 0 || support.size() == 0) {
    throw std::invalid_argument("DirichletPosterior: empty dimensions");
  }
  if (!(concentration > 0.0)) {
    throw std::invalid_argument("DirichletPosterior: concentration must be positive");
  }
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  pseudo_counts.assign(pairs * n_states, concentration);
  reward_counts.assign(pairs * support.size(), concentration);
}

void DirichletPosterior::check_pair(int s, int a) const {
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions) {
    throw std::out_of_range("DirichletPosterior: state or action out of range");
  }
}

std::span<const double> DirichletPosterior::counts(int s, int a) const {
  check_pair(s, a);
  const auto pair = static_cast<std::size_t>(s) * n_actions + a;
  return {pseudo_counts.data() + pair * n_states, static_cast<std::size_t>(n_states)};
}

std::span<const double> DirichletPosterior::reward_row(int s, int a) const {
  check_pair(s, a);
  const auto pair = static_cast<std::size_t>(s) * n_actions + a;
  return {reward_counts.data() + pair * support.size(), static_cast<std::size_t>(support.size())};
}

std::vector<double> DirichletPosterior::mean_transition(int s, int a) const {
  const auto c = counts(s, a);
  const double total = std::accumulate(c.begin(), c.end(), 0.0);
  std::vector<double> mean(c.begin(), c.end());
  for (double& m : mean) m /= total;
  return mean;
}

double DirichletPosterior::mean_reward(int s, int a) const {
  const auto c = reward_row(s, a);
  double total = 0.0;
  double weighted = 0.0;
  for (int i = 0; i < support.size(); ++i) {
    total += c[i];
    weighted += c[i] * support.values[i];
  }
  return weighted / total;
}

void DirichletPosterior::observe(int s, int a, double r, int s2) {
  check_pair(s, a);
  if (s2 < 0 || s2 >= n_states) {
    throw std::out_of_range("DirichletPosterior::observe: successor out of range");
  }
  const auto pair = static_cast<std::size_t>(s) * n_actions + a;
  pseudo_counts[pair * n_states + s2] += 1.0;
  reward_counts[pair * support.size() + support.nearest_bin(r)] += 1.0;
}

void DirichletPosterior::validate() const {
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  if (pseudo_counts.size() != pairs * n_states ||
      reward_counts.size() != pairs * support.size()) {
    throw std::invalid_argument("DirichletPosterior: table sizes do not match dimensions");
  }
  auto check_rows = [](const std::vector<double>& table, std::size_t width) {
    for (std::size_t start = 0; start < table.size(); start += width) {
      double total = 0.0;
      for (std::size_t i = start; i < start + width; ++i) {
        if (!(table[i] >= 0.0)) {
          throw std::invalid_argument("DirichletPosterior: negative pseudo-count");
        }
        total += table[i];
      }
      if (!(total > 0.0)) {
        throw std::invalid_argument("DirichletPosterior: row with zero total pseudo-count");
      }
    }
  };
  check_rows(pseudo_counts, static_cast<std::size_t>(n_states));
  check_rows(reward_counts, static_cast<std::size_t>(support.size()));
}

KnownnessCounter::KnownnessCounter(int n_states_, int n_actions_, int threshold_)
    : n_states(n_states_), n_actions(n_actions_), threshold(threshold_) {
  if (threshold < 0) throw std::invalid_argument("KnownnessCounter: negative threshold");
  visits.assign(static_cast<std::size_t>(n_states) * n_actions, 0);
}

bool KnownnessCounter::known(int s, int a) const {
  return visits[static_cast<std::size_t>(s) * n_actions + a] >= threshold;
}

int KnownnessCounter::increment(int s, int a) {
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions) {
    throw std::out_of_range("KnownnessCounter: state or action out of range");
  }
  return ++visits[static_cast<std::size_t>(s) * n_actions + a];
}

DirichletPosterior update_task_posterior(DirichletPosterior posterior, int s, int a, double r,
                                         int s2) {
  posterior.observe(s, a, r, s2);
  return posterior;
}

DirichletPosterior init_task_prior_from_world(const WorldPosterior& world) {
  return world.counts;
}

WorldPosterior update_world_posterior(WorldPosterior world, const CountTable& task_counts) {
  auto& c = world.counts;
  if (task_counts.n_states != c.n_states || task_counts.n_actions != c.n_actions ||
      task_counts.n_reward_bins != c.support.size() ||
      task_counts.transition.size() != c.pseudo_counts.size() ||
      task_counts.reward.size() != c.reward_counts.size()) {
    throw std::invalid_argument("update_world_posterior: count table shape mismatch");
  }
  if (!(world.kappa >= 0.0)) {
    throw std::invalid_argument("update_world_posterior: kappa must be nonnegative");
  }
  for (double v : task_counts.transition) {
    if (v < 0.0) throw std::invalid_argument("update_world_posterior: negative task count");
  }
  for (double v : task_counts.reward) {
    if (v < 0.0) throw std::invalid_argument("update_world_posterior: negative task count");
  }
  for (std::size_t i = 0; i < c.pseudo_counts.size(); ++i) {
    c.pseudo_counts[i] += world.kappa * task_counts.transition[i];
  }
  for (std::size_t i = 0; i < c.reward_counts.size(); ++i) {
    c.reward_counts[i] += world.kappa * task_counts.reward[i];
  }
  return world;
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > 0.0) {
      std::gamma_distribution<double> g(alpha[i], 1.0);
      out[i] = g(rng);
      total += out[i];
    }
  }
  if (!(total > 0.0)) {
    // Every Gamma draw underflowed (all alphas tiny): fall back to the mean.
    total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = std::max(alpha[i], 0.0);
      total += out[i];
    }
  }
  for (double& v : out) v /= total;
  return out;
}

TabularMDP sample_mdp(const DirichletPosterior& task, const WorldPosterior& world,
                      const KnownnessCounter& known, double gamma, Rng& rng) {
  const auto& w = world.counts;
  if (task.n_states != w.n_states || task.n_actions != w.n_actions ||
      known.n_states != task.n_states || known.n_actions != task.n_actions ||
      !(task.support == w.support)) {
    throw std::invalid_argument("sample_mdp: posterior shapes differ");
  }
  TabularMDP mdp(task.n_states, task.n_actions, gamma);
  for (int s = 0; s < task.n_states; ++s) {
    for (int a = 0; a < task.n_actions; ++a) {
      const DirichletPosterior& source = known.known(s, a) ? task : w;
      const auto row = sample_dirichlet(source.counts(s, a), rng);
      std::copy(row.begin(), row.end(), mdp.row(s, a).begin());
      mdp.reward_at(s, a) = std::clamp(source.mean_reward(s, a), 0.0, 1.0);
    }
  }
  return mdp;
}

namespace {

nlohmann::json nest(const std::vector<double>& flat, int n_states, int n_actions, int width) {
  nlohmann::json out = nlohmann::json::array();
  for (int s = 0; s < n_states; ++s) {
    nlohmann::json per_s = nlohmann::json::array();
    for (int a = 0; a < n_actions; ++a) {
      const auto start = (static_cast<std::size_t>(s) * n_actions + a) * width;
      per_s.push_back(std::vector<double>(flat.begin() + start, flat.begin() + start + width));
    }
    out.push_back(std::move(per_s));
  }
  return out;
}

std::vector<double> flatten(const nlohmann::json& j, int n_states, int n_actions, int width) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n_states) * n_actions * width);
  if (j.size() != static_cast<std::size_t>(n_states)) {
    throw std::invalid_argument("posterior json: state dimension mismatch");
  }
  for (const auto& per_s : j) {
    if (per_s.size() != static_cast<std::size_t>(n_actions)) {
      throw std::invalid_argument("posterior json: action dimension mismatch");
    }
    for (const auto& row : per_s) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(width)) {
        throw std::invalid_argument("posterior json: row width mismatch");
      }
      flat.insert(flat.end(), values.begin(), values.end());
    }
  }
  return flat;
}

}  // namespace

void to_json(nlohmann::json& j, const DirichletPosterior& p) {
  j = nlohmann::json{{"n_states", p.n_states},
                     {"n_actions", p.n_actions},
                     {"reward_support", p.support.values},
                     {"pseudo_counts", nest(p.pseudo_counts, p.n_states, p.n_actions, p.n_states)},
                     {"reward_counts",
                      nest(p.reward_counts, p.n_states, p.n_actions, p.support.size())}};
}

void from_json(const nlohmann::json& j, DirichletPosterior& p) {
  DirichletPosterior out;
  const auto& pc = j.at("pseudo_counts");
  out.n_states = j.contains("n_states") ? j.at("n_states").get<int>()
                                        : static_cast<int>(pc.size());
  out.n_actions = j.contains("n_actions") ? j.at("n_actions").get<int>()
                                          : static_cast<int>(pc.at(0).size());
  out.support.values = j.at("reward_support").get<std::vector<double>>();
  out.pseudo_counts = flatten(pc, out.n_states, out.n_actions, out.n_states);
  out.reward_counts =
      flatten(j.at("reward_counts"), out.n_states, out.n_actions, out.support.size());
  out.validate();
  p = std::move(out);
}

void to_json(nlohmann::json& j, const WorldPosterior& w) {
  to_json(j, w.counts);
  j["kappa"] = w.kappa;
}

void from_json(const nlohmann::json& j, WorldPosterior& w) {
  from_json(j, w.counts);
  w.kappa = j.at("kappa").get<double>();
}

}  // namespace lifelong
