#include "lifelong/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lifelong {

TabularMDP::TabularMDP(int n_states_, int n_actions_, double gamma_)
    : n_states(n_states_), n_actions(n_actions_), gamma(gamma_) {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("TabularMDP: n_states and n_actions must be positive");
  }
  transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  reward.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
}

std::span<double> TabularMDP::row(int s, int a) {
  return {transition.data() + pair_index(s, a) * static_cast<std::size_t>(n_states),
          static_cast<std::size_t>(n_states)};
}

std::span<const double> TabularMDP::row(int s, int a) const {
  return {transition.data() + pair_index(s, a) * static_cast<std::size_t>(n_states),
          static_cast<std::size_t>(n_states)};
}

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("TabularMDP: n_states and n_actions must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("TabularMDP: gamma must lie in [0, 1)");
  }
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  if (transition.size() != pairs * n_states || reward.size() != pairs) {
    throw std::invalid_argument("TabularMDP: table sizes do not match dimensions");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (double p : row(s, a)) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw std::invalid_argument("TabularMDP: transition entry outside [0, 1] at s=" +
                                      std::to_string(s) + " a=" + std::to_string(a));
        }
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("TabularMDP: transition row does not sum to 1 at s=" +
                                    std::to_string(s) + " a=" + std::to_string(a));
      }
      const double r = reward_at(s, a);
      if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("TabularMDP: reward outside [0, 1] at s=" +
                                    std::to_string(s) + " a=" + std::to_string(a));
      }
    }
  }
}

namespace {

// Unchecked backup used inside the solver loops.
double backup(const TabularMDP& mdp, std::span<const double> values, int s, int a) {
  double expected = 0.0;
  const auto p = mdp.row(s, a);
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    expected += p[s2] * values[s2];
  }
  return mdp.reward_at(s, a) + mdp.gamma * expected;
}

}  // namespace

double bellman_backup(const TabularMDP& mdp, std::span<const double> values, int s, int a) {
  if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions) {
    throw std::out_of_range("bellman_backup: state or action index out of range");
  }
  if (values.size() != static_cast<std::size_t>(mdp.n_states)) {
    throw std::out_of_range("bellman_backup: values length does not match n_states");
  }
  return backup(mdp, values, s, a);
}

std::vector<double> bellman_sweep(const TabularMDP& mdp, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(mdp.n_states)) {
    throw std::out_of_range("bellman_sweep: values length does not match n_states");
  }
  std::vector<double> next(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = backup(mdp, values, s, 0);
    for (int a = 1; a < mdp.n_actions; ++a) {
      best = std::max(best, backup(mdp, values, s, a));
    }
    next[s] = best;
  }
  return next;
}

std::vector<int> greedy_policy(const TabularMDP& mdp, std::span<const double> values) {
  std::vector<int> policy(mdp.n_states, 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = backup(mdp, values, s, 0);
    for (int a = 1; a < mdp.n_actions; ++a) {
      const double q = backup(mdp, values, s, a);
      if (q > best) {  // strict: lowest index wins ties
        best = q;
        policy[s] = a;
      }
    }
  }
  return policy;
}

ValueFunction value_iteration(const TabularMDP& mdp, double tolerance) {
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("value_iteration: tolerance must be positive");
  }
  mdp.validate();

  ValueFunction out;
  out.values.assign(mdp.n_states, 0.0);
  while (true) {
    auto next = bellman_sweep(mdp, out.values);
    double delta = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      delta = std::max(delta, std::abs(next[s] - out.values[s]));
    }
    out.values = std::move(next);
    ++out.sweeps;
    if (delta <= tolerance) break;
  }
  out.policy = greedy_policy(mdp, out.values);
  return out;
}

void to_json(nlohmann::json& j, const TabularMDP& mdp) {
  nlohmann::json transition = nlohmann::json::array();
  nlohmann::json reward = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    nlohmann::json t_s = nlohmann::json::array();
    nlohmann::json r_s = nlohmann::json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto r = mdp.row(s, a);
      t_s.push_back(std::vector<double>(r.begin(), r.end()));
      r_s.push_back(mdp.reward_at(s, a));
    }
    transition.push_back(std::move(t_s));
    reward.push_back(std::move(r_s));
  }
  j = nlohmann::json{{"n_states", mdp.n_states},
                     {"n_actions", mdp.n_actions},
                     {"gamma", mdp.gamma},
                     {"transition", std::move(transition)},
                     {"reward", std::move(reward)}};
}

void from_json(const nlohmann::json& j, TabularMDP& mdp) {
  TabularMDP out(j.at("n_states").get<int>(), j.at("n_actions").get<int>(),
                 j.at("gamma").get<double>());
  const auto& t = j.at("transition");
  const auto& r = j.at("reward");
  if (t.size() != static_cast<std::size_t>(out.n_states) ||
      r.size() != static_cast<std::size_t>(out.n_states)) {
    throw std::invalid_argument("TabularMDP json: outer dimension mismatch");
  }
  for (int s = 0; s < out.n_states; ++s) {
    if (t[s].size() != static_cast<std::size_t>(out.n_actions) ||
        r[s].size() != static_cast<std::size_t>(out.n_actions)) {
      throw std::invalid_argument("TabularMDP json: action dimension mismatch");
    }
    for (int a = 0; a < out.n_actions; ++a) {
      const auto probs = t[s][a].get<std::vector<double>>();
      if (probs.size() != static_cast<std::size_t>(out.n_states)) {
        throw std::invalid_argument("TabularMDP json: successor dimension mismatch");
      }
      std::copy(probs.begin(), probs.end(), out.row(s, a).begin());
      out.reward_at(s, a) = r[s][a].get<double>();
    }
  }
  out.validate();
  mdp = std::move(out);
}

}  // namespace lifelong
