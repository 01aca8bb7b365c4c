#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lifelong/random.hpp"

namespace lifelong {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;

  bool operator==(const Transition& o) const {
    return state == o.state && action == o.action && reward == o.reward &&
           next_state == o.next_state && done == o.done;
  }
};

/// Transitions of a single task. Capacity 0 means unbounded; when bounded,
/// the oldest record is overwritten.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  void add(Transition t);
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<Transition>& records() const { return records_; }

  /// `n` records drawn uniformly with replacement.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;
  void sample_into(std::size_t n, Rng& rng, std::vector<Transition>& out) const;

  /// One JSON object per line.
  std::string to_jsonl() const;
  static ReplayBuffer from_jsonl(const std::string& text, std::size_t capacity = 0);

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> records_;
};

void to_json(nlohmann::json& j, const Transition& t);
void from_json(const nlohmann::json& j, Transition& t);

}  // namespace lifelong
