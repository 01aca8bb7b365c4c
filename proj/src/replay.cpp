#include "lifelong/replay.hpp"

#include <sstream>
#include <stdexcept>

namespace lifelong {

void ReplayBuffer::add(Transition t) {
  if (capacity_ == 0 || records_.size() < capacity_) {
    records_.push_back(std::move(t));
    return;
  }
  records_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

void ReplayBuffer::sample_into(std::size_t n, Rng& rng, std::vector<Transition>& out) const {
  if (records_.empty()) throw std::logic_error("ReplayBuffer::sample: empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
  for (std::size_t i = 0; i < n; ++i) out.push_back(records_[pick(rng)]);
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(n);
  sample_into(n, rng, out);
  return out;
}

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const Transition& t) {
  j = nlohmann::json{{"s", to_vec(t.state)},
                     {"a", to_vec(t.action)},
                     {"r", t.reward},
                     {"s2", to_vec(t.next_state)},
                     {"done", t.done}};
}

void from_json(const nlohmann::json& j, Transition& t) {
  t.state = from_vec(j.at("s").get<std::vector<double>>());
  t.action = from_vec(j.at("a").get<std::vector<double>>());
  t.reward = j.at("r").get<double>();
  t.next_state = from_vec(j.at("s2").get<std::vector<double>>());
  t.done = j.at("done").get<bool>();
}

std::string ReplayBuffer::to_jsonl() const {
  std::string out;
  // Emit in insertion order for bounded buffers that have wrapped.
  const std::size_t n = records_.size();
  const std::size_t start = (capacity_ != 0 && n == capacity_) ? next_ : 0;
  for (std::size_t i = 0; i < n; ++i) {
    out += nlohmann::json(records_[(start + i) % n]).dump();
    out += '\n';
  }
  return out;
}

ReplayBuffer ReplayBuffer::from_jsonl(const std::string& text, std::size_t capacity) {
  ReplayBuffer buf(capacity);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    buf.add(nlohmann::json::parse(line).get<Transition>());
  }
  return buf;
}

}  // namespace lifelong
