#include <set>

#include "doctest.h"
#include "lifelong/replay.hpp"

using namespace lifelong;

namespace {

Transition make_transition(double v) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(2, v);
  t.action = Eigen::VectorXd::Constant(1, -v);
  t.reward = v * 0.5;
  t.next_state = Eigen::VectorXd::Constant(2, v + 1.0);
  t.done = static_cast<int>(v) % 3 == 0;
  return t;
}

}  // namespace

TEST_CASE("bounded buffer overwrites the oldest record") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.add(make_transition(i));
  REQUIRE(buf.size() == 3);
  std::multiset<double> rewards;
  for (const auto& t : buf.records()) rewards.insert(t.reward);
  CHECK(rewards == std::multiset<double>{1.0, 1.5, 2.0});
}

TEST_CASE("sampling draws only stored records") {
  ReplayBuffer buf;
  for (int i = 0; i < 10; ++i) buf.add(make_transition(i));
  Rng rng(4);
  const auto batch = buf.sample(500, rng);
  CHECK(batch.size() == 500);
  std::set<double> seen;
  for (const auto& t : batch) {
    seen.insert(t.reward);
    CHECK(t.reward >= 0.0);
    CHECK(t.reward <= 4.5);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("jsonl round trip is exact") {
  ReplayBuffer buf;
  buf.add(make_transition(0.1));
  buf.add(make_transition(1.0 / 3.0));
  buf.add(make_transition(-7.25));
  const auto text = buf.to_jsonl();
  const auto back = ReplayBuffer::from_jsonl(text);
  REQUIRE(back.size() == buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(back.records()[i] == buf.records()[i]);
  CHECK(back.to_jsonl() == text);
}

TEST_CASE("sampling an empty buffer throws") {
  ReplayBuffer buf;
  Rng rng(1);
  CHECK_THROWS(buf.sample(1, rng));
}
