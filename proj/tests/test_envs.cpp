#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "mad/envs.hpp"
#include "mad/rng.hpp"
#include "testing_util.hpp"

using namespace mad;

TEST_CASE("cliffwalking ground truth: the classic distances") {
  CliffWalkingEnv env;
  CHECK(env.state_count() == 38);  // 4*12 minus 10 cliff cells
  const GroundTruthMAD gt = env.ground_truth();

  // Around the cliff: up, 11 right, down.
  CHECK(gt.at(env.start_id(), env.goal_id()) == 13);

  // Asymmetry witness: the cell above cliff column 10 falls back to start in
  // one step, while walking there takes 11.
  const int above_cliff = env.id_of(10, 1);
  CHECK(gt.at(above_cliff, env.start_id()) == 1);
  CHECK(gt.at(env.start_id(), above_cliff) == 11);

  for (int s = 0; s < env.state_count(); ++s) CHECK(gt.at(s, s) == 0);

  // Matches the BFS oracle on the full graph.
  const GroundTruthMAD bfs = testing::bfs_all_pairs(env.state_count(), env.one_step_relation());
  CHECK(gt.d == bfs.d);
}

TEST_CASE("cliffwalking dynamics: falls teleport, borders clip") {
  CliffWalkingEnv env;
  std::mt19937_64 rng(1);
  const int above = env.id_of(5, 1);
  CHECK(env.step(above, 1, rng) == env.start_id());  // DOWN into the cliff
  CHECK(env.step(env.start_id(), 1, rng) == env.start_id());  // DOWN clipped at border
  CHECK(env.step(env.start_id(), 2, rng) == env.start_id());  // LEFT clipped
  CHECK(env.step(env.start_id(), 0, rng) == env.id_of(0, 1)); // UP
  // Goal is a plain cell: stepping out of it works.
  CHECK(env.step(env.goal_id(), 0, rng) == env.id_of(11, 1));
}

TEST_CASE("keydoor: the key never reverts and the door needs it") {
  KeyDoorGridWorldEnv env;
  CHECK(env.state_count() == 312);  // 157 free cells with key, 155 without

  const GroundTruthMAD gt = env.ground_truth();

  // k=1 -> k=0 is impossible; spot-check plus a full scan below via BFS.
  int with_key = env.id_of(8, 6, 1);
  int without_key = env.id_of(1, 1, 0);
  REQUIRE(with_key >= 0);
  REQUIRE(without_key >= 0);
  CHECK_FALSE(gt.finite(with_key, without_key));
  CHECK(gt.finite(without_key, with_key));

  // Forward distance decomposes through the key cell.
  const int target = env.id_of(9, 6, 1);
  const int key_cell = env.id_of(KeyDoorGridWorldEnv::kKeyX, KeyDoorGridWorldEnv::kKeyY, 1);
  CHECK(gt.at(without_key, target) == gt.at(without_key, key_cell) + gt.at(key_cell, target));

  // Full table matches BFS over the determinized state graph.
  const GroundTruthMAD bfs = testing::bfs_all_pairs(env.state_count(), env.one_step_relation());
  CHECK(gt.d == bfs.d);
}

TEST_CASE("keydoor dynamics: wall blocks, door opens with key") {
  KeyDoorGridWorldEnv env;
  std::mt19937_64 rng(2);
  // Moving into the wall column without the key: stay.
  const int beside_wall = env.id_of(5, 3, 0);
  REQUIRE(beside_wall >= 0);
  CHECK(env.step(beside_wall, 3, rng) == beside_wall);  // RIGHT into wall
  // Moving onto the door cell without key: stay.
  const int beside_door = env.id_of(5, 6, 0);
  REQUIRE(beside_door >= 0);
  CHECK(env.step(beside_door, 3, rng) == beside_door);
  // With the key the door is passable.
  const int beside_door_key = env.id_of(5, 6, 1);
  CHECK(env.step(beside_door_key, 3, rng) == env.id_of(6, 6, 1));
  // Entering the key cell flips k.
  const int near_key = env.id_of(2, 3, 0);
  CHECK(env.step(near_key, 3, rng) == env.id_of(3, 3, 1));
}

TEST_CASE("noisy gridworld: Manhattan ground truth") {
  NoisyGridWorldEnv env(0.1);
  const GroundTruthMAD gt = env.ground_truth();
  CHECK(gt.at(env.id_of(0, 0), env.id_of(12, 12)) == 24);
  for (int a = 0; a < env.state_count(); ++a) {
    const int ax = a % 13, ay = a / 13;
    for (int b = 0; b < env.state_count(); ++b) {
      const int bx = b % 13, by = b / 13;
      CHECK(gt.at(a, b) == std::abs(ax - bx) + std::abs(ay - by));
    }
  }
}

TEST_CASE("noisy gridworld: empirical support equals the declared relation") {
  NoisyGridWorldEnv env(0.1);
  auto rng = seeded_engine(12345, 0);
  std::map<int, std::set<int>> declared;
  for (const auto& [from, to] : env.one_step_relation()) declared[from].insert(to);

  // Sample transitions from a few representative cells: corner, edge, interior.
  for (int state : {env.id_of(0, 0), env.id_of(5, 0), env.id_of(6, 6)}) {
    std::set<int> seen;
    for (int trial = 0; trial < 10000; ++trial) {
      std::uniform_int_distribution<int> action(0, 3);
      seen.insert(env.step(state, action(rng), rng));
    }
    CHECK(seen == declared[state]);
  }
}

TEST_CASE("noisy gridworld: observation carries fresh noise") {
  NoisyGridWorldEnv env(0.5);
  auto rng = seeded_engine(7, 0);
  const auto a = env.observation(env.id_of(3, 4), rng);
  const auto b = env.observation(env.id_of(3, 4), rng);
  CHECK(a[0] == 3.0);
  CHECK(a[1] == 4.0);
  CHECK(a[2] != b[2]);  // redrawn
  CHECK(a[3] != b[3]);
}

TEST_CASE("every declared relation matches 10k-sample empirical support, cliff and keydoor") {
  // Deterministic envs: the declared relation is exactly the set of
  // action-reachable next states.
  std::mt19937_64 rng(3);
  for (const char* name : {"cliffwalking", "keydoor"}) {
    const auto env = make_discrete_env(name);
    std::map<int, std::set<int>> declared;
    for (const auto& [from, to] : env->one_step_relation()) declared[from].insert(to);
    for (int s = 0; s < env->state_count(); ++s) {
      std::set<int> seen;
      for (int a = 0; a < env->action_count(); ++a) seen.insert(env->step(s, a, rng));
      CHECK(seen == declared[s]);
    }
  }
}
