#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mad/shortest_path.hpp"

namespace mad {

// A simulator with an enumerable latent state set. States are dense ids;
// observations are real vectors (possibly noisy). step() must stay within
// the declared one-step relation.
class DiscreteEnv {
 public:
  virtual ~DiscreteEnv() = default;

  virtual std::string name() const = 0;
  virtual int state_count() const = 0;
  virtual int action_count() const = 0;
  virtual int obs_dim() const = 0;

  virtual int initial_state(std::mt19937_64& rng) const = 0;
  virtual int step(int state, int action, std::mt19937_64& rng) const = 0;
  virtual void observe(int state, std::mt19937_64& rng, double* out) const = 0;

  // All (s, s') with some action reaching s' from s in one step, self-loops
  // included where moves clip or teleport onto the same cell.
  virtual std::vector<std::pair<int, int>> one_step_relation() const = 0;

  // Human-readable state description for traces and docs.
  virtual std::string state_label(int state) const = 0;

  GroundTruthMAD ground_truth() const { return floyd_warshall(state_count(), one_step_relation()); }

  std::vector<double> observation(int state, std::mt19937_64& rng) const {
    std::vector<double> out(static_cast<size_t>(obs_dim()));
    observe(state, rng, out.data());
    return out;
  }
};

// 4 x 12 grid, start bottom-left, goal bottom-right, cliff along the bottom
// row between them. Entering a cliff cell teleports back to the start; the
// episode continues. Deterministic moves clipped at the borders.
class CliffWalkingEnv : public DiscreteEnv {
 public:
  static constexpr int kWidth = 12;
  static constexpr int kHeight = 4;

  CliffWalkingEnv();

  std::string name() const override { return "cliffwalking"; }
  int state_count() const override { return static_cast<int>(states_.size()); }
  int action_count() const override { return 4; }
  int obs_dim() const override { return 2; }
  int initial_state(std::mt19937_64& rng) const override;
  int step(int state, int action, std::mt19937_64& rng) const override;
  void observe(int state, std::mt19937_64& rng, double* out) const override;
  std::vector<std::pair<int, int>> one_step_relation() const override;
  std::string state_label(int state) const override;

  int start_id() const { return start_id_; }
  int goal_id() const { return goal_id_; }
  // -1 for cliff cells (not states).
  int id_of(int x, int y) const { return cell_to_id_[static_cast<size_t>(y * kWidth + x)]; }
  bool is_cliff(int x, int y) const { return y == 0 && x >= 1 && x <= 10; }

 private:
  std::vector<std::pair<int, int>> states_;  // id -> (x, y)
  std::vector<int> cell_to_id_;
  int start_id_ = 0;
  int goal_id_ = 0;
};

// 13 x 13 grid split by a wall at column 6 with a single door at (6,6).
// The key sits at (3,3); entering its cell picks it up permanently, and the
// door is passable only while holding it. State is (x, y, k).
class KeyDoorGridWorldEnv : public DiscreteEnv {
 public:
  static constexpr int kSize = 13;
  static constexpr int kWallX = 6;
  static constexpr int kDoorY = 6;
  static constexpr int kKeyX = 3;
  static constexpr int kKeyY = 3;

  KeyDoorGridWorldEnv();

  std::string name() const override { return "keydoor"; }
  int state_count() const override { return static_cast<int>(states_.size()); }
  int action_count() const override { return 4; }
  int obs_dim() const override { return 3; }
  int initial_state(std::mt19937_64& rng) const override;
  int step(int state, int action, std::mt19937_64& rng) const override;
  void observe(int state, std::mt19937_64& rng, double* out) const override;
  std::vector<std::pair<int, int>> one_step_relation() const override;
  std::string state_label(int state) const override;

  bool is_wall(int x, int y) const { return x == kWallX && y != kDoorY; }
  // -1 for impossible combinations (walls, keyless key/door cells).
  int id_of(int x, int y, int k) const;
  int start_id() const { return start_id_; }

 private:
  struct State {
    int x, y, k;
  };
  std::vector<State> states_;
  std::vector<int> lookup_;  // (k * 13 + y) * 13 + x -> id
  int start_id_ = 0;
};

// 13 x 13 lattice with slippery moves: the intended action is applied with
// probability 0.5, otherwise a uniformly random one. Observations append two
// fresh N(0, sigma^2) noise coordinates to (x, y).
class NoisyGridWorldEnv : public DiscreteEnv {
 public:
  static constexpr int kSize = 13;

  explicit NoisyGridWorldEnv(double sigma = 0.1) : sigma_(sigma) {}

  std::string name() const override { return "noisygrid"; }
  int state_count() const override { return kSize * kSize; }
  int action_count() const override { return 4; }
  int obs_dim() const override { return 4; }
  int initial_state(std::mt19937_64& rng) const override;
  int step(int state, int action, std::mt19937_64& rng) const override;
  void observe(int state, std::mt19937_64& rng, double* out) const override;
  std::vector<std::pair<int, int>> one_step_relation() const override;
  std::string state_label(int state) const override;

  double sigma() const { return sigma_; }
  int id_of(int x, int y) const { return y * kSize + x; }

 private:
  double sigma_;
};

std::unique_ptr<DiscreteEnv> make_discrete_env(const std::string& name, double sigma = 0.1);

}  // namespace mad
