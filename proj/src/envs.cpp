#include "mad/envs.hpp"

#include <algorithm>
#include <set>

#include "mad/errors.hpp"

namespace mad {

namespace {

// dx, dy per action: UP, DOWN, LEFT, RIGHT. y grows upward.
constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {1, -1, 0, 0};

int clip(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

// ---------------------------------------------------------------------------
// CliffWalking

CliffWalkingEnv::CliffWalkingEnv() : cell_to_id_(kWidth * kHeight, -1) {
  for (int y = 0; y < kHeight; ++y) {
    for (int x = 0; x < kWidth; ++x) {
      if (is_cliff(x, y)) continue;
      cell_to_id_[static_cast<size_t>(y * kWidth + x)] = static_cast<int>(states_.size());
      states_.emplace_back(x, y);
    }
  }
  start_id_ = id_of(0, 0);
  goal_id_ = id_of(kWidth - 1, 0);
}

int CliffWalkingEnv::initial_state(std::mt19937_64&) const { return start_id_; }

int CliffWalkingEnv::step(int state, int action, std::mt19937_64&) const {
  if (action < 0 || action >= 4) throw InputError("cliffwalking: bad action");
  const auto [x, y] = states_[static_cast<size_t>(state)];
  const int nx = clip(x + kDx[action], 0, kWidth - 1);
  const int ny = clip(y + kDy[action], 0, kHeight - 1);
  if (is_cliff(nx, ny)) return start_id_;
  return id_of(nx, ny);
}

void CliffWalkingEnv::observe(int state, std::mt19937_64&, double* out) const {
  const auto [x, y] = states_[static_cast<size_t>(state)];
  out[0] = static_cast<double>(x);
  out[1] = static_cast<double>(y);
}

std::vector<std::pair<int, int>> CliffWalkingEnv::one_step_relation() const {
  std::set<std::pair<int, int>> edges;
  std::mt19937_64 rng(0);  // unused by the deterministic step
  for (int s = 0; s < state_count(); ++s) {
    for (int a = 0; a < 4; ++a) edges.emplace(s, step(s, a, rng));
  }
  return {edges.begin(), edges.end()};
}

std::string CliffWalkingEnv::state_label(int state) const {
  const auto [x, y] = states_[static_cast<size_t>(state)];
  return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

// ---------------------------------------------------------------------------
// KeyDoorGridWorld

KeyDoorGridWorldEnv::KeyDoorGridWorldEnv() : lookup_(2 * kSize * kSize, -1) {
  for (int k = 0; k <= 1; ++k) {
    for (int y = 0; y < kSize; ++y) {
      for (int x = 0; x < kSize; ++x) {
        if (is_wall(x, y)) continue;
        // Standing on the key cell implies holding the key, and the door
        // cannot be reached without it.
        if (k == 0 && x == kKeyX && y == kKeyY) continue;
        if (k == 0 && x == kWallX && y == kDoorY) continue;
        lookup_[static_cast<size_t>((k * kSize + y) * kSize + x)] = static_cast<int>(states_.size());
        states_.push_back({x, y, k});
      }
    }
  }
  start_id_ = id_of(1, 1, 0);
}

int KeyDoorGridWorldEnv::id_of(int x, int y, int k) const {
  if (x < 0 || x >= kSize || y < 0 || y >= kSize || k < 0 || k > 1) return -1;
  return lookup_[static_cast<size_t>((k * kSize + y) * kSize + x)];
}

int KeyDoorGridWorldEnv::initial_state(std::mt19937_64&) const { return start_id_; }

int KeyDoorGridWorldEnv::step(int state, int action, std::mt19937_64&) const {
  if (action < 0 || action >= 4) throw InputError("keydoor: bad action");
  const State s = states_[static_cast<size_t>(state)];
  int nx = clip(s.x + kDx[action], 0, kSize - 1);
  int ny = clip(s.y + kDy[action], 0, kSize - 1);
  const bool door = nx == kWallX && ny == kDoorY;
  if (is_wall(nx, ny) || (door && s.k == 0)) {
    nx = s.x;
    ny = s.y;
  }
  const int nk = (s.k == 1 || (nx == kKeyX && ny == kKeyY)) ? 1 : 0;
  return id_of(nx, ny, nk);
}

void KeyDoorGridWorldEnv::observe(int state, std::mt19937_64&, double* out) const {
  const State s = states_[static_cast<size_t>(state)];
  out[0] = static_cast<double>(s.x);
  out[1] = static_cast<double>(s.y);
  out[2] = static_cast<double>(s.k);
}

std::vector<std::pair<int, int>> KeyDoorGridWorldEnv::one_step_relation() const {
  std::set<std::pair<int, int>> edges;
  std::mt19937_64 rng(0);
  for (int s = 0; s < state_count(); ++s) {
    for (int a = 0; a < 4; ++a) edges.emplace(s, step(s, a, rng));
  }
  return {edges.begin(), edges.end()};
}

std::string KeyDoorGridWorldEnv::state_label(int state) const {
  const State s = states_[static_cast<size_t>(state)];
  return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ",k=" + std::to_string(s.k) + ")";
}

// ---------------------------------------------------------------------------
// NoisyGridWorld

int NoisyGridWorldEnv::initial_state(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> dist(0, state_count() - 1);
  return dist(rng);
}

int NoisyGridWorldEnv::step(int state, int action, std::mt19937_64& rng) const {
  if (action < 0 || action >= 4) throw InputError("noisygrid: bad action");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  int applied = action;
  if (coin(rng) >= 0.5) {
    std::uniform_int_distribution<int> pick(0, 3);
    applied = pick(rng);
  }
  const int x = state % kSize;
  const int y = state / kSize;
  const int nx = clip(x + kDx[applied], 0, kSize - 1);
  const int ny = clip(y + kDy[applied], 0, kSize - 1);
  return id_of(nx, ny);
}

void NoisyGridWorldEnv::observe(int state, std::mt19937_64& rng, double* out) const {
  std::normal_distribution<double> noise(0.0, sigma_);
  out[0] = static_cast<double>(state % kSize);
  out[1] = static_cast<double>(state / kSize);
  out[2] = noise(rng);
  out[3] = noise(rng);
}

std::vector<std::pair<int, int>> NoisyGridWorldEnv::one_step_relation() const {
  std::set<std::pair<int, int>> edges;
  for (int s = 0; s < state_count(); ++s) {
    const int x = s % kSize;
    const int y = s / kSize;
    for (int a = 0; a < 4; ++a) {
      edges.emplace(s, id_of(clip(x + kDx[a], 0, kSize - 1), clip(y + kDy[a], 0, kSize - 1)));
    }
  }
  return {edges.begin(), edges.end()};
}

std::string NoisyGridWorldEnv::state_label(int state) const {
  return "(" + std::to_string(state % kSize) + "," + std::to_string(state / kSize) + ")";
}

std::unique_ptr<DiscreteEnv> make_discrete_env(const std::string& name, double sigma) {
  if (name == "cliffwalking") return std::make_unique<CliffWalkingEnv>();
  if (name == "keydoor") return std::make_unique<KeyDoorGridWorldEnv>();
  if (name == "noisygrid") return std::make_unique<NoisyGridWorldEnv>(sigma);
  throw ConfigError("unknown discrete environment '" + name + "'");
}

}  // namespace mad
