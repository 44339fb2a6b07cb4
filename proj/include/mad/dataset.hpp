#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mad/envs.hpp"
#include "mad/pointmaze.hpp"

namespace mad {

// One rollout: a fixed-length sequence of observations. Latent state ids are
// carried for evaluation and support checks only; training never reads them.
struct Trajectory {
  int obs_dim = 0;
  std::vector<double> obs;      // length() * obs_dim, row-major
  std::vector<int> latent_ids;  // length()

  int length() const { return static_cast<int>(latent_ids.size()); }
  const double* row(int i) const { return obs.data() + static_cast<size_t>(i) * obs_dim; }
};

struct TrajectoryDataset {
  std::string env_name;
  int obs_dim = 0;
  uint64_t seed = 0;
  std::vector<Trajectory> trajectories;

  int64_t state_pool_size() const;
  int64_t transition_count() const;
  bool empty() const { return trajectories.empty(); }
};

// Index pairs into a dataset; (trajectory, index) addressing. gaps holds
// j - i for trajectory pairs and stays empty for random pairs.
struct PairRef {
  int trajectory;
  int index;
};

struct PairBatch {
  std::vector<PairRef> anchor;
  std::vector<PairRef> partner;
  std::vector<int> gaps;
};

// Uniform-random-policy rollouts, one rng stream per trajectory (stream id =
// trajectory index), so the result is deterministic given the seed.
TrajectoryDataset collect(const DiscreteEnv& env, int n_trajectories, int max_len, uint64_t seed);
TrajectoryDataset collect(const PointMaze& maze, int n_trajectories, int max_len, uint64_t seed);

// (s_i, s_j) ~ tau: trajectory uniform, then uniform over index pairs i < j.
PairBatch sample_objective_pairs(const TrajectoryDataset& ds, int batch, std::mt19937_64& rng);
// Same but restricted to 1 <= j - i <= h_c.
PairBatch sample_constraint_pairs(const TrajectoryDataset& ds, int h_c, int batch, std::mt19937_64& rng);
// Both endpoints uniform over the flattened state pool, independent; no gaps.
PairBatch sample_random_state_pairs(const TrajectoryDataset& ds, int batch, std::mt19937_64& rng);
// Bootstrapped-contrastive pairs: anchor uniform over trajectory states that
// have a successor, partner uniform over the pool; no gaps.
PairBatch sample_td_random_pairs(const TrajectoryDataset& ds, int batch, std::mt19937_64& rng);

const double* obs_of(const TrajectoryDataset& ds, PairRef ref);

// Line-delimited text format; doubles serialized with round-trip precision,
// so save/load is bit-exact and reruns are byte-identical.
void save_dataset(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset load_dataset(const std::string& path);

}  // namespace mad
