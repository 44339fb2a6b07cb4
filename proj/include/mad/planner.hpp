#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mad/envs.hpp"
#include "mad/errors.hpp"
#include "mad/network.hpp"
#include "mad/pointmaze.hpp"
#include "mad/quasimetric.hpp"
#include "mad/rng.hpp"

namespace mad {

struct PlanConfig {
  int candidates = 100;  // K
  int horizon = 10;      // H
  int max_episode_steps = 400;
  double goal_tolerance = 0.5;  // Euclidean, continuous envs; discrete = exact match
};

// Receding-horizon random shooting. The simulator adapter supplies:
//   using State = ...;
//   int action_count() const;
//   State sim_step(const State&, int action, std::mt19937_64&) const;
//   bool reached(const State&, const State& goal, double tolerance) const;
// Candidate rollouts run on cloned states and never touch the caller's
// environment state. The scorer returns d(state, goal) for a batch of
// states, letting learned models encode them in one pass.

template <typename State>
using BatchScorer = std::function<std::vector<double>(const std::vector<State>&, const State& goal)>;

// min over the rollout states of d(state, goal).
inline double score_rollout(const std::vector<double>& distances) {
  if (distances.empty()) throw InputError("score_rollout: empty rollout");
  double best = distances[0];
  for (double d : distances) best = std::min(best, d);
  return best;
}

template <typename Sim>
struct PlanStepResult {
  int action = 0;
  double score = 0.0;
};

// Samples K uniformly random action sequences of length H, simulates each,
// scores by the minimum distance-to-goal along the rollout, and returns the
// first action of the best sequence (ties: lowest candidate index).
template <typename Sim>
PlanStepResult<Sim> plan_step(const Sim& sim, const typename Sim::State& state,
                              const typename Sim::State& goal,
                              const BatchScorer<typename Sim::State>& scorer, const PlanConfig& cfg,
                              std::mt19937_64& rng) {
  if (cfg.candidates < 1 || cfg.horizon < 1) throw ConfigError("planner needs K >= 1 and H >= 1");
  std::uniform_int_distribution<int> pick(0, sim.action_count() - 1);

  std::vector<int> first_actions(static_cast<size_t>(cfg.candidates));
  std::vector<typename Sim::State> rollout_states;
  rollout_states.reserve(static_cast<size_t>(cfg.candidates) * cfg.horizon);
  for (int k = 0; k < cfg.candidates; ++k) {
    typename Sim::State s = state;
    for (int h = 0; h < cfg.horizon; ++h) {
      const int action = pick(rng);
      if (h == 0) first_actions[static_cast<size_t>(k)] = action;
      s = sim.sim_step(s, action, rng);
      rollout_states.push_back(s);
    }
  }

  const std::vector<double> distances = scorer(rollout_states, goal);
  if (distances.size() != rollout_states.size()) {
    throw InputError("planner scorer returned wrong number of distances");
  }

  int best_k = 0;
  double best_score = 0.0;
  for (int k = 0; k < cfg.candidates; ++k) {
    const size_t offset = static_cast<size_t>(k) * cfg.horizon;
    double score = distances[offset];
    for (int h = 1; h < cfg.horizon; ++h) score = std::min(score, distances[offset + h]);
    if (k == 0 || score < best_score) {
      best_score = score;
      best_k = k;
    }
  }
  return {first_actions[static_cast<size_t>(best_k)], best_score};
}

template <typename State>
struct EpisodeTraceRow {
  int step;
  State state;
  int action;
  double score;
};

template <typename State>
struct EpisodeResult {
  bool success = false;
  int steps = 0;
  std::vector<EpisodeTraceRow<State>> trace;
};

template <typename Sim>
EpisodeResult<typename Sim::State> run_episode(const Sim& sim, const typename Sim::State& start,
                                               const typename Sim::State& goal,
                                               const BatchScorer<typename Sim::State>& scorer,
                                               const PlanConfig& cfg, uint64_t seed) {
  auto rng = seeded_engine(seed, 777);
  EpisodeResult<typename Sim::State> result;
  typename Sim::State state = start;
  if (sim.reached(state, goal, cfg.goal_tolerance)) {
    result.success = true;
    return result;
  }
  for (int step = 0; step < cfg.max_episode_steps; ++step) {
    const auto plan = plan_step(sim, state, goal, scorer, cfg, rng);
    result.trace.push_back({step, state, plan.action, plan.score});
    state = sim.sim_step(state, plan.action, rng);
    ++result.steps;
    if (sim.reached(state, goal, cfg.goal_tolerance)) {
      result.success = true;
      break;
    }
  }
  return result;
}

// --- Simulator adapters ----------------------------------------------------

struct DiscreteSim {
  const DiscreteEnv* env;
  using State = int;
  int action_count() const { return env->action_count(); }
  State sim_step(const State& s, int action, std::mt19937_64& rng) const {
    return env->step(s, action, rng);
  }
  bool reached(const State& s, const State& goal, double) const { return s == goal; }
};

// Candidate actions for the continuous maze: forces discretized to
// {-1, 0, 1} per axis, nine combinations.
struct PointMazeSim {
  const PointMaze* maze;
  using State = PointMassState;
  int action_count() const { return 9; }
  State sim_step(const State& s, int action, std::mt19937_64&) const {
    const double ax = static_cast<double>(action % 3 - 1);
    const double ay = static_cast<double>(action / 3 - 1);
    return maze->step(s, ax, ay);
  }
  bool reached(const State& s, const State& goal, double tolerance) const {
    return std::hypot(s.px - goal.px, s.py - goal.py) <= tolerance;
  }
};

// --- Scorers ----------------------------------------------------------------

// Exact MAD lookup between latent ids.
inline BatchScorer<int> oracle_scorer(const GroundTruthMAD& gt) {
  return [&gt](const std::vector<int>& states, const int& goal) {
    std::vector<double> d(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
      d[i] = gt.finite(states[i], goal) ? static_cast<double>(gt.at(states[i], goal)) : 1e18;
    }
    return d;
  };
}

// Exact MAD over maze cells, looked up from continuous positions.
inline BatchScorer<PointMassState> oracle_scorer(const GroundTruthMAD& gt, const PointMaze& maze) {
  return [&gt, &maze](const std::vector<PointMassState>& states, const PointMassState& goal) {
    const int goal_cell = maze.cell_id(goal.px, goal.py);
    std::vector<double> d(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
      const int cell = maze.cell_id(states[i].px, states[i].py);
      d[i] = (cell >= 0 && goal_cell >= 0 && gt.finite(cell, goal_cell))
                 ? static_cast<double>(gt.at(cell, goal_cell))
                 : 1e18;
    }
    return d;
  };
}

// Learned metric on a discrete env: states observed (noise redrawn), encoded
// in one batch, measured against the goal embedding.
BatchScorer<int> learned_scorer(const NetworkParams& params, const QuasimetricSpec& spec,
                                const DiscreteEnv& env, uint64_t seed);
BatchScorer<PointMassState> learned_scorer(const NetworkParams& params, const QuasimetricSpec& spec,
                                           const PointMaze& maze);

}  // namespace mad
