#include "mad/planner.hpp"

#include <memory>

namespace mad {

namespace {

std::vector<double> distances_to_goal(const Tensor& state_emb, const Tensor& goal_emb,
                                      const QuasimetricSpec& spec) {
  std::vector<double> out(static_cast<size_t>(state_emb.rows()));
  const size_t cols = static_cast<size_t>(state_emb.cols());
  std::span<const double> goal(goal_emb.row_ptr(0), cols);
  for (int64_t r = 0; r < state_emb.rows(); ++r) {
    out[static_cast<size_t>(r)] =
        quasimetric_value(std::span<const double>(state_emb.row_ptr(r), cols), goal, spec);
  }
  return out;
}

}  // namespace

BatchScorer<int> learned_scorer(const NetworkParams& params, const QuasimetricSpec& spec,
                                const DiscreteEnv& env, uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seeded_engine(seed, 404));
  return [&params, spec, &env, rng](const std::vector<int>& states, const int& goal) {
    Tensor obs(static_cast<int64_t>(states.size()) + 1, env.obs_dim());
    for (size_t i = 0; i < states.size(); ++i) {
      env.observe(states[i], *rng, obs.row_ptr(static_cast<int64_t>(i)));
    }
    env.observe(goal, *rng, obs.row_ptr(static_cast<int64_t>(states.size())));
    const Tensor emb = network_apply(params, obs);
    Tensor goal_emb(1, emb.cols());
    std::copy(emb.row_ptr(emb.rows() - 1), emb.row_ptr(emb.rows() - 1) + emb.cols(),
              goal_emb.row_ptr(0));
    Tensor state_emb(emb.rows() - 1, emb.cols());
    std::copy(emb.values.begin(), emb.values.begin() + state_emb.size(), state_emb.values.begin());
    return distances_to_goal(state_emb, goal_emb, spec);
  };
}

BatchScorer<PointMassState> learned_scorer(const NetworkParams& params, const QuasimetricSpec& spec,
                                           const PointMaze& maze) {
  return [&params, spec, &maze](const std::vector<PointMassState>& states, const PointMassState& goal) {
    Tensor obs(static_cast<int64_t>(states.size()) + 1, 4);
    for (size_t i = 0; i < states.size(); ++i) {
      const auto o = maze.observe(states[i]);
      std::copy(o.begin(), o.end(), obs.row_ptr(static_cast<int64_t>(i)));
    }
    const auto go = maze.observe(goal);
    std::copy(go.begin(), go.end(), obs.row_ptr(static_cast<int64_t>(states.size())));
    const Tensor emb = network_apply(params, obs);
    Tensor goal_emb(1, emb.cols());
    std::copy(emb.row_ptr(emb.rows() - 1), emb.row_ptr(emb.rows() - 1) + emb.cols(),
              goal_emb.row_ptr(0));
    Tensor state_emb(emb.rows() - 1, emb.cols());
    std::copy(emb.values.begin(), emb.values.begin() + state_emb.size(), state_emb.values.begin());
    return distances_to_goal(state_emb, goal_emb, spec);
  };
}

}  // namespace mad
