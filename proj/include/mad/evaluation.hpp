#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "mad/envs.hpp"
#include "mad/network.hpp"
#include "mad/pointmaze.hpp"
#include "mad/quasimetric.hpp"
#include "mad/shortest_path.hpp"

namespace mad {

struct MetricsReport {
  double spearman = 0.0;
  double pearson = 0.0;
  double ratio_cv = 0.0;
  int64_t n_pairs = 0;              // pairs entering the correlations
  int64_t n_ratio_pairs = 0;        // pairs entering ratio_cv (true distance > 0)
  int64_t n_excluded_infinite = 0;  // unreachable pairs, dropped from all metrics
};

// Product-moment correlation. Throws on fewer than two points or zero
// variance on either side.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks; ties receive their mean rank.
double spearman_correlation(std::span<const double> a, std::span<const double> b);

std::vector<double> average_ranks(std::span<const double> values);

// Population sigma/mu of the ratios pred/true; all true values must be > 0.
double ratio_cv(std::span<const double> true_d, std::span<const double> pred_d);

// Compares a predicted distance function against the exact table over latent
// state pairs. Enumerates all ordered pairs when their count fits the budget,
// otherwise samples that many pairs uniformly. Infinite-ground-truth pairs
// are excluded everywhere; zero-distance pairs only from ratio_cv.
MetricsReport evaluate_pairs(const std::function<double(int, int)>& predicted, const GroundTruthMAD& gt,
                             int64_t pair_budget, std::mt19937_64& rng);

// Embeds every latent state once (noise redrawn per state for noisy
// observations) and evaluates the quasimetric on embedding pairs.
MetricsReport evaluate_network(const NetworkParams& params, const QuasimetricSpec& spec,
                               const DiscreteEnv& env, const GroundTruthMAD& gt, int64_t pair_budget,
                               std::mt19937_64& rng);

// Continuous variant: oracle states are maze cells, observed as their center
// with zero velocity.
MetricsReport evaluate_network(const NetworkParams& params, const QuasimetricSpec& spec,
                               const PointMaze& maze, const GroundTruthMAD& gt, int64_t pair_budget,
                               std::mt19937_64& rng);

// Per-pair (true, predicted) dump for plotting, same exclusion rules as the
// correlations.
std::vector<std::pair<double, double>> dump_pairs(const std::function<double(int, int)>& predicted,
                                                  const GroundTruthMAD& gt);

// Embeds all oracle states of a discrete env with the given network.
Tensor embed_discrete_states(const NetworkParams& params, const DiscreteEnv& env, std::mt19937_64& rng);
Tensor embed_maze_cells(const NetworkParams& params, const PointMaze& maze);

}  // namespace mad
