#include "mad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mad/errors.hpp"

namespace mad {

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("pearson: length mismatch");
  const size_t n = a.size();
  if (n < 2) throw InputError("pearson: need at least two points");
  double mean_a = 0.0, mean_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw InputError("pearson: correlation undefined for zero-variance input");
  }
  return cov / std::sqrt(var_a * var_b);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Ranks are 1-based; tied values share the mean of their positions.
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("spearman: length mismatch");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  return pearson_correlation(ra, rb);
}

double ratio_cv(std::span<const double> true_d, std::span<const double> pred_d) {
  if (true_d.size() != pred_d.size()) throw InputError("ratio_cv: length mismatch");
  if (true_d.empty()) throw InputError("ratio_cv: no pairs");
  double mean = 0.0;
  std::vector<double> ratios(true_d.size());
  for (size_t i = 0; i < true_d.size(); ++i) {
    if (!(true_d[i] > 0.0)) throw InputError("ratio_cv: true distances must be positive");
    ratios[i] = pred_d[i] / true_d[i];
    mean += ratios[i];
  }
  mean /= static_cast<double>(ratios.size());
  if (mean == 0.0) throw InputError("ratio_cv: undefined for zero mean ratio");
  double var = 0.0;
  for (double r : ratios) var += (r - mean) * (r - mean);
  var /= static_cast<double>(ratios.size());  // population variance, divisor n
  return std::sqrt(var) / mean;
}

MetricsReport evaluate_pairs(const std::function<double(int, int)>& predicted, const GroundTruthMAD& gt,
                             int64_t pair_budget, std::mt19937_64& rng) {
  const int n = gt.n;
  const int64_t total = static_cast<int64_t>(n) * n;
  std::vector<double> true_d, pred_d;

  auto consider = [&](int i, int j) {
    if (!gt.finite(i, j)) {
      return false;
    }
    true_d.push_back(static_cast<double>(gt.at(i, j)));
    pred_d.push_back(predicted(i, j));
    return true;
  };

  MetricsReport report;
  if (pair_budget <= 0 || total <= pair_budget) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!consider(i, j)) ++report.n_excluded_infinite;
      }
    }
  } else {
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int64_t k = 0; k < pair_budget; ++k) {
      if (!consider(pick(rng), pick(rng))) ++report.n_excluded_infinite;
    }
  }
  if (true_d.size() < 2) throw InputError("evaluate: fewer than two valid pairs");

  report.n_pairs = static_cast<int64_t>(true_d.size());
  report.spearman = spearman_correlation(true_d, pred_d);
  report.pearson = pearson_correlation(true_d, pred_d);

  std::vector<double> pos_true, pos_pred;
  for (size_t k = 0; k < true_d.size(); ++k) {
    if (true_d[k] > 0.0) {
      pos_true.push_back(true_d[k]);
      pos_pred.push_back(pred_d[k]);
    }
  }
  report.n_ratio_pairs = static_cast<int64_t>(pos_true.size());
  report.ratio_cv = ratio_cv(pos_true, pos_pred);
  return report;
}

Tensor embed_discrete_states(const NetworkParams& params, const DiscreteEnv& env, std::mt19937_64& rng) {
  Tensor obs(env.state_count(), env.obs_dim());
  for (int s = 0; s < env.state_count(); ++s) env.observe(s, rng, obs.row_ptr(s));
  return network_apply(params, obs);
}

Tensor embed_maze_cells(const NetworkParams& params, const PointMaze& maze) {
  Tensor obs(maze.cell_count(), 4);
  for (int c = 0; c < maze.cell_count(); ++c) {
    const auto center = maze.cell_center(c);
    double* row = obs.row_ptr(c);
    row[0] = center[0];
    row[1] = center[1];
    row[2] = 0.0;
    row[3] = 0.0;
  }
  return network_apply(params, obs);
}

namespace {

MetricsReport evaluate_embeddings(const Tensor& latents, const QuasimetricSpec& spec,
                                  const GroundTruthMAD& gt, int64_t pair_budget, std::mt19937_64& rng) {
  const int64_t d = latents.cols();
  auto predicted = [&](int i, int j) {
    return quasimetric_value(std::span<const double>(latents.row_ptr(i), static_cast<size_t>(d)),
                             std::span<const double>(latents.row_ptr(j), static_cast<size_t>(d)), spec);
  };
  return evaluate_pairs(predicted, gt, pair_budget, rng);
}

}  // namespace

MetricsReport evaluate_network(const NetworkParams& params, const QuasimetricSpec& spec,
                               const DiscreteEnv& env, const GroundTruthMAD& gt, int64_t pair_budget,
                               std::mt19937_64& rng) {
  if (gt.n != env.state_count()) throw InputError("evaluate: oracle does not match environment");
  const Tensor latents = embed_discrete_states(params, env, rng);
  return evaluate_embeddings(latents, spec, gt, pair_budget, rng);
}

MetricsReport evaluate_network(const NetworkParams& params, const QuasimetricSpec& spec,
                               const PointMaze& maze, const GroundTruthMAD& gt, int64_t pair_budget,
                               std::mt19937_64& rng) {
  if (gt.n != maze.cell_count()) throw InputError("evaluate: oracle does not match maze");
  const Tensor latents = embed_maze_cells(params, maze);
  return evaluate_embeddings(latents, spec, gt, pair_budget, rng);
}

std::vector<std::pair<double, double>> dump_pairs(const std::function<double(int, int)>& predicted,
                                                  const GroundTruthMAD& gt) {
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < gt.n; ++i) {
    for (int j = 0; j < gt.n; ++j) {
      if (!gt.finite(i, j)) continue;
      out.emplace_back(static_cast<double>(gt.at(i, j)), predicted(i, j));
    }
  }
  return out;
}

}  // namespace mad
