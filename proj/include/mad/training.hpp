#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mad/dataset.hpp"
#include "mad/evaluation.hpp"
#include "mad/network.hpp"
#include "mad/quasimetric.hpp"

namespace mad {

struct TrainConfigBase {
  double w_r = 1.0;
  double w_c = 0.1;
  int h_c = 6;
  QuasimetricSpec quasimetric = QuasimetricSpec::simple(0.5);
  int batch_objective = 256;
  int batch_constraint = 1024;
  int64_t steps = 50000;
  double learning_rate = 1e-4;
  int64_t latent_dim = 256;
  std::vector<int64_t> hidden = {512, 512};
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip = 0.0;  // global-norm clip, 0 disables
  int64_t eval_interval = 1000;

  void validate() const;
};

struct MadDistConfig : TrainConfigBase {
  double d_max = 100.0;
};

// The bootstrapped variant drops d_max and adds the target-network rate.
struct TDMadDistConfig : TrainConfigBase {
  double polyak_beta = 0.005;
};

// Materialized batches: raw observation rows, ready for the encoder.
struct ObjectiveBatch {
  Tensor anchor;     // B x obs_dim
  Tensor partner;    // B x obs_dim
  Tensor successor;  // B x obs_dim, anchors' trajectory successors (TD only)
  std::vector<double> gaps;
  bool has_successor = false;
};

struct RandomBatch {
  Tensor first;      // s (MadDist) or anchor s_i (TD)
  Tensor second;     // s' or s_r
  Tensor successor;  // s_{i+1} (TD only)
  bool has_successor = false;
};

struct ConstraintBatch {
  Tensor anchor;
  Tensor partner;
  std::vector<double> gaps;
};

ObjectiveBatch materialize_objective(const TrajectoryDataset& ds, const PairBatch& pairs,
                                     bool with_successor);
RandomBatch materialize_random(const TrajectoryDataset& ds, const PairBatch& pairs, bool with_successor);
ConstraintBatch materialize_constraint(const TrajectoryDataset& ds, const PairBatch& pairs);

struct LossParts {
  double total = 0.0;
  double objective = 0.0;   // L_o, unweighted
  double random = 0.0;      // L_r, unweighted
  double constraint = 0.0;  // L_c, unweighted
};

struct LossResult {
  LossParts parts;
  NetworkGrads grads;
};

// L_o + w_r * L_r + w_c * L_c with
//   L_o = mean (d/gap - 1)^2, L_r = mean relu(1 - d/d_max)^2,
//   L_c = mean relu(d - gap)^2.
LossParts loss_maddist(const NetworkParams& params, const ObjectiveBatch& obj, const RandomBatch& rnd,
                       const ConstraintBatch& con, const MadDistConfig& cfg);
LossResult loss_maddist_grads(const NetworkParams& params, const ObjectiveBatch& obj,
                              const RandomBatch& rnd, const ConstraintBatch& con,
                              const MadDistConfig& cfg);

// Bootstrapped objective: the L_o denominator becomes
// min(gap, 1 + d_target(successor, partner)) and L_r' targets
// 1 + d_target(successor, random). Target distances carry no gradient.
LossParts loss_tdmaddist(const NetworkParams& params, const NetworkParams& target,
                         const ObjectiveBatch& obj, const RandomBatch& rnd, const ConstraintBatch& con,
                         const TDMadDistConfig& cfg);
LossResult loss_tdmaddist_grads(const NetworkParams& params, const NetworkParams& target,
                                const ObjectiveBatch& obj, const RandomBatch& rnd,
                                const ConstraintBatch& con, const TDMadDistConfig& cfg);

struct MetricRow {
  int64_t step = 0;
  LossParts losses;  // window average since the previous row
  std::optional<MetricsReport> metrics;
};

struct TrainHooks {
  // Computes a MetricsReport for the current parameters; may be empty.
  std::function<MetricsReport(const NetworkParams&)> evaluate;
  // Receives each periodic history row as it is produced.
  std::function<void(const MetricRow&)> on_row;
};

struct TrainResult {
  NetworkParams params;
  std::optional<NetworkParams> target;  // TD variant only
  AdamWState optimizer;
  int64_t steps_run = 0;
  std::vector<MetricRow> history;
};

TrainResult train_maddist(const TrajectoryDataset& ds, const MadDistConfig& cfg, uint64_t seed,
                          const TrainHooks& hooks = {});
TrainResult train_tdmaddist(const TrajectoryDataset& ds, const TDMadDistConfig& cfg, uint64_t seed,
                            const TrainHooks& hooks = {});

// CSV header/rows for metric history (step, losses, metrics).
std::string metric_history_header();
std::string metric_row_csv(const MetricRow& row);

}  // namespace mad
