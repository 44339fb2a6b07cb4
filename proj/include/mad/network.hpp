#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mad/graph.hpp"
#include "mad/tensor.hpp"

namespace mad {

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

// Feedforward encoder: SELU on hidden layers, identity output. The final
// layer width is the latent dimension.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  int64_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
  int64_t latent_dim() const { return layers.empty() ? 0 : layers.back().weight.cols(); }
  int64_t parameter_count() const;
  bool same_architecture(const NetworkParams& other) const;

  // Fan-in scaled uniform init (LeCun-style variance, suits SELU).
  static NetworkParams init(int64_t input_dim, const std::vector<int64_t>& hidden, int64_t latent_dim,
                            std::mt19937_64& rng);
};

// Gradients aligned with NetworkParams.
struct NetworkGrads {
  std::vector<DenseLayer> layers;
  bool all_finite() const;
  double global_norm() const;
  void scale(double factor);
};

// Handle to the parameter leaves of one recorded forward pass; used to pull
// gradients out of the graph after backward().
struct NetworkLeaves {
  std::vector<VarId> weights;
  std::vector<VarId> biases;
  NetworkGrads grads(const Graph& g, const NetworkParams& shape_like) const;
};

// Records phi(batch) on the graph. batch is B x input_dim, result B x latent.
VarId network_forward(Graph& g, const NetworkParams& params, VarId batch, NetworkLeaves* leaves = nullptr);

// Plain inference forward, no recording (target networks, evaluation).
Tensor network_apply(const NetworkParams& params, const Tensor& batch);

struct AdamWState {
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  int64_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;

  static AdamWState init(const NetworkParams& params, double learning_rate, double weight_decay = 1e-4);
};

// Decoupled-weight-decay Adam step. Rejects non-finite gradients.
void adamw_step(NetworkParams& params, const NetworkGrads& grads, AdamWState& state);

// target <- (1 - beta) * target + beta * online, elementwise.
void polyak_update(NetworkParams& target, const NetworkParams& online, double beta);

// Binary checkpoint, magic "MADNET1", little-endian; bit-exact round trip.
void save_network(const std::string& path, const NetworkParams& params);
NetworkParams load_network(const std::string& path);

}  // namespace mad
