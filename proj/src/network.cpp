#include "mad/network.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "mad/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian host");

namespace mad {

int64_t NetworkParams::parameter_count() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool NetworkParams::same_architecture(const NetworkParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].weight.same_shape(other.layers[i].weight)) return false;
    if (!layers[i].bias.same_shape(other.layers[i].bias)) return false;
  }
  return true;
}

NetworkParams NetworkParams::init(int64_t input_dim, const std::vector<int64_t>& hidden, int64_t latent_dim,
                                  std::mt19937_64& rng) {
  if (input_dim < 1 || latent_dim < 1) throw ShapeError("network needs positive input and latent dims");
  std::vector<int64_t> dims;
  dims.push_back(input_dim);
  for (int64_t h : hidden) {
    if (h < 1) throw ShapeError("hidden width must be positive");
    dims.push_back(h);
  }
  dims.push_back(latent_dim);

  NetworkParams p;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.weight = Tensor(dims[i], dims[i + 1]);
    layer.bias = Tensor(1, dims[i + 1]);
    // Uniform with Var = 1/fan_in, i.e. bound sqrt(3/fan_in).
    const double bound = std::sqrt(3.0 / static_cast<double>(dims[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : layer.weight.values) v = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

bool NetworkGrads::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

double NetworkGrads::global_norm() const {
  double sq = 0.0;
  for (const auto& l : layers) {
    for (double v : l.weight.values) sq += v * v;
    for (double v : l.bias.values) sq += v * v;
  }
  return std::sqrt(sq);
}

void NetworkGrads::scale(double factor) {
  for (auto& l : layers) {
    for (double& v : l.weight.values) v *= factor;
    for (double& v : l.bias.values) v *= factor;
  }
}

NetworkGrads NetworkLeaves::grads(const Graph& g, const NetworkParams& shape_like) const {
  NetworkGrads out;
  out.layers.resize(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    out.layers[i].weight = g.grad(weights[i]);
    out.layers[i].bias = g.grad(biases[i]);
    if (out.layers[i].weight.values.empty()) {
      out.layers[i].weight = Tensor(shape_like.layers[i].weight.rows(), shape_like.layers[i].weight.cols());
    }
    if (out.layers[i].bias.values.empty()) {
      out.layers[i].bias = Tensor(1, shape_like.layers[i].bias.cols());
    }
  }
  return out;
}

VarId network_forward(Graph& g, const NetworkParams& params, VarId batch, NetworkLeaves* leaves) {
  if (params.layers.empty()) throw ShapeError("network has no layers");
  if (g.value(batch).cols() != params.input_dim()) {
    throw ShapeError("batch width " + std::to_string(g.value(batch).cols()) + " != network input dim " +
                     std::to_string(params.input_dim()));
  }
  VarId x = batch;
  for (size_t i = 0; i < params.layers.size(); ++i) {
    VarId w = g.leaf(params.layers[i].weight, true);
    VarId b = g.leaf(params.layers[i].bias, true);
    if (leaves) {
      leaves->weights.push_back(w);
      leaves->biases.push_back(b);
    }
    x = g.add_row_bias(g.matmul(x, w), b);
    if (i + 1 < params.layers.size()) x = g.selu(x);
  }
  return x;
}

Tensor network_apply(const NetworkParams& params, const Tensor& batch) {
  Graph g;
  VarId out = network_forward(g, params, g.constant(batch), nullptr);
  return g.value(out);
}

AdamWState AdamWState::init(const NetworkParams& params, double learning_rate, double weight_decay) {
  AdamWState s;
  s.learning_rate = learning_rate;
  s.weight_decay = weight_decay;
  for (const auto& l : params.layers) {
    DenseLayer zero;
    zero.weight = Tensor(l.weight.rows(), l.weight.cols());
    zero.bias = Tensor(1, l.bias.cols());
    s.first_moment.push_back(zero);
    s.second_moment.push_back(std::move(zero));
  }
  return s;
}

namespace {

void adamw_array(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const AdamWState& s, double bc1, double bc2) {
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= s.learning_rate * (m_hat / (std::sqrt(v_hat) + s.epsilon) + s.weight_decay * p[i]);
  }
}

}  // namespace

void adamw_step(NetworkParams& params, const NetworkGrads& grads, AdamWState& state) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.size() != params.layers.size()) {
    throw ShapeError("adamw_step: layer count mismatch");
  }
  for (size_t i = 0; i < params.layers.size(); ++i) {
    if (!params.layers[i].weight.same_shape(grads.layers[i].weight) ||
        !params.layers[i].bias.same_shape(grads.layers[i].bias)) {
      throw ShapeError("adamw_step: gradient shape mismatch at layer " + std::to_string(i));
    }
  }
  if (!grads.all_finite()) throw NumericError("adamw_step: non-finite gradient, update rejected");

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (size_t i = 0; i < params.layers.size(); ++i) {
    adamw_array(params.layers[i].weight.values, grads.layers[i].weight.values,
                state.first_moment[i].weight.values, state.second_moment[i].weight.values, state, bc1, bc2);
    adamw_array(params.layers[i].bias.values, grads.layers[i].bias.values, state.first_moment[i].bias.values,
                state.second_moment[i].bias.values, state, bc1, bc2);
  }
}

void polyak_update(NetworkParams& target, const NetworkParams& online, double beta) {
  if (beta <= 0.0 || beta >= 1.0) throw InputError("polyak beta must lie in (0, 1)");
  if (!target.same_architecture(online)) throw ShapeError("polyak_update: architecture mismatch");
  for (size_t i = 0; i < target.layers.size(); ++i) {
    auto blend = [beta](std::vector<double>& t, const std::vector<double>& o) {
      for (size_t k = 0; k < t.size(); ++k) t[k] = (1.0 - beta) * t[k] + beta * o[k];
    };
    blend(target.layers[i].weight.values, online.layers[i].weight.values);
    blend(target.layers[i].bias.values, online.layers[i].bias.values);
  }
}

namespace {

constexpr char kMagic[7] = {'M', 'A', 'D', 'N', 'E', 'T', '1'};

void write_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_network(const std::string& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    write_u32(out, static_cast<uint32_t>(l.weight.rows()));
    write_u32(out, static_cast<uint32_t>(l.weight.cols()));
  }
  for (const auto& l : params.layers) {
    out.write(reinterpret_cast<const char*>(l.weight.values.data()),
              static_cast<std::streamsize>(l.weight.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(l.bias.values.data()),
              static_cast<std::streamsize>(l.bias.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write on checkpoint: " + path);
}

NetworkParams load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("bad checkpoint magic in " + path, 1);
  }
  const uint32_t n_layers = read_u32(in);
  if (!in || n_layers == 0 || n_layers > 1024) throw ParseError("bad layer count in " + path, 1);
  std::vector<std::pair<uint32_t, uint32_t>> dims(n_layers);
  for (auto& d : dims) {
    d.first = read_u32(in);
    d.second = read_u32(in);
    if (!in || d.first == 0 || d.second == 0) throw ParseError("bad layer dims in " + path, 1);
  }
  NetworkParams p;
  for (const auto& d : dims) {
    DenseLayer l;
    l.weight = Tensor(d.first, d.second);
    l.bias = Tensor(1, d.second);
    in.read(reinterpret_cast<char*>(l.weight.values.data()),
            static_cast<std::streamsize>(l.weight.values.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(l.bias.values.data()),
            static_cast<std::streamsize>(l.bias.values.size() * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint: " + path, 1);
    p.layers.push_back(std::move(l));
  }
  // Chain check: consecutive dims must agree.
  for (size_t i = 0; i + 1 < p.layers.size(); ++i) {
    if (p.layers[i].weight.cols() != p.layers[i + 1].weight.rows()) {
      throw ParseError("layer dims do not chain in " + path, 1);
    }
  }
  return p;
}

}  // namespace mad
