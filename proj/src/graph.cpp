#include "mad/graph.hpp"

#include <cmath>
#include <cstring>
#include <utility>

#include "mad/errors.hpp"

namespace mad {

namespace {
// Standard SELU constants (Klambauer et al. self-normalizing networks).
constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
}  // namespace

VarId Graph::push(Tensor value, bool requires_grad, std::function<void(Graph&, const Tensor&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<VarId>(nodes_.size() - 1);
}

VarId Graph::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

Tensor& Graph::grad_ref(VarId id) {
  Node& n = node(id);
  if (n.grad.values.empty()) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

double Graph::scalar(VarId id) const {
  const Tensor& v = value(id);
  if (v.size() != 1) throw ShapeError("scalar() on tensor of shape " + v.shape_string());
  return v.values[0];
}

const Tensor& Graph::grad(VarId id) const {
  const Node& n = node(id);
  if (!backward_done_) throw UsageError("grad() before backward()");
  if (n.grad.values.empty()) {
    static const Tensor kEmpty;
    if (n.value.size() == 0) return kEmpty;
    const_cast<Node&>(n).grad = Tensor(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

VarId Graph::matmul(VarId a, VarId b) {
  Tensor out = mad::matmul(value(a), value(b));
  bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Graph& g, const Tensor& dout) {
    if (g.requires_grad(a)) matmul_into(g.grad_ref(a), dout, g.value(b), false, true, 1.0, 1.0);
    if (g.requires_grad(b)) matmul_into(g.grad_ref(b), g.value(a), dout, true, false, 1.0, 1.0);
  });
}

VarId Graph::add_row_bias(VarId a, VarId bias) {
  const Tensor& x = value(a);
  const Tensor& v = value(bias);
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw ShapeError("bias " + v.shape_string() + " does not broadcast over " + x.shape_string());
  }
  Tensor out = x;
  for (int64_t r = 0; r < out.rows(); ++r) {
    double* row = out.row_ptr(r);
    for (int64_t c = 0; c < out.cols(); ++c) row[c] += v.values[static_cast<size_t>(c)];
  }
  bool rg = requires_grad(a) || requires_grad(bias);
  return push(std::move(out), rg, [a, bias](Graph& g, const Tensor& dout) {
    if (g.requires_grad(a)) {
      Tensor& da = g.grad_ref(a);
      for (size_t i = 0; i < da.values.size(); ++i) da.values[i] += dout.values[i];
    }
    if (g.requires_grad(bias)) {
      Tensor& db = g.grad_ref(bias);
      for (int64_t r = 0; r < dout.rows(); ++r) {
        const double* row = dout.row_ptr(r);
        for (int64_t c = 0; c < dout.cols(); ++c) db.values[static_cast<size_t>(c)] += row[c];
      }
    }
  });
}

VarId Graph::selu(VarId a) {
  Tensor out = value(a);
  for (double& v : out.values) {
    v = v > 0.0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * std::expm1(v);
  }
  return push(std::move(out), requires_grad(a), [a](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    const Tensor& y = g.value(a);  // pre-activation
    for (size_t i = 0; i < da.values.size(); ++i) {
      const double x = y.values[i];
      const double slope = x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
      da.values[i] += dout.values[i] * slope;
    }
  });
}

VarId Graph::relu(VarId a) {
  Tensor out = value(a);
  for (double& v : out.values) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), requires_grad(a), [a](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    const Tensor& x = g.value(a);
    for (size_t i = 0; i < da.values.size(); ++i) {
      if (x.values[i] > 0.0) da.values[i] += dout.values[i];
    }
  });
}

VarId Graph::binary_elementwise(VarId a, VarId b, double sign_b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (!x.same_shape(y)) {
    throw ShapeError("elementwise op on " + x.shape_string() + " vs " + y.shape_string());
  }
  Tensor out = x;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += sign_b * y.values[i];
  bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b, sign_b](Graph& g, const Tensor& dout) {
    if (g.requires_grad(a)) {
      Tensor& da = g.grad_ref(a);
      for (size_t i = 0; i < da.values.size(); ++i) da.values[i] += dout.values[i];
    }
    if (g.requires_grad(b)) {
      Tensor& db = g.grad_ref(b);
      for (size_t i = 0; i < db.values.size(); ++i) db.values[i] += sign_b * dout.values[i];
    }
  });
}

VarId Graph::add(VarId a, VarId b) { return binary_elementwise(a, b, 1.0); }
VarId Graph::sub(VarId a, VarId b) { return binary_elementwise(a, b, -1.0); }

VarId Graph::affine(VarId a, double scale, double shift) {
  Tensor out = value(a);
  for (double& v : out.values) v = scale * v + shift;
  return push(std::move(out), requires_grad(a), [a, scale](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    for (size_t i = 0; i < da.values.size(); ++i) da.values[i] += scale * dout.values[i];
  });
}

VarId Graph::add_const(VarId a, const Tensor& c) {
  const Tensor& x = value(a);
  if (!x.same_shape(c)) throw ShapeError("add_const shape mismatch");
  Tensor out = x;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += c.values[i];
  return push(std::move(out), requires_grad(a), [a](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    for (size_t i = 0; i < da.values.size(); ++i) da.values[i] += dout.values[i];
  });
}

VarId Graph::mul_const(VarId a, const Tensor& c) {
  const Tensor& x = value(a);
  if (!x.same_shape(c)) throw ShapeError("mul_const shape mismatch");
  Tensor out = x;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] *= c.values[i];
  Tensor factors = c;
  return push(std::move(out), requires_grad(a), [a, factors](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    for (size_t i = 0; i < da.values.size(); ++i) da.values[i] += factors.values[i] * dout.values[i];
  });
}

VarId Graph::gather_rows(VarId a, std::vector<int> index) {
  const Tensor& x = value(a);
  Tensor out(static_cast<int64_t>(index.size()), x.cols());
  for (size_t r = 0; r < index.size(); ++r) {
    std::memcpy(out.row_ptr(static_cast<int64_t>(r)), x.row_ptr(index[r]),
                static_cast<size_t>(x.cols()) * sizeof(double));
  }
  return push(std::move(out), requires_grad(a), [a, index = std::move(index)](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    const int64_t cols = da.cols();
    for (size_t r = 0; r < index.size(); ++r) {
      double* dst = da.row_ptr(index[r]);
      const double* src = dout.row_ptr(static_cast<int64_t>(r));
      for (int64_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

VarId Graph::row_max(VarId a) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), 1);
  std::vector<int> argmax(static_cast<size_t>(x.rows()), 0);
  for (int64_t r = 0; r < x.rows(); ++r) {
    const double* row = x.row_ptr(r);
    int best = 0;
    for (int64_t c = 1; c < x.cols(); ++c) {
      if (row[c] > row[best]) best = static_cast<int>(c);  // strict: ties keep lowest index
    }
    argmax[static_cast<size_t>(r)] = best;
    out(r, 0) = row[best];
  }
  return push(std::move(out), requires_grad(a), [a, argmax = std::move(argmax)](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    for (int64_t r = 0; r < dout.rows(); ++r) {
      da(r, argmax[static_cast<size_t>(r)]) += dout(r, 0);
    }
  });
}

VarId Graph::row_sum(VarId a) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), 1);
  for (int64_t r = 0; r < x.rows(); ++r) {
    const double* row = x.row_ptr(r);
    double s = 0.0;
    for (int64_t c = 0; c < x.cols(); ++c) s += row[c];
    out(r, 0) = s;
  }
  return push(std::move(out), requires_grad(a), [a](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    for (int64_t r = 0; r < dout.rows(); ++r) {
      double* row = da.row_ptr(r);
      for (int64_t c = 0; c < da.cols(); ++c) row[c] += dout(r, 0);
    }
  });
}

VarId Graph::row_mean(VarId a) {
  VarId s = row_sum(a);
  return affine(s, 1.0 / static_cast<double>(value(a).cols()), 0.0);
}

VarId Graph::square(VarId a) {
  const Tensor& x = value(a);
  Tensor out = x;
  for (double& v : out.values) v *= v;
  return push(std::move(out), requires_grad(a), [a](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    const Tensor& x = g.value(a);
    for (size_t i = 0; i < da.values.size(); ++i) da.values[i] += 2.0 * x.values[i] * dout.values[i];
  });
}

VarId Graph::mean_all(VarId a) {
  const Tensor& x = value(a);
  if (x.size() == 0) throw ShapeError("mean_all of empty tensor");
  double s = 0.0;
  for (double v : x.values) s += v;
  const double inv_n = 1.0 / static_cast<double>(x.size());
  Tensor out = Tensor::scalar(s * inv_n);
  return push(std::move(out), requires_grad(a), [a, inv_n](Graph& g, const Tensor& dout) {
    if (!g.requires_grad(a)) return;
    Tensor& da = g.grad_ref(a);
    const double d = dout.values[0] * inv_n;
    for (double& v : da.values) v += d;
  });
}

void Graph::backward(VarId loss) {
  if (backward_done_) throw UsageError("backward() called twice on the same graph");
  backward_done_ = true;
  const Tensor& v = value(loss);
  if (v.size() != 1) throw ShapeError("backward() needs a scalar loss, got " + v.shape_string());
  grad_ref(loss).values[0] = 1.0;
  for (VarId id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad || !n.backprop || n.grad.values.empty()) continue;
    n.backprop(*this, n.grad);
  }
}

}  // namespace mad
