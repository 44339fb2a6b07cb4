#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace mad {

// Dense row-major tensor of 64-bit reals. Everything in this project is a
// matrix (rows x cols); vectors are 1 x n, scalars 1 x 1.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(int64_t rows, int64_t cols) : shape{rows, cols}, values(static_cast<size_t>(rows * cols), 0.0) {}
  Tensor(int64_t rows, int64_t cols, std::initializer_list<double> data);

  static Tensor zeros(int64_t rows, int64_t cols) { return Tensor(rows, cols); }
  static Tensor full(int64_t rows, int64_t cols, double value);
  static Tensor row(std::initializer_list<double> data);
  static Tensor scalar(double value) { return Tensor(1, 1, {value}); }
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
  int64_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }
  int64_t size() const { return static_cast<int64_t>(values.size()); }

  double& operator()(int64_t r, int64_t c) { return values[static_cast<size_t>(r * cols() + c)]; }
  double operator()(int64_t r, int64_t c) const { return values[static_cast<size_t>(r * cols() + c)]; }

  double* row_ptr(int64_t r) { return values.data() + r * cols(); }
  const double* row_ptr(int64_t r) const { return values.data() + r * cols(); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_string() const;
};

// c = alpha * op(a) * op(b) + beta * c, row-major. Dispatches to BLAS dgemm
// when available, otherwise to a blocked local kernel.
void matmul_into(Tensor& c, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b,
                 double alpha = 1.0, double beta = 0.0);

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

}  // namespace mad
