#include "mad/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "mad/errors.hpp"

#ifdef MAD_USE_OPENBLAS
#include <cblas.h>
#endif

namespace mad {

Tensor::Tensor(int64_t rows, int64_t cols, std::initializer_list<double> data)
    : shape{rows, cols}, values(data) {
  if (static_cast<int64_t>(values.size()) != rows * cols) {
    throw ShapeError("tensor literal has " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
}

Tensor Tensor::full(int64_t rows, int64_t cols, double value) {
  Tensor t(rows, cols);
  std::fill(t.values.begin(), t.values.end(), value);
  return t;
}

Tensor Tensor::row(std::initializer_list<double> data) {
  Tensor t;
  t.shape = {1, static_cast<int64_t>(data.size())};
  t.values = data;
  return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Tensor(0, 0);
  Tensor t(static_cast<int64_t>(rows.size()), static_cast<int64_t>(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ShapeError("ragged rows in from_rows");
    std::memcpy(t.row_ptr(static_cast<int64_t>(r)), rows[r].data(), rows[r].size() * sizeof(double));
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << "]";
  return out.str();
}

namespace {

#ifndef MAD_USE_OPENBLAS
// Fallback kernel: ikj loop order over the non-transposed copy.
void local_gemm(Tensor& c, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b,
                double alpha, double beta) {
  const int64_t m = trans_a ? a.cols() : a.rows();
  const int64_t k = trans_a ? a.rows() : a.cols();
  const int64_t n = trans_b ? b.rows() : b.cols();
  auto at = [&](int64_t i, int64_t p) { return trans_a ? a(p, i) : a(i, p); };
  auto bt = [&](int64_t p, int64_t j) { return trans_b ? b(j, p) : b(p, j); };
  for (double& v : c.values) v *= beta;
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c.row_ptr(i);
    for (int64_t p = 0; p < k; ++p) {
      const double aip = alpha * at(i, p);
      if (aip == 0.0) continue;
      for (int64_t j = 0; j < n; ++j) crow[j] += aip * bt(p, j);
    }
  }
}
#endif

}  // namespace

void matmul_into(Tensor& c, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b,
                 double alpha, double beta) {
  const int64_t m = trans_a ? a.cols() : a.rows();
  const int64_t k = trans_a ? a.rows() : a.cols();
  const int64_t kb = trans_b ? b.cols() : b.rows();
  const int64_t n = trans_b ? b.rows() : b.cols();
  if (k != kb) {
    throw ShapeError("matmul inner dimensions differ: " + a.shape_string() + " vs " + b.shape_string());
  }
  if (c.rows() != m || c.cols() != n) {
    throw ShapeError("matmul output shape " + c.shape_string() + " does not match " +
                     std::to_string(m) + "x" + std::to_string(n));
  }
#ifdef MAD_USE_OPENBLAS
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
              static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a.values.data(),
              static_cast<int>(a.cols()), b.values.data(), static_cast<int>(b.cols()), beta,
              c.values.data(), static_cast<int>(c.cols()));
#else
  local_gemm(c, a, b, trans_a, trans_b, alpha, beta);
#endif
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const int64_t m = trans_a ? a.cols() : a.rows();
  const int64_t n = trans_b ? b.rows() : b.cols();
  Tensor c(m, n);
  matmul_into(c, a, b, trans_a, trans_b, 1.0, 0.0);
  return c;
}

}  // namespace mad
