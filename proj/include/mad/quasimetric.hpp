#pragma once

#include <span>
#include <string>
#include <vector>

#include "mad/graph.hpp"

namespace mad {

// Which asymmetric distance is applied to latent pairs. All members are
// built from the componentwise relu reduction max(x_i - y_i, 0), so they
// satisfy identity, non-negativity, the triangle inequality and positive
// homogeneity for any embedding.
struct QuasimetricSpec {
  enum class Kind { Simple, Max, Sum, Mean, Convex };

  Kind kind = Kind::Simple;
  double alpha = 0.5;                    // Simple: weight on the max term
  std::vector<double> weights;           // Convex
  std::vector<QuasimetricSpec> members;  // Convex

  void validate() const;  // alpha in [0,1]; convex weights nonneg, sum 1 within 1e-12

  // Textual form used in run configs, e.g. "simple(0.5)", "max", "mean",
  // "convex(0.3*max+0.7*mean)".
  static QuasimetricSpec parse(const std::string& text);
  std::string to_string() const;

  static QuasimetricSpec simple(double alpha) { return {Kind::Simple, alpha, {}, {}}; }
  static QuasimetricSpec max() { return {Kind::Max, 0.0, {}, {}}; }
  static QuasimetricSpec sum() { return {Kind::Sum, 0.0, {}, {}}; }
  static QuasimetricSpec mean() { return {Kind::Mean, 0.0, {}, {}}; }
  static QuasimetricSpec convex(std::vector<double> weights, std::vector<QuasimetricSpec> members);
};

// Componentwise max(x_i - y_i, 0).
std::vector<double> relu_reduction(std::span<const double> x, std::span<const double> y);

// alpha * max_i r_i + (1 - alpha) * mean_i r_i with r = relu_reduction(x, y).
double d_simple(std::span<const double> x, std::span<const double> y, double alpha);

// Max / sum / mean aggregation of the relu reduction.
double d_aggregate(std::span<const double> x, std::span<const double> y, QuasimetricSpec::Kind kind);

// Weighted combination of member quasimetrics.
double d_convex(std::span<const double> x, std::span<const double> y, const QuasimetricSpec& spec);

double quasimetric_value(std::span<const double> x, std::span<const double> y, const QuasimetricSpec& spec);

// Closed-form subgradients, exposed for testing the fused graph version.
// Conventions: zero at the relu kink (x_i == y_i); max ties resolved by the
// lowest index.
struct QuasimetricGradients {
  std::vector<double> dx;
  std::vector<double> dy;
};
QuasimetricGradients d_gradients(std::span<const double> x, std::span<const double> y,
                                 const QuasimetricSpec& spec);

// Fused evaluation on the autodiff graph: x, y are B x d latent batches,
// result is the B x 1 column of distances d(x_row, y_row).
VarId quasimetric_distance(Graph& g, VarId x, VarId y, const QuasimetricSpec& spec);

}  // namespace mad
