#include "mad/shortest_path.hpp"

#include <cmath>

#include "mad/errors.hpp"

namespace mad {

GroundTruthMAD floyd_warshall(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 0) throw InputError("floyd_warshall: negative state count");
  GroundTruthMAD gt(n);
  for (int s = 0; s < n; ++s) gt.at(s, s) = 0;
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= n || to < 0 || to >= n) throw InputError("floyd_warshall: edge out of range");
    if (from != to) gt.at(from, to) = std::min(gt.at(from, to), 1);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const int32_t dik = gt.at(i, k);
      if (dik == GroundTruthMAD::kInf) continue;
      const int32_t* row_k = &gt.d[static_cast<size_t>(k) * n];
      int32_t* row_i = &gt.d[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) {
        if (row_k[j] == GroundTruthMAD::kInf) continue;
        const int32_t through = dik + row_k[j];
        if (through < row_i[j]) row_i[j] = through;
      }
    }
  }
  return gt;
}

OptimalityReport check_mad_optimality(const std::vector<double>& candidate, int n,
                                      const std::vector<std::pair<int, int>>& edges, double tol) {
  if (static_cast<size_t>(n) * n != candidate.size()) {
    throw InputError("check_mad_optimality: candidate shape mismatch");
  }
  OptimalityReport report;
  auto c = [&](int i, int j) { return candidate[static_cast<size_t>(i) * n + j]; };

  for (int i = 0; i < n; ++i) {
    if (!(std::abs(c(i, i)) <= tol)) {
      report.violation = "identity violated at state " + std::to_string(i);
      return report;
    }
  }
  for (const auto& [from, to] : edges) {
    if (!(c(from, to) <= 1.0 + tol)) {
      report.violation = "one-step bound violated on edge (" + std::to_string(from) + "," +
                         std::to_string(to) + ")";
      return report;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double dik = c(i, k);
      if (std::isinf(dik)) continue;
      for (int j = 0; j < n; ++j) {
        const double rhs = dik + c(k, j);
        if (!(c(i, j) <= rhs + tol)) {
          report.violation = "triangle inequality violated on (" + std::to_string(i) + "," +
                             std::to_string(j) + ") via " + std::to_string(k);
          return report;
        }
      }
    }
  }
  report.feasible = true;

  const GroundTruthMAD gt = floyd_warshall(n, edges);
  report.pointwise_dominated = true;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!gt.finite(i, j)) continue;
      const double mad = static_cast<double>(gt.at(i, j));
      report.candidate_sum += c(i, j);
      report.mad_sum += mad;
      if (c(i, j) > mad + tol) report.pointwise_dominated = false;
    }
  }
  report.sum_dominated = report.candidate_sum <= report.mad_sum + tol;
  return report;
}

void write_ground_truth_csv(std::ostream& out, const GroundTruthMAD& gt) {
  out << "state_id_from,state_id_to,distance\n";
  for (int i = 0; i < gt.n; ++i) {
    for (int j = 0; j < gt.n; ++j) {
      out << i << ',' << j << ',';
      if (gt.finite(i, j)) {
        out << gt.at(i, j);
      } else {
        out << "INF";
      }
      out << '\n';
    }
  }
}

}  // namespace mad
