#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace mad {

// Exact minimum action distances over an enumerated state set: all-pairs
// shortest path lengths of the one-step reachability graph, unit edge cost.
// Unreachable pairs hold the kInf sentinel; metric code must filter it.
struct GroundTruthMAD {
  static constexpr int32_t kInf = std::numeric_limits<int32_t>::max();

  int n = 0;
  std::vector<int32_t> d;  // n*n row-major

  GroundTruthMAD() = default;
  explicit GroundTruthMAD(int states) : n(states), d(static_cast<size_t>(states) * states, kInf) {}

  int32_t at(int from, int to) const { return d[static_cast<size_t>(from) * n + to]; }
  int32_t& at(int from, int to) { return d[static_cast<size_t>(from) * n + to]; }
  bool finite(int from, int to) const { return at(from, to) != kInf; }
};

// All-pairs shortest paths with unit edge cost over the relation edges.
GroundTruthMAD floyd_warshall(int n, const std::vector<std::pair<int, int>>& edges);

// Report of the constrained-optimization view of the MAD: a candidate d is
// feasible iff d(s,s)=0, d(s,s')<=1 on relation edges, and the triangle
// inequality holds on all triples; every feasible d is dominated by the true
// MAD entrywise, hence also in total sum.
struct OptimalityReport {
  bool feasible = false;
  std::string violation;        // empty when feasible; else first violated constraint
  bool pointwise_dominated = false;  // d <= d_MAD wherever d_MAD is finite
  bool sum_dominated = false;
  double candidate_sum = 0.0;   // both sums taken over finite-d_MAD pairs
  double mad_sum = 0.0;
};

// candidate is n*n row-major; use +infinity for unreachable entries.
OptimalityReport check_mad_optimality(const std::vector<double>& candidate, int n,
                                      const std::vector<std::pair<int, int>>& edges, double tol = 1e-9);

// CSV rows "state_id_from,state_id_to,distance" with INF for unreachable.
void write_ground_truth_csv(std::ostream& out, const GroundTruthMAD& gt);

}  // namespace mad
