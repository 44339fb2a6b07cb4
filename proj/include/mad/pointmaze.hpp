#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "mad/shortest_path.hpp"

namespace mad {

struct PointMassState {
  double px = 0.0, py = 0.0;
  double vx = 0.0, vy = 0.0;
};

// Force-actuated point mass in a unit-cell maze. Euler integration with
// dt = 0.1: v <- clamp(v + a*dt, +-5), p <- p + v*dt, with axis-wise
// inelastic wall collisions (the blocked velocity component is zeroed).
// Layout cells are 1x1; a position belongs to cell (floor(px), floor(py)),
// y growing downward with the ASCII rows.
class PointMaze {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kMaxSpeed = 5.0;
  static constexpr double kMaxForce = 1.0;

  // '#' wall, '.' free, 'S' start region, 'G' goal region.
  static PointMaze from_ascii(const std::string& text);
  // "umaze" or "medium".
  static PointMaze builtin(const std::string& layout);
  static const std::string& builtin_ascii(const std::string& layout);

  const std::string& layout_name() const { return name_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool wall(int cx, int cy) const;
  bool wall_at(double px, double py) const;

  PointMassState step(const PointMassState& s, double ax, double ay) const;
  std::array<double, 4> observe(const PointMassState& s) const { return {s.px, s.py, s.vx, s.vy}; }

  // Uniform over free space, zero velocity (data collection).
  PointMassState initial_state(std::mt19937_64& rng) const;
  // Planner episodes: uniform point inside the start/goal region cells.
  PointMassState start_state(std::mt19937_64& rng) const;
  std::array<double, 2> goal_point(std::mt19937_64& rng) const;

  // Free cells enumerated as oracle states; 4-neighbor unit-cost graph.
  int cell_count() const { return static_cast<int>(free_cells_.size()); }
  int cell_id(double px, double py) const;  // -1 inside walls / out of bounds
  int cell_id_at(int cx, int cy) const;
  std::array<double, 2> cell_center(int id) const;
  std::vector<std::pair<int, int>> one_step_relation() const;
  GroundTruthMAD ground_truth() const { return floyd_warshall(cell_count(), one_step_relation()); }

 private:
  std::string name_ = "custom";
  int width_ = 0, height_ = 0;
  std::vector<char> grid_;                    // row-major layout characters
  std::vector<std::pair<int, int>> free_cells_;
  std::vector<int> cell_lookup_;              // grid index -> free-cell id or -1
  std::vector<int> start_cells_, goal_cells_; // ids into free_cells_

  PointMassState sample_in_cell(int cell, std::mt19937_64& rng) const;
};

}  // namespace mad
