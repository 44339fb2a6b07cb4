#include "mad/pointmaze.hpp"

#include <algorithm>
#include <cmath>

#include "mad/errors.hpp"

namespace mad {

namespace {

const std::string kUMaze =
    "#####\n"
    "#G..#\n"
    "###.#\n"
    "#S..#\n"
    "#####\n";

const std::string kMedium =
    "########\n"
    "#S.##..#\n"
    "#..#...#\n"
    "#..#.#.#\n"
    "#....#.#\n"
    "#.##.#.#\n"
    "#...#.G#\n"
    "########\n";

double clamp(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

const std::string& PointMaze::builtin_ascii(const std::string& layout) {
  if (layout == "umaze") return kUMaze;
  if (layout == "medium") return kMedium;
  throw ConfigError("unknown pointmaze layout '" + layout + "' (want umaze or medium)");
}

PointMaze PointMaze::builtin(const std::string& layout) {
  PointMaze maze = from_ascii(builtin_ascii(layout));
  maze.name_ = layout;
  return maze;
}

PointMaze PointMaze::from_ascii(const std::string& text) {
  PointMaze maze;
  std::vector<std::string> rows;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      if (!current.empty()) rows.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) rows.push_back(current);
  if (rows.size() < 3) throw ParseError("maze layout needs at least 3 rows", 1);
  maze.height_ = static_cast<int>(rows.size());
  maze.width_ = static_cast<int>(rows[0].size());
  maze.grid_.resize(static_cast<size_t>(maze.width_) * maze.height_);
  maze.cell_lookup_.assign(maze.grid_.size(), -1);
  for (int y = 0; y < maze.height_; ++y) {
    if (static_cast<int>(rows[y].size()) != maze.width_) {
      throw ParseError("ragged maze row", y + 1);
    }
    for (int x = 0; x < maze.width_; ++x) {
      const char c = rows[static_cast<size_t>(y)][static_cast<size_t>(x)];
      if (c != '#' && c != '.' && c != 'S' && c != 'G') {
        throw ParseError(std::string("bad maze character '") + c + "'", y + 1);
      }
      maze.grid_[static_cast<size_t>(y * maze.width_ + x)] = c;
      // Borders must be walls so the point mass cannot leave the grid.
      if ((y == 0 || x == 0 || y == maze.height_ - 1 || x == maze.width_ - 1) && c != '#') {
        throw ParseError("maze border must be wall", y + 1);
      }
      if (c != '#') {
        const int id = static_cast<int>(maze.free_cells_.size());
        maze.cell_lookup_[static_cast<size_t>(y * maze.width_ + x)] = id;
        maze.free_cells_.emplace_back(x, y);
        if (c == 'S') maze.start_cells_.push_back(id);
        if (c == 'G') maze.goal_cells_.push_back(id);
      }
    }
  }
  if (maze.free_cells_.empty()) throw ParseError("maze has no free cells", 1);
  if (maze.start_cells_.empty()) throw ParseError("maze has no start region", 1);
  if (maze.goal_cells_.empty()) throw ParseError("maze has no goal region", 1);
  return maze;
}

bool PointMaze::wall(int cx, int cy) const {
  if (cx < 0 || cx >= width_ || cy < 0 || cy >= height_) return true;
  return grid_[static_cast<size_t>(cy * width_ + cx)] == '#';
}

bool PointMaze::wall_at(double px, double py) const {
  return wall(static_cast<int>(std::floor(px)), static_cast<int>(std::floor(py)));
}

PointMassState PointMaze::step(const PointMassState& s, double ax, double ay) const {
  PointMassState n = s;
  n.vx = clamp(n.vx + clamp(ax, -kMaxForce, kMaxForce) * kDt, -kMaxSpeed, kMaxSpeed);
  n.vy = clamp(n.vy + clamp(ay, -kMaxForce, kMaxForce) * kDt, -kMaxSpeed, kMaxSpeed);
  const double tx = n.px + n.vx * kDt;
  if (wall_at(tx, n.py)) {
    n.vx = 0.0;
  } else {
    n.px = tx;
  }
  const double ty = n.py + n.vy * kDt;
  if (wall_at(n.px, ty)) {
    n.vy = 0.0;
  } else {
    n.py = ty;
  }
  return n;
}

PointMassState PointMaze::sample_in_cell(int cell, std::mt19937_64& rng) const {
  const auto [cx, cy] = free_cells_[static_cast<size_t>(cell)];
  std::uniform_real_distribution<double> offset(0.05, 0.95);
  PointMassState s;
  s.px = cx + offset(rng);
  s.py = cy + offset(rng);
  return s;
}

PointMassState PointMaze::initial_state(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0, cell_count() - 1);
  return sample_in_cell(pick(rng), rng);
}

PointMassState PointMaze::start_state(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(start_cells_.size()) - 1);
  return sample_in_cell(start_cells_[static_cast<size_t>(pick(rng))], rng);
}

std::array<double, 2> PointMaze::goal_point(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(goal_cells_.size()) - 1);
  const PointMassState s = sample_in_cell(goal_cells_[static_cast<size_t>(pick(rng))], rng);
  return {s.px, s.py};
}

int PointMaze::cell_id(double px, double py) const {
  const int cx = static_cast<int>(std::floor(px));
  const int cy = static_cast<int>(std::floor(py));
  return cell_id_at(cx, cy);
}

int PointMaze::cell_id_at(int cx, int cy) const {
  if (cx < 0 || cx >= width_ || cy < 0 || cy >= height_) return -1;
  return cell_lookup_[static_cast<size_t>(cy * width_ + cx)];
}

std::array<double, 2> PointMaze::cell_center(int id) const {
  const auto [cx, cy] = free_cells_[static_cast<size_t>(id)];
  return {cx + 0.5, cy + 0.5};
}

std::vector<std::pair<int, int>> PointMaze::one_step_relation() const {
  std::vector<std::pair<int, int>> edges;
  constexpr int dx[4] = {0, 0, -1, 1};
  constexpr int dy[4] = {1, -1, 0, 0};
  for (int id = 0; id < cell_count(); ++id) {
    const auto [cx, cy] = free_cells_[static_cast<size_t>(id)];
    for (int a = 0; a < 4; ++a) {
      const int nid = cell_id_at(cx + dx[a], cy + dy[a]);
      if (nid >= 0) edges.emplace_back(id, nid);
    }
  }
  return edges;
}

}  // namespace mad
