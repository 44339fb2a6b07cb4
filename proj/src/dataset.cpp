#include "mad/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mad/errors.hpp"
#include "mad/rng.hpp"

namespace mad {

int64_t TrajectoryDataset::state_pool_size() const {
  int64_t n = 0;
  for (const auto& t : trajectories) n += t.length();
  return n;
}

int64_t TrajectoryDataset::transition_count() const {
  int64_t n = 0;
  for (const auto& t : trajectories) n += std::max(0, t.length() - 1);
  return n;
}

namespace {

template <typename InitFn, typename StepFn, typename ObserveFn>
TrajectoryDataset collect_impl(const std::string& env_name, int obs_dim, int n_trajectories, int max_len,
                               uint64_t seed, InitFn init, StepFn step, ObserveFn observe) {
  if (max_len < 2) throw InputError("collect: max_len must be >= 2");
  if (n_trajectories < 1) throw InputError("collect: need at least one trajectory");
  TrajectoryDataset ds;
  ds.env_name = env_name;
  ds.obs_dim = obs_dim;
  ds.seed = seed;
  ds.trajectories.resize(static_cast<size_t>(n_trajectories));
  for (int t = 0; t < n_trajectories; ++t) {
    auto rng = seeded_engine(seed, static_cast<uint64_t>(t));
    Trajectory& traj = ds.trajectories[static_cast<size_t>(t)];
    traj.obs_dim = obs_dim;
    traj.obs.resize(static_cast<size_t>(max_len) * obs_dim);
    traj.latent_ids.resize(static_cast<size_t>(max_len));
    auto state = init(rng);
    for (int i = 0; i < max_len; ++i) {
      observe(state, rng, traj.obs.data() + static_cast<size_t>(i) * obs_dim,
              &traj.latent_ids[static_cast<size_t>(i)]);
      if (i + 1 < max_len) state = step(state, rng);
    }
  }
  return ds;
}

}  // namespace

TrajectoryDataset collect(const DiscreteEnv& env, int n_trajectories, int max_len, uint64_t seed) {
  return collect_impl(
      env.name(), env.obs_dim(), n_trajectories, max_len, seed,
      [&](std::mt19937_64& rng) { return env.initial_state(rng); },
      [&](int state, std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick(0, env.action_count() - 1);
        return env.step(state, pick(rng), rng);
      },
      [&](int state, std::mt19937_64& rng, double* out, int* latent) {
        env.observe(state, rng, out);
        *latent = state;
      });
}

TrajectoryDataset collect(const PointMaze& maze, int n_trajectories, int max_len, uint64_t seed) {
  return collect_impl(
      "pointmaze-" + maze.layout_name(), 4, n_trajectories, max_len, seed,
      [&](std::mt19937_64& rng) { return maze.initial_state(rng); },
      [&](const PointMassState& s, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> force(-PointMaze::kMaxForce, PointMaze::kMaxForce);
        const double ax = force(rng);
        const double ay = force(rng);
        return maze.step(s, ax, ay);
      },
      [&](const PointMassState& s, std::mt19937_64&, double* out, int* latent) {
        const auto o = maze.observe(s);
        std::memcpy(out, o.data(), o.size() * sizeof(double));
        *latent = maze.cell_id(s.px, s.py);
      });
}

const double* obs_of(const TrajectoryDataset& ds, PairRef ref) {
  return ds.trajectories[static_cast<size_t>(ref.trajectory)].row(ref.index);
}

namespace {

void require_nonempty(const TrajectoryDataset& ds) {
  if (ds.empty()) throw InputError("sampler: dataset is empty");
  for (const auto& t : ds.trajectories) {
    if (t.length() < 2) throw InputError("sampler: trajectory shorter than 2 states");
  }
}

int pick_trajectory(const TrajectoryDataset& ds, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(ds.trajectories.size()) - 1);
  return pick(rng);
}

}  // namespace

PairBatch sample_objective_pairs(const TrajectoryDataset& ds, int batch, std::mt19937_64& rng) {
  require_nonempty(ds);
  PairBatch out;
  out.anchor.reserve(static_cast<size_t>(batch));
  out.partner.reserve(static_cast<size_t>(batch));
  out.gaps.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const int t = pick_trajectory(ds, rng);
    const int n = ds.trajectories[static_cast<size_t>(t)].length();
    std::uniform_int_distribution<int> pick(0, n - 1);
    int i = pick(rng);
    int j = pick(rng);
    while (j == i) j = pick(rng);  // two distinct indices, ordered => uniform over pairs
    if (i > j) std::swap(i, j);
    out.anchor.push_back({t, i});
    out.partner.push_back({t, j});
    out.gaps.push_back(j - i);
  }
  return out;
}

PairBatch sample_constraint_pairs(const TrajectoryDataset& ds, int h_c, int batch, std::mt19937_64& rng) {
  require_nonempty(ds);
  if (h_c < 1) throw InputError("sample_constraint_pairs: h_c must be >= 1");
  PairBatch out;
  out.anchor.reserve(static_cast<size_t>(batch));
  out.partner.reserve(static_cast<size_t>(batch));
  out.gaps.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const int t = pick_trajectory(ds, rng);
    const int n = ds.trajectories[static_cast<size_t>(t)].length();
    const int max_gap = std::min(h_c, n - 1);
    // Eligible pairs: gap g in 1..max_gap, (n - g) choices of i each.
    int64_t eligible = 0;
    for (int g = 1; g <= max_gap; ++g) eligible += n - g;
    std::uniform_int_distribution<int64_t> pick(0, eligible - 1);
    int64_t u = pick(rng);
    int gap = 1;
    while (u >= n - gap) {
      u -= n - gap;
      ++gap;
    }
    const int i = static_cast<int>(u);
    out.anchor.push_back({t, i});
    out.partner.push_back({t, i + gap});
    out.gaps.push_back(gap);
  }
  return out;
}

namespace {

PairRef pick_pool_state(const TrajectoryDataset& ds, std::mt19937_64& rng, int reserve_tail) {
  // Uniform over the flattened pool. Trajectories share one length in
  // collected datasets, but handle ragged ones correctly anyway.
  int64_t pool = 0;
  for (const auto& t : ds.trajectories) pool += t.length() - reserve_tail;
  std::uniform_int_distribution<int64_t> pick(0, pool - 1);
  int64_t u = pick(rng);
  for (size_t t = 0; t < ds.trajectories.size(); ++t) {
    const int64_t len = ds.trajectories[t].length() - reserve_tail;
    if (u < len) return {static_cast<int>(t), static_cast<int>(u)};
    u -= len;
  }
  throw UsageError("pool sampling out of range");
}

}  // namespace

PairBatch sample_random_state_pairs(const TrajectoryDataset& ds, int batch, std::mt19937_64& rng) {
  require_nonempty(ds);
  PairBatch out;
  out.anchor.reserve(static_cast<size_t>(batch));
  out.partner.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    out.anchor.push_back(pick_pool_state(ds, rng, 0));
    out.partner.push_back(pick_pool_state(ds, rng, 0));
  }
  return out;
}

PairBatch sample_td_random_pairs(const TrajectoryDataset& ds, int batch, std::mt19937_64& rng) {
  require_nonempty(ds);
  PairBatch out;
  out.anchor.reserve(static_cast<size_t>(batch));
  out.partner.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    // Final states carry no successor and are excluded as anchors.
    out.anchor.push_back(pick_pool_state(ds, rng, 1));
    out.partner.push_back(pick_pool_state(ds, rng, 0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

void save_dataset(const TrajectoryDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  out << "MADDATA 1\n";
  out << "env " << ds.env_name << "\n";
  out << "obs_dim " << ds.obs_dim << "\n";
  out << "seed " << ds.seed << "\n";
  out << "trajectories " << ds.trajectories.size() << "\n";
  char buf[64];
  for (const auto& t : ds.trajectories) {
    out << "traj " << t.length() << "\n";
    for (int i = 0; i < t.length(); ++i) {
      out << t.latent_ids[static_cast<size_t>(i)];
      const double* row = t.row(i);
      for (int c = 0; c < t.obs_dim; ++c) {
        std::snprintf(buf, sizeof(buf), " %.17g", row[c]);
        out << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw IoError("short write on dataset file: " + path);
}

namespace {

struct LineReader {
  std::istream& in;
  long line_no = 0;
  std::string line;

  bool next() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  }
  void require() {
    if (!next()) throw ParseError("unexpected end of dataset file", line_no + 1);
  }
};

}  // namespace

TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  LineReader reader{in};

  reader.require();
  if (reader.line != "MADDATA 1") throw ParseError("bad dataset header", reader.line_no);

  TrajectoryDataset ds;
  auto read_field = [&](const char* key) -> std::string {
    reader.require();
    std::istringstream ss(reader.line);
    std::string k, v;
    ss >> k;
    std::getline(ss, v);
    if (k != key) throw ParseError(std::string("expected '") + key + "' field", reader.line_no);
    if (!v.empty() && v.front() == ' ') v.erase(v.begin());
    return v;
  };

  ds.env_name = read_field("env");
  try {
    ds.obs_dim = std::stoi(read_field("obs_dim"));
    ds.seed = std::stoull(read_field("seed"));
  } catch (const std::exception&) {
    throw ParseError("bad numeric header field", reader.line_no);
  }
  if (ds.obs_dim < 0) throw ParseError("obs_dim must be nonnegative", reader.line_no);

  size_t n_traj = 0;
  try {
    n_traj = std::stoul(read_field("trajectories"));
  } catch (const std::exception&) {
    throw ParseError("bad trajectory count", reader.line_no);
  }

  ds.trajectories.reserve(n_traj);
  for (size_t t = 0; t < n_traj; ++t) {
    reader.require();
    std::istringstream ss(reader.line);
    std::string tag;
    int length = 0;
    ss >> tag >> length;
    if (tag != "traj" || length < 2) throw ParseError("bad trajectory block header", reader.line_no);
    Trajectory traj;
    traj.obs_dim = ds.obs_dim;
    traj.obs.resize(static_cast<size_t>(length) * ds.obs_dim);
    traj.latent_ids.resize(static_cast<size_t>(length));
    for (int i = 0; i < length; ++i) {
      reader.require();
      std::istringstream row(reader.line);
      if (!(row >> traj.latent_ids[static_cast<size_t>(i)])) {
        throw ParseError("bad latent id", reader.line_no);
      }
      for (int c = 0; c < ds.obs_dim; ++c) {
        if (!(row >> traj.obs[static_cast<size_t>(i) * ds.obs_dim + c])) {
          throw ParseError("missing observation value", reader.line_no);
        }
      }
      std::string extra;
      if (row >> extra) throw ParseError("trailing values on observation line", reader.line_no);
    }
    ds.trajectories.push_back(std::move(traj));
  }
  if (reader.next() && !reader.line.empty()) {
    throw ParseError("trailing content after last trajectory", reader.line_no);
  }
  return ds;
}

}  // namespace mad
