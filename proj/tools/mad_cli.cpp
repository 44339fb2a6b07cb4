// Command-line pipeline around the MAD embedding library: collect offline
// trajectories, train MadDist / TDMadDist encoders, evaluate them against
// exact distance oracles, run the random-shooting planner, export ground
// truth, and sweep one config axis.

#include <CLI11.hpp>
#include <json.hpp>

#include <malloc.h>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mad/config.hpp"
#include "mad/dataset.hpp"
#include "mad/envs.hpp"
#include "mad/errors.hpp"
#include "mad/evaluation.hpp"
#include "mad/network.hpp"
#include "mad/planner.hpp"
#include "mad/pointmaze.hpp"
#include "mad/rng.hpp"
#include "mad/shortest_path.hpp"
#include "mad/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_override;
  std::string seed_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "Run config file (key = value lines)");
  cmd->add_option("-s,--set", args.overrides, "Override a config key, e.g. --set train.steps=1000");
  cmd->add_option("-o,--out", args.out_override, "Output directory (overrides config 'out')");
  cmd->add_option("--seed", args.seed_override, "Seed (overrides config 'seed')");
}

mad::RunConfig resolve(const CommonArgs& args, bool require_seed = true) {
  std::vector<std::string> overrides = args.overrides;
  if (!args.out_override.empty()) overrides.push_back("out=" + args.out_override);
  if (!args.seed_override.empty()) overrides.push_back("seed=" + args.seed_override);
  return mad::resolve_config(args.config_path, overrides, std::getenv("MAD_SEED"), require_seed);
}

fs::path prepare_out_dir(const mad::RunConfig& rc) {
  if (rc.out_dir.empty()) throw mad::ConfigError("no output directory: set 'out' or pass --out");
  fs::path dir(rc.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw mad::IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream echo(dir / "config_resolved.txt", std::ios::trunc);
  if (!echo) throw mad::IoError("cannot write config echo in " + dir.string());
  echo << rc.resolved_text();
  return dir;
}

std::string timestamp() {
  char buf[64];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const fs::path& dir, json manifest) {
  manifest["created_at"] = timestamp();
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw mad::IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

struct EnvHandle {
  std::unique_ptr<mad::DiscreteEnv> discrete;
  std::optional<mad::PointMaze> maze;

  bool is_maze() const { return maze.has_value(); }
  int obs_dim() const { return is_maze() ? 4 : discrete->obs_dim(); }
  mad::GroundTruthMAD ground_truth() const {
    return is_maze() ? maze->ground_truth() : discrete->ground_truth();
  }
};

EnvHandle make_env(const mad::RunConfig& rc) {
  EnvHandle env;
  if (rc.is_pointmaze()) {
    if (rc.env_layout.size() > 4 && rc.env_layout.substr(rc.env_layout.size() - 4) == ".txt") {
      std::ifstream in(rc.env_layout);
      if (!in) throw mad::IoError("cannot open maze layout file: " + rc.env_layout);
      std::ostringstream text;
      text << in.rdbuf();
      env.maze = mad::PointMaze::from_ascii(text.str());
    } else {
      env.maze = mad::PointMaze::builtin(rc.env_layout);
    }
  } else {
    env.discrete = mad::make_discrete_env(rc.env_name, rc.env_sigma);
  }
  return env;
}

mad::TrajectoryDataset collect_dataset(const mad::RunConfig& rc, const EnvHandle& env) {
  const int n = static_cast<int>(rc.dataset_trajectories);
  const int len = static_cast<int>(rc.resolved_max_len());
  return env.is_maze() ? mad::collect(*env.maze, n, len, rc.seed)
                       : mad::collect(*env.discrete, n, len, rc.seed);
}

// --- collect ----------------------------------------------------------------

int cmd_collect(const CommonArgs& args) {
  const mad::RunConfig rc = resolve(args);
  const EnvHandle env = make_env(rc);
  const fs::path dir = prepare_out_dir(rc);

  const mad::TrajectoryDataset ds = collect_dataset(rc, env);
  const fs::path data_path = dir / "dataset.txt";
  mad::save_dataset(ds, data_path.string());

  write_manifest(dir, json{{"command", "collect"},
                           {"env", ds.env_name},
                           {"seed", ds.seed},
                           {"trajectories", ds.trajectories.size()},
                           {"max_len", rc.resolved_max_len()},
                           {"obs_dim", ds.obs_dim},
                           {"states", ds.state_pool_size()}});
  std::cout << "collect: wrote " << ds.trajectories.size() << " trajectories ("
            << ds.state_pool_size() << " states) to " << data_path.string() << "\n";
  return kExitOk;
}

// --- train ------------------------------------------------------------------

mad::TrajectoryDataset load_or_collect(const mad::RunConfig& rc, const EnvHandle& env,
                                       const fs::path& dir) {
  if (!rc.dataset_path.empty()) {
    mad::TrajectoryDataset ds = mad::load_dataset(rc.dataset_path);
    if (ds.obs_dim != env.obs_dim()) {
      throw mad::ConfigError("dataset obs_dim " + std::to_string(ds.obs_dim) +
                             " does not match environment obs_dim " + std::to_string(env.obs_dim()));
    }
    return ds;
  }
  // No dataset given: collect one into the run directory first.
  mad::TrajectoryDataset ds = collect_dataset(rc, env);
  mad::save_dataset(ds, (dir / "dataset.txt").string());
  return ds;
}

int cmd_train(const CommonArgs& args) {
  const mad::RunConfig rc = resolve(args);
  const EnvHandle env = make_env(rc);
  const fs::path dir = prepare_out_dir(rc);
  const mad::TrajectoryDataset ds = load_or_collect(rc, env, dir);

  const mad::GroundTruthMAD gt = env.ground_truth();
  const mad::QuasimetricSpec spec =
      rc.algorithm == "tdmaddist" ? rc.tdmaddist.quasimetric : rc.maddist.quasimetric;

  auto eval_rng = std::make_shared<std::mt19937_64>(mad::seeded_engine(rc.seed, 505));
  mad::TrainHooks hooks;
  hooks.evaluate = [&, eval_rng](const mad::NetworkParams& params) {
    return env.is_maze()
               ? mad::evaluate_network(params, spec, *env.maze, gt, rc.eval_pairs, *eval_rng)
               : mad::evaluate_network(params, spec, *env.discrete, gt, rc.eval_pairs, *eval_rng);
  };

  std::ofstream metrics(dir / "metrics.csv", std::ios::trunc);
  if (!metrics) throw mad::IoError("cannot write metrics.csv in " + dir.string());
  metrics << mad::metric_history_header() << "\n";
  hooks.on_row = [&metrics](const mad::MetricRow& row) {
    metrics << mad::metric_row_csv(row) << "\n";
    metrics.flush();
    if (row.metrics) {
      std::printf("step %8lld  L_o %.4f  L_r %.4f  L_c %.4f  spearman %.4f  pearson %.4f  cv %.4f\n",
                  static_cast<long long>(row.step), row.losses.objective, row.losses.random,
                  row.losses.constraint, row.metrics->spearman, row.metrics->pearson,
                  row.metrics->ratio_cv);
      std::fflush(stdout);
    }
  };

  const mad::TrainResult result =
      rc.algorithm == "tdmaddist" ? mad::train_tdmaddist(ds, rc.tdmaddist, rc.seed, hooks)
                                  : mad::train_maddist(ds, rc.maddist, rc.seed, hooks);

  const fs::path ckpt = dir / "checkpoint.bin";
  mad::save_network(ckpt.string(), result.params);

  json manifest{{"command", "train"},
                {"algo", rc.algorithm},
                {"env", ds.env_name},
                {"seed", rc.seed},
                {"steps", result.steps_run},
                {"checkpoint", ckpt.string()}};
  if (!result.history.empty() && result.history.back().metrics) {
    const auto& m = *result.history.back().metrics;
    manifest["final_spearman"] = m.spearman;
    manifest["final_pearson"] = m.pearson;
    manifest["final_ratio_cv"] = m.ratio_cv;
  }
  write_manifest(dir, manifest);
  std::cout << "train: " << result.steps_run << " steps, checkpoint " << ckpt.string() << "\n";
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

int cmd_eval(const CommonArgs& args) {
  const mad::RunConfig rc = resolve(args);
  if (rc.checkpoint_path.empty()) throw mad::ConfigError("eval needs 'checkpoint' in the config");
  const EnvHandle env = make_env(rc);
  const fs::path dir = prepare_out_dir(rc);

  const mad::NetworkParams params = mad::load_network(rc.checkpoint_path);
  if (params.input_dim() != env.obs_dim()) {
    throw mad::ConfigError("checkpoint input dim " + std::to_string(params.input_dim()) +
                           " does not match environment obs_dim " + std::to_string(env.obs_dim()));
  }
  const mad::GroundTruthMAD gt = env.ground_truth();
  const mad::QuasimetricSpec spec =
      rc.algorithm == "tdmaddist" ? rc.tdmaddist.quasimetric : rc.maddist.quasimetric;

  auto rng = mad::seeded_engine(rc.seed, 505);
  const mad::MetricsReport report =
      env.is_maze() ? mad::evaluate_network(params, spec, *env.maze, gt, rc.eval_pairs, rng)
                    : mad::evaluate_network(params, spec, *env.discrete, gt, rc.eval_pairs, rng);

  char row[256];
  std::snprintf(row, sizeof(row), "%.9g,%.9g,%.9g,%lld,%lld,%lld", report.spearman, report.pearson,
                report.ratio_cv, static_cast<long long>(report.n_pairs),
                static_cast<long long>(report.n_ratio_pairs),
                static_cast<long long>(report.n_excluded_infinite));
  std::ofstream out(dir / "eval.csv", std::ios::trunc);
  if (!out) throw mad::IoError("cannot write eval.csv in " + dir.string());
  out << "spearman,pearson,ratio_cv,n_pairs,n_ratio_pairs,n_excluded_infinite\n" << row << "\n";

  if (rc.eval_dump_pairs) {
    // Re-embed with a fresh stream so the dump matches an evaluation pass.
    auto dump_rng = mad::seeded_engine(rc.seed, 505);
    const mad::Tensor latents = env.is_maze()
                                    ? mad::embed_maze_cells(params, *env.maze)
                                    : mad::embed_discrete_states(params, *env.discrete, dump_rng);
    auto predicted = [&](int i, int j) {
      const size_t d = static_cast<size_t>(latents.cols());
      return mad::quasimetric_value(std::span<const double>(latents.row_ptr(i), d),
                                    std::span<const double>(latents.row_ptr(j), d), spec);
    };
    std::ofstream pairs(dir / "pairs.csv", std::ios::trunc);
    pairs << "true,predicted\n";
    char buf[80];
    for (const auto& [t, p] : mad::dump_pairs(predicted, gt)) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g", t, p);
      pairs << buf << "\n";
    }
  }

  std::cout << "eval: spearman " << report.spearman << " pearson " << report.pearson << " ratio_cv "
            << report.ratio_cv << " over " << report.n_pairs << " pairs ("
            << report.n_excluded_infinite << " infinite excluded)\n";
  return kExitOk;
}

// --- plan -------------------------------------------------------------------

template <typename State>
void write_trace(const fs::path& path, const std::vector<mad::EpisodeTraceRow<State>>& trace,
                 const std::function<std::string(const State&)>& describe) {
  std::ofstream out(path, std::ios::trunc);
  out << "step,action,score,state\n";
  char buf[64];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%.9g", row.score);
    out << row.step << ',' << row.action << ',' << buf << ',' << describe(row.state) << "\n";
  }
}

int cmd_plan(const CommonArgs& args) {
  const mad::RunConfig rc = resolve(args);
  const EnvHandle env = make_env(rc);
  const fs::path dir = prepare_out_dir(rc);

  const bool oracle_metric = rc.plan_metric == "oracle";
  mad::NetworkParams params;
  if (!oracle_metric) {
    if (rc.checkpoint_path.empty()) {
      throw mad::ConfigError("plan with a learned metric needs 'checkpoint' in the config");
    }
    params = mad::load_network(rc.checkpoint_path);
    if (params.input_dim() != env.obs_dim()) {
      throw mad::ConfigError("checkpoint input dim does not match environment obs_dim");
    }
  }
  const mad::GroundTruthMAD gt = env.ground_truth();
  const mad::QuasimetricSpec spec =
      rc.algorithm == "tdmaddist" ? rc.tdmaddist.quasimetric : rc.maddist.quasimetric;

  mad::PlanConfig pc;
  pc.candidates = static_cast<int>(rc.plan_candidates);
  pc.horizon = static_cast<int>(rc.plan_horizon);
  pc.max_episode_steps = static_cast<int>(rc.plan_max_steps);
  pc.goal_tolerance = rc.plan_goal_tolerance;

  std::ofstream episodes(dir / "episodes.csv", std::ios::trunc);
  if (!episodes) throw mad::IoError("cannot write episodes.csv in " + dir.string());
  episodes << "episode,seed,success,steps\n";

  int successes = 0;
  const int n_episodes = static_cast<int>(rc.plan_episodes);
  for (int ep = 0; ep < n_episodes; ++ep) {
    const uint64_t ep_seed = mad::mix64(rc.seed ^ static_cast<uint64_t>(ep));
    auto setup_rng = mad::seeded_engine(ep_seed, 606);
    bool success = false;
    int steps = 0;

    if (env.is_maze()) {
      const mad::PointMaze& maze = *env.maze;
      mad::PointMazeSim sim{&maze};
      mad::PointMassState start = maze.start_state(setup_rng);
      const auto goal_xy = maze.goal_point(setup_rng);
      mad::PointMassState goal;
      goal.px = goal_xy[0];
      goal.py = goal_xy[1];
      auto scorer = oracle_metric ? mad::oracle_scorer(gt, maze) : mad::learned_scorer(params, spec, maze);
      const auto result = mad::run_episode(sim, start, goal, scorer, pc, ep_seed);
      success = result.success;
      steps = result.steps;
      if (rc.plan_traces) {
        char name[64];
        std::snprintf(name, sizeof(name), "trace_%03d.csv", ep);
        write_trace<mad::PointMassState>(dir / name, result.trace, [](const mad::PointMassState& s) {
          char buf[128];
          std::snprintf(buf, sizeof(buf), "%.6g;%.6g;%.6g;%.6g", s.px, s.py, s.vx, s.vy);
          return std::string(buf);
        });
      }
    } else {
      const mad::DiscreteEnv& denv = *env.discrete;
      mad::DiscreteSim sim{&denv};
      int start = rc.plan_start_state >= 0 ? static_cast<int>(rc.plan_start_state)
                                           : denv.initial_state(setup_rng);
      int goal;
      if (rc.plan_goal_state >= 0) {
        goal = static_cast<int>(rc.plan_goal_state);
      } else if (const auto* cliff = dynamic_cast<const mad::CliffWalkingEnv*>(&denv)) {
        goal = cliff->goal_id();
      } else {
        // Uniform among states reachable from the start.
        std::uniform_int_distribution<int> pick(0, denv.state_count() - 1);
        do {
          goal = pick(setup_rng);
        } while (goal == start || !gt.finite(start, goal));
      }
      auto scorer = oracle_metric ? mad::oracle_scorer(gt)
                                  : mad::learned_scorer(params, spec, denv, ep_seed);
      const auto result = mad::run_episode(sim, start, goal, scorer, pc, ep_seed);
      success = result.success;
      steps = result.steps;
      if (rc.plan_traces) {
        char name[64];
        std::snprintf(name, sizeof(name), "trace_%03d.csv", ep);
        write_trace<int>(dir / name, result.trace,
                         [&denv](const int& s) { return denv.state_label(s); });
      }
    }

    successes += success ? 1 : 0;
    episodes << ep << ',' << ep_seed << ',' << (success ? 1 : 0) << ',' << steps << "\n";
  }

  const double rate = static_cast<double>(successes) / std::max(1, n_episodes);
  char row[160];
  std::snprintf(row, sizeof(row), "%s,%s,%d,%d,%.9g", rc.env_name.c_str(), rc.plan_metric.c_str(),
                n_episodes, successes, rate);
  std::ofstream summary(dir / "summary.csv", std::ios::trunc);
  summary << "env,metric,episodes,successes,success_rate\n" << row << "\n";
  std::cout << "plan: " << successes << "/" << n_episodes << " episodes reached the goal (rate "
            << rate << ")\n";
  return kExitOk;
}

// --- gt ---------------------------------------------------------------------

int cmd_gt(const CommonArgs& args) {
  const mad::RunConfig rc = resolve(args, /*require_seed=*/false);
  const EnvHandle env = make_env(rc);
  const fs::path dir = prepare_out_dir(rc);
  const mad::GroundTruthMAD gt = env.ground_truth();
  std::ofstream out(dir / "ground_truth.csv", std::ios::trunc);
  if (!out) throw mad::IoError("cannot write ground_truth.csv in " + dir.string());
  mad::write_ground_truth_csv(out, gt);
  std::cout << "gt: " << gt.n << " states written to " << (dir / "ground_truth.csv").string() << "\n";
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

int cmd_sweep(const CommonArgs& args, const std::string& axis, const std::vector<std::string>& values) {
  if (axis.empty() || values.empty()) throw mad::ConfigError("sweep needs --axis and --values");
  const mad::RunConfig base = resolve(args);
  if (base.out_dir.empty()) throw mad::ConfigError("sweep needs an output directory");

  for (const std::string& value : values) {
    CommonArgs run = args;
    run.overrides.push_back(axis + "=" + value);
    std::string label = axis + "=" + value;
    for (char& c : label) {
      if (c == '/' || c == '\\' || c == ' ' || c == '(' || c == ')' || c == '*') c = '_';
    }
    run.out_override = (fs::path(base.out_dir) / label).string();
    std::cout << "sweep: running " << axis << " = " << value << "\n";
    const int code = cmd_train(run);
    if (code != kExitOk) return code;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Training churns through multi-megabyte tensors every step; keep those
  // blocks on the heap instead of mmap/munmap round trips.
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);

  CLI::App app{"Minimum action distance embeddings: collect, train, eval, plan, gt, sweep"};
  app.require_subcommand(1);

  CommonArgs collect_args, train_args, eval_args, plan_args, gt_args, sweep_args;
  std::string sweep_axis;
  std::vector<std::string> sweep_values;

  CLI::App* collect = app.add_subcommand("collect", "Collect random-policy trajectories");
  add_common(collect, collect_args);
  CLI::App* train = app.add_subcommand("train", "Train a distance embedding on a dataset");
  add_common(train, train_args);
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the exact oracle");
  add_common(eval, eval_args);
  CLI::App* plan = app.add_subcommand("plan", "Random-shooting planner driven by a distance metric");
  add_common(plan, plan_args);
  CLI::App* gt = app.add_subcommand("gt", "Export the exact distance table as CSV");
  add_common(gt, gt_args);
  CLI::App* sweep = app.add_subcommand("sweep", "Train once per value of one config key");
  add_common(sweep, sweep_args);
  sweep->add_option("--axis", sweep_axis, "Config key to vary, e.g. train.latent_dim")->required();
  sweep->add_option("--values", sweep_values, "Comma-free list of values, e.g. --values 2 8 32 256")
      ->required();

  try {
    app.parse(argc, argv);
    if (collect->parsed()) return cmd_collect(collect_args);
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (plan->parsed()) return cmd_plan(plan_args);
    if (gt->parsed()) return cmd_gt(gt_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_axis, sweep_values);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const mad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mad::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const mad::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitIo;
  } catch (const mad::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
