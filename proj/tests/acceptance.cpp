// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Learning criteria run three seeds (two in parallel; the
// BLAS pool is forced to one thread per run below).
//
// Usage: acceptance --cli <path-to-cli> [criterion numbers...]

#include <malloc.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "mad/config.hpp"
#include "mad/dataset.hpp"
#include "mad/envs.hpp"
#include "mad/evaluation.hpp"
#include "mad/network.hpp"
#include "mad/planner.hpp"
#include "mad/pointmaze.hpp"
#include "mad/quasimetric.hpp"
#include "mad/rng.hpp"
#include "mad/shortest_path.hpp"
#include "mad/training.hpp"
#include "testing_util.hpp"

namespace fs = std::filesystem;
using namespace mad;

namespace {

std::string g_cli_path;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Criterion 1: quasimetric axioms at scale.

Outcome criterion1() {
  const std::vector<std::pair<std::string, QuasimetricSpec>> kinds = {
      {"simple(0)", QuasimetricSpec::simple(0.0)},
      {"simple(0.5)", QuasimetricSpec::simple(0.5)},
      {"simple(1)", QuasimetricSpec::simple(1.0)},
      {"max", QuasimetricSpec::max()},
      {"sum", QuasimetricSpec::sum()},
      {"mean", QuasimetricSpec::mean()},
      {"convex", QuasimetricSpec::convex({0.3, 0.7},
                                         {QuasimetricSpec::max(), QuasimetricSpec::simple(0.25)})}};
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  const int triples_per_dim = 100000 / 3 + 1;  // 1e5 triples per kind across dims {2,8,64}

  for (const auto& [name, spec] : kinds) {
    for (int dim : {2, 8, 64}) {
      std::vector<double> x(dim), y(dim), z(dim), lx(dim), ly(dim);
      for (int t = 0; t < triples_per_dim; ++t) {
        for (int i = 0; i < dim; ++i) {
          x[i] = value(rng);
          y[i] = value(rng);
          z[i] = value(rng);
        }
        if (quasimetric_value(x, x, spec) != 0.0) {
          return {false, name + ": identity violated"};
        }
        const double dxy = quasimetric_value(x, y, spec);
        if (!(dxy >= 0.0)) return {false, name + ": negativity violated"};
        const double dxz = quasimetric_value(x, z, spec);
        const double dzy = quasimetric_value(z, y, spec);
        if (!(dxy <= dxz + dzy + 1e-9)) {
          return {false, name + ": triangle inequality violated"};
        }
        for (double lambda : {0.5, 2.0, 10.0}) {
          for (int i = 0; i < dim; ++i) {
            lx[i] = lambda * x[i];
            ly[i] = lambda * y[i];
          }
          const double scaled = quasimetric_value(lx, ly, spec);
          const double err = std::abs(scaled - lambda * dxy) / std::max(1e-12, lambda * dxy);
          if (dxy > 1e-12 && err > 1e-9) {
            return {false, name + ": homogeneity violated"};
          }
        }
      }
    }
  }
  return {true, "7 kinds x dims {2,8,64} x 1e5 triples"};
}

// ---------------------------------------------------------------------------
// Criterion 2: gradients of encoder + quasimetric compositions.

Outcome criterion2() {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> width(2, 8);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  const std::vector<QuasimetricSpec> kinds = {
      QuasimetricSpec::simple(0.0), QuasimetricSpec::simple(0.5), QuasimetricSpec::simple(1.0),
      QuasimetricSpec::max(),       QuasimetricSpec::sum(),       QuasimetricSpec::mean(),
      QuasimetricSpec::convex({0.4, 0.6}, {QuasimetricSpec::sum(), QuasimetricSpec::simple(0.5)})};

  int done = 0;
  int attempts = 0;
  double worst = 0.0;
  while (done < 100) {
    if (++attempts > 3000) return {false, "could not find enough kink-free samples"};
    const QuasimetricSpec& spec = kinds[static_cast<size_t>(done) % kinds.size()];
    const int in_dim = width(rng);
    NetworkParams params = NetworkParams::init(in_dim, {width(rng), width(rng)}, width(rng), rng);

    const int pairs = 3;
    Tensor xa(pairs, in_dim), xb(pairs, in_dim);
    for (double& v : xa.values) v = value(rng);
    for (double& v : xb.values) v = value(rng);

    auto loss_of = [&](const NetworkParams& p) {
      Graph g;
      VarId ea = network_forward(g, p, g.constant(xa), nullptr);
      VarId eb = network_forward(g, p, g.constant(xb), nullptr);
      return g.scalar(g.mean_all(quasimetric_distance(g, ea, eb, spec)));
    };

    // Stay away from relu kinks and max ties in the latent difference.
    {
      const Tensor la = network_apply(params, xa);
      const Tensor lb = network_apply(params, xb);
      bool near_kink = false;
      for (int64_t r = 0; r < la.rows() && !near_kink; ++r) {
        std::vector<double> reduced(static_cast<size_t>(la.cols()));
        for (int64_t c = 0; c < la.cols(); ++c) {
          const double diff = la(r, c) - lb(r, c);
          if (std::abs(diff) < 1e-3) near_kink = true;
          reduced[static_cast<size_t>(c)] = std::max(diff, 0.0);
        }
        for (size_t i = 0; i < reduced.size() && !near_kink; ++i) {
          for (size_t j = i + 1; j < reduced.size(); ++j) {
            if (std::abs(reduced[i] - reduced[j]) < 1e-3) near_kink = true;
          }
        }
      }
      if (near_kink) continue;
    }

    Graph g;
    NetworkLeaves leaves;
    VarId ea = network_forward(g, params, g.constant(xa), &leaves);
    NetworkLeaves leaves_b;
    VarId eb = network_forward(g, params, g.constant(xb), &leaves_b);
    g.backward(g.mean_all(quasimetric_distance(g, ea, eb, spec)));
    NetworkGrads autodiff = leaves.grads(g, params);
    const NetworkGrads autodiff_b = leaves_b.grads(g, params);
    for (size_t l = 0; l < autodiff.layers.size(); ++l) {
      for (size_t k = 0; k < autodiff.layers[l].weight.values.size(); ++k) {
        autodiff.layers[l].weight.values[k] += autodiff_b.layers[l].weight.values[k];
      }
      for (size_t k = 0; k < autodiff.layers[l].bias.values.size(); ++k) {
        autodiff.layers[l].bias.values[k] += autodiff_b.layers[l].bias.values[k];
      }
    }
    const NetworkGrads numeric = testing::finite_difference_gradients(loss_of, params);
    const double err = testing::max_relative_error(autodiff, numeric);
    worst = std::max(worst, err);
    if (err >= 1e-4) {
      return {false, "relative error " + std::to_string(err) + " at composition " +
                         std::to_string(done)};
    }
    ++done;
  }
  std::ostringstream detail;
  detail << "100 compositions, worst relative error " << worst;
  return {true, detail.str()};
}

// ---------------------------------------------------------------------------
// Criterion 3: exact oracle equivalence and the optimality property.

Outcome criterion3() {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<int> size(2, 50);
  std::uniform_real_distribution<double> density(0.05, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    const auto edges = testing::random_graph(n, density(rng), rng);
    const GroundTruthMAD fw = floyd_warshall(n, edges);
    const GroundTruthMAD bfs = testing::bfs_all_pairs(n, edges);
    if (fw.d != bfs.d) return {false, "floyd_warshall disagrees with BFS on trial " + std::to_string(trial)};
  }

  for (int trial = 0; trial < 100; ++trial) {
    const int n = 6;
    const auto edges = testing::random_graph(n, 0.35, rng);
    const GroundTruthMAD gt = floyd_warshall(n, edges);
    std::vector<double> candidate(static_cast<size_t>(n) * n);
    for (size_t k = 0; k < candidate.size(); ++k) {
      candidate[k] = gt.d[k] == GroundTruthMAD::kInf ? std::numeric_limits<double>::infinity()
                                                     : static_cast<double>(gt.d[k]);
    }
    const OptimalityReport base = check_mad_optimality(candidate, n, edges);
    if (!base.feasible || !base.pointwise_dominated || !base.sum_dominated) {
      return {false, "exact table not reported feasible+dominant on trial " + std::to_string(trial)};
    }
    for (size_t k = 0; k < candidate.size(); ++k) {
      if (std::isinf(candidate[k])) continue;
      auto perturbed = candidate;
      perturbed[k] += 1.0;
      if (check_mad_optimality(perturbed, n, edges).feasible) {
        return {false, "+1 perturbation stayed feasible on trial " + std::to_string(trial)};
      }
    }
  }
  return {true, "200 graphs vs BFS; 100 graphs x all +1 perturbations infeasible"};
}

// ---------------------------------------------------------------------------
// Learning runs shared by criteria 4, 5, 6, 7.

struct LearningRun {
  uint64_t seed = 0;
  MetricsReport final_report;
  double ratio_cv_at_1000 = 0.0;
  double ratio_cv_final = 0.0;
  bool asymmetry_witness = false;
  bool finite_losses = true;
};

MadDistConfig table1_config() {
  // Published defaults; latent 32 per the saturation ablation.
  MadDistConfig cfg;
  cfg.w_r = 1.0;
  cfg.w_c = 0.1;
  cfg.d_max = 100.0;
  cfg.h_c = 6;
  cfg.quasimetric = QuasimetricSpec::simple(0.5);
  cfg.batch_objective = 256;
  cfg.batch_constraint = 1024;
  cfg.steps = 50000;
  cfg.learning_rate = 1e-4;
  cfg.latent_dim = 32;
  cfg.hidden = {512, 512};
  cfg.eval_interval = 1000;
  return cfg;
}

template <typename TrainFn>
LearningRun run_learning(const DiscreteEnv& env, const GroundTruthMAD& gt, uint64_t seed,
                         const QuasimetricSpec& spec, TrainFn train_fn) {
  LearningRun run;
  run.seed = seed;
  const TrajectoryDataset ds = collect(env, 100, 200, seed);

  auto eval_rng = std::make_shared<std::mt19937_64>(seeded_engine(seed, 505));
  TrainHooks hooks;
  hooks.evaluate = [&env, &gt, &spec, eval_rng](const NetworkParams& p) {
    return evaluate_network(p, spec, env, gt, 0, *eval_rng);
  };

  const TrainResult result = train_fn(ds, seed, hooks);

  for (const auto& row : result.history) {
    if (!std::isfinite(row.losses.total)) run.finite_losses = false;
    if (row.step == 1000 && row.metrics) run.ratio_cv_at_1000 = row.metrics->ratio_cv;
  }
  run.final_report = *result.history.back().metrics;
  run.ratio_cv_final = run.final_report.ratio_cv;

  // Learned asymmetry on cliffwalking: falling beats walking back.
  if (const auto* cliff = dynamic_cast<const CliffWalkingEnv*>(&env)) {
    auto obs_rng = seeded_engine(seed, 606);
    Tensor obs(2, env.obs_dim());
    env.observe(cliff->id_of(10, 1), obs_rng, obs.row_ptr(0));
    env.observe(cliff->start_id(), obs_rng, obs.row_ptr(1));
    const Tensor emb = network_apply(result.params, obs);
    const size_t dim = static_cast<size_t>(emb.cols());
    const double fall = quasimetric_value(std::span<const double>(emb.row_ptr(0), dim),
                                          std::span<const double>(emb.row_ptr(1), dim), spec);
    const double walk = quasimetric_value(std::span<const double>(emb.row_ptr(1), dim),
                                          std::span<const double>(emb.row_ptr(0), dim), spec);
    run.asymmetry_witness = fall < walk;
  }
  return run;
}

// Runs three seeds with at most two in flight.
template <typename MakeRun>
std::vector<LearningRun> run_seeds(MakeRun make_run) {
  const std::vector<uint64_t> seeds = {1, 2, 3};
  std::vector<LearningRun> runs(seeds.size());
  auto f0 = std::async(std::launch::async, [&] { return make_run(seeds[0]); });
  auto f1 = std::async(std::launch::async, [&] { return make_run(seeds[1]); });
  runs[0] = f0.get();
  runs[1] = f1.get();
  runs[2] = make_run(seeds[2]);
  return runs;
}

std::optional<std::vector<LearningRun>> g_cliff_maddist;

const std::vector<LearningRun>& cliff_maddist_runs() {
  if (!g_cliff_maddist) {
    CliffWalkingEnv env;
    const GroundTruthMAD gt = env.ground_truth();
    const MadDistConfig cfg = table1_config();
    g_cliff_maddist = run_seeds([&](uint64_t seed) {
      return run_learning(env, gt, seed, cfg.quasimetric,
                          [&cfg](const TrajectoryDataset& ds, uint64_t s, const TrainHooks& hooks) {
                            return train_maddist(ds, cfg, s, hooks);
                          });
    });
  }
  return *g_cliff_maddist;
}

std::string describe_runs(const std::vector<LearningRun>& runs) {
  std::ostringstream out;
  out.precision(3);
  for (const auto& run : runs) {
    out << " seed" << run.seed << "(rho=" << run.final_report.spearman
        << ",r=" << run.final_report.pearson << ",cv=" << run.final_report.ratio_cv << ")";
  }
  return out.str();
}

Outcome criterion4() {
  const auto& runs = cliff_maddist_runs();
  int passing = 0;
  for (const auto& run : runs) {
    if (run.final_report.spearman >= 0.90 && run.final_report.pearson >= 0.90 &&
        run.asymmetry_witness) {
      ++passing;
    }
  }
  return {passing >= 2, "cliffwalking maddist:" + describe_runs(runs) + " -> " +
                            std::to_string(passing) + "/3 seeds at rho>=0.90, r>=0.90, witness"};
}

Outcome criterion5() {
  KeyDoorGridWorldEnv env;
  const GroundTruthMAD gt = env.ground_truth();
  const MadDistConfig cfg = table1_config();
  const auto runs = run_seeds([&](uint64_t seed) {
    return run_learning(env, gt, seed, cfg.quasimetric,
                        [&cfg](const TrajectoryDataset& ds, uint64_t s, const TrainHooks& hooks) {
                          return train_maddist(ds, cfg, s, hooks);
                        });
  });
  int passing = 0;
  for (const auto& run : runs) {
    if (run.final_report.spearman >= 0.85) ++passing;
  }
  return {passing >= 2, "keydoor maddist:" + describe_runs(runs) + " -> " + std::to_string(passing) +
                            "/3 seeds at rho>=0.85"};
}

Outcome criterion6() {
  CliffWalkingEnv env;
  const GroundTruthMAD gt = env.ground_truth();
  TDMadDistConfig cfg;
  static_cast<TrainConfigBase&>(cfg) = table1_config();
  cfg.polyak_beta = 0.005;
  const auto runs = run_seeds([&](uint64_t seed) {
    return run_learning(env, gt, seed, cfg.quasimetric,
                        [&cfg](const TrajectoryDataset& ds, uint64_t s, const TrainHooks& hooks) {
                          return train_tdmaddist(ds, cfg, s, hooks);
                        });
  });
  int passing = 0;
  bool all_finite = true;
  for (const auto& run : runs) {
    if (!run.finite_losses) all_finite = false;
    if (run.final_report.spearman >= 0.75 && run.finite_losses) ++passing;
  }
  return {passing >= 2 && all_finite, "cliffwalking tdmaddist:" + describe_runs(runs) + " -> " +
                                          std::to_string(passing) +
                                          "/3 seeds at rho>=0.75, losses finite"};
}

Outcome criterion7() {
  const auto& runs = cliff_maddist_runs();
  int passing = 0;
  std::ostringstream detail;
  detail.precision(3);
  for (const auto& run : runs) {
    const bool ok = run.ratio_cv_final <= 0.5 && run.ratio_cv_final <= run.ratio_cv_at_1000;
    detail << " seed" << run.seed << "(cv@1000=" << run.ratio_cv_at_1000
           << ",final=" << run.ratio_cv_final << (ok ? ",ok" : ",bad") << ")";
    if (ok) ++passing;
  }
  return {passing >= 2, "ratio CV trend:" + detail.str() + " -> " + std::to_string(passing) + "/3"};
}

// ---------------------------------------------------------------------------
// Criterion 8: planner success rates on the simplified point maze.

Outcome criterion8() {
  PointMaze maze = PointMaze::builtin("umaze");
  const GroundTruthMAD gt = maze.ground_truth();
  PointMazeSim sim{&maze};

  PlanConfig pc;
  pc.candidates = 100;
  pc.horizon = 10;
  pc.max_episode_steps = 600;
  pc.goal_tolerance = 0.5;

  auto run_episodes = [&](const BatchScorer<PointMassState>& scorer, uint64_t seed_base) {
    int successes = 0;
    for (int ep = 0; ep < 50; ++ep) {
      const uint64_t ep_seed = mix64(seed_base ^ static_cast<uint64_t>(ep));
      auto setup = seeded_engine(ep_seed, 606);
      const PointMassState start = maze.start_state(setup);
      const auto goal_xy = maze.goal_point(setup);
      PointMassState goal;
      goal.px = goal_xy[0];
      goal.py = goal_xy[1];
      if (run_episode(sim, start, goal, scorer, pc, ep_seed).success) ++successes;
    }
    return successes;
  };

  const int oracle_successes = run_episodes(oracle_scorer(gt, maze), 90001);

  // Learned metric: a light maddist encoder on random-policy data. The
  // criterion pins the planner protocol, not the training budget.
  const TrajectoryDataset ds = collect(maze, 300, 300, 7);
  MadDistConfig cfg;
  cfg.quasimetric = QuasimetricSpec::simple(0.5);
  cfg.hidden = {64, 64};
  cfg.latent_dim = 16;
  cfg.steps = 10000;
  cfg.learning_rate = 3e-4;
  cfg.eval_interval = 2000;
  const TrainResult trained = train_maddist(ds, cfg, 7);
  const int learned_successes = run_episodes(learned_scorer(trained.params, cfg.quasimetric, maze), 90002);

  std::ostringstream detail;
  detail << "umaze 50 episodes: learned " << learned_successes << "/50, oracle " << oracle_successes
         << "/50";
  return {learned_successes >= 40 && oracle_successes >= 45, detail.str()};
}

// ---------------------------------------------------------------------------
// Criterion 9: CLI determinism.

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome criterion9() {
  if (g_cli_path.empty()) return {false, "no --cli path provided"};
  const fs::path root = fs::temp_directory_path() / "mad_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);

  const std::string common =
      " --set env.name=cliffwalking --set dataset.n_trajectories=10 --set dataset.max_len=50"
      " --set train.steps=200 --set train.hidden=32 --set train.latent_dim=8"
      " --set train.eval_interval=100 --seed 5";

  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / ("collect_" + std::string(run));
    if (run_cli("collect -o " + dir.string() + common) != 0) return {false, "collect failed"};
  }
  if (slurp(root / "collect_a/dataset.txt") != slurp(root / "collect_b/dataset.txt")) {
    return {false, "collect reruns differ"};
  }
  const std::string dataset = (root / "collect_a/dataset.txt").string();

  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / ("train_" + std::string(run));
    if (run_cli("train -o " + dir.string() + common + " --set dataset.path=" + dataset) != 0) {
      return {false, "train failed"};
    }
  }
  if (slurp(root / "train_a/metrics.csv") != slurp(root / "train_b/metrics.csv")) {
    return {false, "train reruns differ"};
  }
  if (slurp(root / "train_a/checkpoint.bin") != slurp(root / "train_b/checkpoint.bin")) {
    return {false, "checkpoints differ"};
  }
  const std::string ckpt = (root / "train_a/checkpoint.bin").string();

  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / ("eval_" + std::string(run));
    if (run_cli("eval -o " + dir.string() + common + " --set checkpoint=" + ckpt) != 0) {
      return {false, "eval failed"};
    }
  }
  if (slurp(root / "eval_a/eval.csv") != slurp(root / "eval_b/eval.csv")) {
    return {false, "eval reruns differ"};
  }
  fs::remove_all(root);
  return {true, "collect/train/eval reruns byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  // One BLAS thread per training run; seeds run as parallel tasks instead.
  setenv("OPENBLAS_NUM_THREADS", "1", 1);
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      g_cli_path = argv[++i];
    } else {
      selected.push_back(std::atoi(arg.c_str()));
    }
  }

  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "quasimetric axioms", criterion1},
      {2, "gradient correctness", criterion2},
      {3, "oracle equivalence and optimality", criterion3},
      {4, "cliffwalking maddist learning", criterion4},
      {5, "keydoor maddist learning", criterion5},
      {6, "tdmaddist sanity", criterion6},
      {7, "ratio CV trend", criterion7},
      {8, "planner success rates", criterion8},
      {9, "CLI determinism", criterion9},
  };

  bool all_pass = true;
  for (const auto& criterion : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), criterion.id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s (%s) [%.1fs]\n", outcome.pass ? "PASS" : "FAIL", criterion.id,
                criterion.name, outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
