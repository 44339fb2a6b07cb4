#include "mad/training.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <unordered_map>

#include "mad/errors.hpp"
#include "mad/rng.hpp"

namespace mad {

void TrainConfigBase::validate() const {
  if (w_r <= 0.0 || w_c <= 0.0) throw ConfigError("loss weights w_r, w_c must be positive");
  if (h_c < 1) throw ConfigError("h_c must be >= 1");
  if (batch_objective < 1 || batch_constraint < 1) throw ConfigError("batch sizes must be positive");
  if (steps < 0) throw ConfigError("steps must be nonnegative");
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
  quasimetric.validate();
}

namespace {

void copy_rows(Tensor& dst, const TrajectoryDataset& ds, const std::vector<PairRef>& refs,
               int index_shift = 0) {
  dst = Tensor(static_cast<int64_t>(refs.size()), ds.obs_dim);
  for (size_t r = 0; r < refs.size(); ++r) {
    const PairRef ref{refs[r].trajectory, refs[r].index + index_shift};
    std::memcpy(dst.row_ptr(static_cast<int64_t>(r)), obs_of(ds, ref),
                static_cast<size_t>(ds.obs_dim) * sizeof(double));
  }
}

}  // namespace

ObjectiveBatch materialize_objective(const TrajectoryDataset& ds, const PairBatch& pairs,
                                     bool with_successor) {
  ObjectiveBatch out;
  copy_rows(out.anchor, ds, pairs.anchor);
  copy_rows(out.partner, ds, pairs.partner);
  out.gaps.assign(pairs.gaps.begin(), pairs.gaps.end());
  if (with_successor) {
    copy_rows(out.successor, ds, pairs.anchor, 1);
    out.has_successor = true;
  }
  return out;
}

RandomBatch materialize_random(const TrajectoryDataset& ds, const PairBatch& pairs, bool with_successor) {
  RandomBatch out;
  copy_rows(out.first, ds, pairs.anchor);
  copy_rows(out.second, ds, pairs.partner);
  if (with_successor) {
    copy_rows(out.successor, ds, pairs.anchor, 1);
    out.has_successor = true;
  }
  return out;
}

ConstraintBatch materialize_constraint(const TrajectoryDataset& ds, const PairBatch& pairs) {
  ConstraintBatch out;
  copy_rows(out.anchor, ds, pairs.anchor);
  copy_rows(out.partner, ds, pairs.partner);
  out.gaps.assign(pairs.gaps.begin(), pairs.gaps.end());
  return out;
}

namespace {

// Collapses identical observation rows across all batch tensors so the
// encoder runs once per distinct row. Exact: gathers restore per-pair rows
// and backward scatter-adds through them, which matches encoding duplicates
// separately. On enumerable state spaces this bounds the encoder batch by
// the number of distinct observed states.
class RowDeduper {
 public:
  RowDeduper(int64_t cols, int64_t expected_rows) : cols_(cols) {
    rows_.reserve(static_cast<size_t>(expected_rows * cols));
    index_.reserve(static_cast<size_t>(expected_rows) * 2);
  }

  std::vector<int> add(const Tensor& t) {
    if (t.cols() != cols_) throw ShapeError("deduper: column mismatch");
    std::vector<int> idx(static_cast<size_t>(t.rows()));
    for (int64_t r = 0; r < t.rows(); ++r) idx[static_cast<size_t>(r)] = add_row(t.row_ptr(r));
    return idx;
  }

  Tensor unique() const {
    Tensor t(static_cast<int64_t>(rows_.size()) / cols_, cols_);
    std::memcpy(t.values.data(), rows_.data(), rows_.size() * sizeof(double));
    return t;
  }

 private:
  struct Key {
    const double* p;
    int64_t n;
    bool operator==(const Key& o) const {
      return n == o.n && std::memcmp(p, o.p, static_cast<size_t>(n) * sizeof(double)) == 0;
    }
  };
  struct KeyHash {
    size_t operator()(const Key& k) const {
      // FNV-1a over the raw bytes.
      const unsigned char* bytes = reinterpret_cast<const unsigned char*>(k.p);
      size_t h = 1469598103934665603ULL;
      for (int64_t i = 0; i < k.n * static_cast<int64_t>(sizeof(double)); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
      }
      return h;
    }
  };

  int add_row(const double* row) {
    // rows_ never reallocates (reserved for the full batch), so keys can
    // point into it.
    const size_t offset = rows_.size();
    rows_.insert(rows_.end(), row, row + cols_);
    Key key{rows_.data() + offset, cols_};
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(offset / cols_));
    if (!inserted) rows_.resize(offset);
    return it->second;
  }

  int64_t cols_;
  std::vector<double> rows_;
  std::unordered_map<Key, int, KeyHash> index_;
};

Tensor reciprocal(const std::vector<double>& v) {
  Tensor t(static_cast<int64_t>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) t.values[i] = 1.0 / v[i];
  return t;
}

Tensor negated(const std::vector<double>& v) {
  Tensor t(static_cast<int64_t>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) t.values[i] = -v[i];
  return t;
}

void check_gaps(const std::vector<double>& gaps, const char* which) {
  for (double g : gaps) {
    if (!(g >= 1.0)) throw InputError(std::string(which) + ": every gap must be >= 1");
  }
}

// Pairwise quasimetric values between rows of two equally-shaped latent
// matrices, computed without a graph (target-network side).
std::vector<double> pairwise_distances(const Tensor& x, const Tensor& y, const QuasimetricSpec& spec) {
  std::vector<double> d(static_cast<size_t>(x.rows()));
  const size_t cols = static_cast<size_t>(x.cols());
  for (int64_t r = 0; r < x.rows(); ++r) {
    d[static_cast<size_t>(r)] = quasimetric_value(std::span<const double>(x.row_ptr(r), cols),
                                                  std::span<const double>(y.row_ptr(r), cols), spec);
  }
  return d;
}

Tensor gather_tensor(const Tensor& src, const std::vector<int>& idx) {
  Tensor out(static_cast<int64_t>(idx.size()), src.cols());
  for (size_t r = 0; r < idx.size(); ++r) {
    std::memcpy(out.row_ptr(static_cast<int64_t>(r)), src.row_ptr(idx[r]),
                static_cast<size_t>(src.cols()) * sizeof(double));
  }
  return out;
}

struct BuiltLoss {
  Graph graph;
  VarId total = -1;
  LossParts parts;
  NetworkLeaves leaves;
};

// Shared construction of both composite losses. For the TD variant,
// objective denominators and random-pair targets are precomputed constants
// (the target network is evaluated without gradient flow).
void build_loss(BuiltLoss& built, const NetworkParams& params, const ObjectiveBatch& obj,
                const RandomBatch& rnd, const ConstraintBatch& con, const TrainConfigBase& cfg,
                const std::vector<double>& obj_denominator, const std::vector<double>& rnd_denominator,
                double d_max) {
  if (obj.anchor.rows() == 0 || rnd.first.rows() == 0 || con.anchor.rows() == 0) {
    throw InputError("loss: batches must be nonempty");
  }

  Graph& g = built.graph;
  const int64_t expected =
      obj.anchor.rows() * 2 + rnd.first.rows() * 2 + con.anchor.rows() * 2;
  RowDeduper dedup(obj.anchor.cols(), expected);
  const std::vector<int> ia = dedup.add(obj.anchor);
  const std::vector<int> ib = dedup.add(obj.partner);
  const std::vector<int> ra = dedup.add(rnd.first);
  const std::vector<int> rb = dedup.add(rnd.second);
  const std::vector<int> ca = dedup.add(con.anchor);
  const std::vector<int> cb = dedup.add(con.partner);

  VarId unique_obs = g.constant(dedup.unique());
  VarId embedded = network_forward(g, params, unique_obs, &built.leaves);

  auto pair_distance = [&](const std::vector<int>& a, const std::vector<int>& b) {
    return quasimetric_distance(g, g.gather_rows(embedded, a), g.gather_rows(embedded, b),
                                cfg.quasimetric);
  };

  // L_o: mean (d / denom - 1)^2.
  VarId d_obj = pair_distance(ia, ib);
  VarId l_o = g.mean_all(g.square(g.affine(g.mul_const(d_obj, reciprocal(obj_denominator)), 1.0, -1.0)));

  // MadDist L_r: mean relu(1 - d/d_max)^2. TD L_r': mean (d/target - 1)^2.
  VarId d_rnd = pair_distance(ra, rb);
  VarId l_r;
  if (rnd_denominator.empty()) {
    l_r = g.mean_all(g.square(g.relu(g.affine(d_rnd, -1.0 / d_max, 1.0))));
  } else {
    l_r = g.mean_all(g.square(g.affine(g.mul_const(d_rnd, reciprocal(rnd_denominator)), 1.0, -1.0)));
  }

  // L_c: mean relu(d - gap)^2.
  VarId d_con = pair_distance(ca, cb);
  VarId l_c = g.mean_all(g.square(g.relu(g.add_const(d_con, negated(con.gaps)))));

  VarId total = g.add(l_o, g.add(g.affine(l_r, cfg.w_r, 0.0), g.affine(l_c, cfg.w_c, 0.0)));

  built.total = total;
  built.parts.objective = g.scalar(l_o);
  built.parts.random = g.scalar(l_r);
  built.parts.constraint = g.scalar(l_c);
  built.parts.total = g.scalar(total);
}

void build_maddist(BuiltLoss& built, const NetworkParams& params, const ObjectiveBatch& obj,
                   const RandomBatch& rnd, const ConstraintBatch& con, const MadDistConfig& cfg) {
  cfg.validate();
  if (cfg.d_max <= 0.0) throw ConfigError("d_max must be positive");
  check_gaps(obj.gaps, "objective batch");
  check_gaps(con.gaps, "constraint batch");
  if (static_cast<int64_t>(obj.gaps.size()) != obj.anchor.rows()) {
    throw InputError("objective batch: gaps missing");
  }
  build_loss(built, params, obj, rnd, con, cfg, obj.gaps, {}, cfg.d_max);
}

void build_tdmaddist(BuiltLoss& built, const NetworkParams& params, const NetworkParams& target,
                     const ObjectiveBatch& obj, const RandomBatch& rnd, const ConstraintBatch& con,
                     const TDMadDistConfig& cfg) {
  cfg.validate();
  if (!obj.has_successor || !rnd.has_successor) {
    throw InputError("tdmaddist: batches must carry anchor successors");
  }
  if (!target.same_architecture(params)) throw ShapeError("tdmaddist: target architecture mismatch");
  check_gaps(obj.gaps, "objective batch");
  check_gaps(con.gaps, "constraint batch");

  // Target-side distances, no gradient flow: embed the distinct rows under
  // the target parameters and read pairwise distances.
  RowDeduper dedup(obj.anchor.cols(), obj.successor.rows() + obj.partner.rows() + rnd.successor.rows() +
                                          rnd.second.rows());
  const std::vector<int> os = dedup.add(obj.successor);
  const std::vector<int> op = dedup.add(obj.partner);
  const std::vector<int> rs = dedup.add(rnd.successor);
  const std::vector<int> rr = dedup.add(rnd.second);
  const Tensor target_emb = network_apply(target, dedup.unique());

  const std::vector<double> d_obj_boot =
      pairwise_distances(gather_tensor(target_emb, os), gather_tensor(target_emb, op), cfg.quasimetric);
  const std::vector<double> d_rnd_boot =
      pairwise_distances(gather_tensor(target_emb, rs), gather_tensor(target_emb, rr), cfg.quasimetric);

  std::vector<double> obj_denominator(obj.gaps.size());
  for (size_t k = 0; k < obj.gaps.size(); ++k) {
    obj_denominator[k] = std::min(obj.gaps[k], 1.0 + d_obj_boot[k]);
  }
  std::vector<double> rnd_denominator(d_rnd_boot.size());
  for (size_t k = 0; k < d_rnd_boot.size(); ++k) rnd_denominator[k] = 1.0 + d_rnd_boot[k];

  build_loss(built, params, obj, rnd, con, cfg, obj_denominator, rnd_denominator, 1.0);
}

NetworkGrads finish_backward(BuiltLoss& built, const NetworkParams& params) {
  built.graph.backward(built.total);
  return built.leaves.grads(built.graph, params);
}

}  // namespace

LossParts loss_maddist(const NetworkParams& params, const ObjectiveBatch& obj, const RandomBatch& rnd,
                       const ConstraintBatch& con, const MadDistConfig& cfg) {
  BuiltLoss built;
  build_maddist(built, params, obj, rnd, con, cfg);
  return built.parts;
}

LossResult loss_maddist_grads(const NetworkParams& params, const ObjectiveBatch& obj,
                              const RandomBatch& rnd, const ConstraintBatch& con,
                              const MadDistConfig& cfg) {
  BuiltLoss built;
  build_maddist(built, params, obj, rnd, con, cfg);
  return {built.parts, finish_backward(built, params)};
}

LossParts loss_tdmaddist(const NetworkParams& params, const NetworkParams& target,
                         const ObjectiveBatch& obj, const RandomBatch& rnd, const ConstraintBatch& con,
                         const TDMadDistConfig& cfg) {
  BuiltLoss built;
  build_tdmaddist(built, params, target, obj, rnd, con, cfg);
  return built.parts;
}

LossResult loss_tdmaddist_grads(const NetworkParams& params, const NetworkParams& target,
                                const ObjectiveBatch& obj, const RandomBatch& rnd,
                                const ConstraintBatch& con, const TDMadDistConfig& cfg) {
  BuiltLoss built;
  build_tdmaddist(built, params, target, obj, rnd, con, cfg);
  return {built.parts, finish_backward(built, params)};
}

namespace {

std::string describe_batch(const ObjectiveBatch& obj, const ConstraintBatch& con) {
  std::ostringstream out;
  out << "objective rows=" << obj.anchor.rows() << " first gaps=[";
  for (size_t k = 0; k < obj.gaps.size() && k < 8; ++k) out << (k ? "," : "") << obj.gaps[k];
  out << "], constraint rows=" << con.anchor.rows();
  return out.str();
}

struct TrainDriver {
  const TrajectoryDataset& ds;
  const TrainConfigBase& cfg;
  uint64_t seed;
  const TrainHooks& hooks;
  bool td;
  double d_max = 0.0;
  double polyak_beta = 0.0;

  TrainResult run() {
    if (ds.empty()) throw InputError("train: dataset is empty");
    if (ds.obs_dim < 1) throw InputError("train: dataset has no observations");
    cfg.validate();

    auto init_rng = seeded_engine(seed, 101);
    auto batch_rng = seeded_engine(seed, 202);
    auto probe_rng = seeded_engine(seed, 303);

    TrainResult result;
    result.params = NetworkParams::init(ds.obs_dim, cfg.hidden, cfg.latent_dim, init_rng);
    if (td) result.target = result.params;
    result.optimizer = AdamWState::init(result.params, cfg.learning_rate, cfg.weight_decay);
    result.optimizer.beta1 = cfg.adam_beta1;
    result.optimizer.beta2 = cfg.adam_beta2;
    result.optimizer.epsilon = cfg.adam_epsilon;

    // Step-0 row: loss on a probe batch (not part of the training stream).
    LossParts probe = step_loss(result, probe_rng);
    emit_row(result, 0, probe);

    LossParts window_sum;
    int64_t window_count = 0;
    for (int64_t step = 1; step <= cfg.steps; ++step) {
      const LossParts parts = apply_step(result, batch_rng);
      window_sum.total += parts.total;
      window_sum.objective += parts.objective;
      window_sum.random += parts.random;
      window_sum.constraint += parts.constraint;
      ++window_count;
      if (step % cfg.eval_interval == 0 || step == cfg.steps) {
        LossParts mean{window_sum.total / window_count, window_sum.objective / window_count,
                       window_sum.random / window_count, window_sum.constraint / window_count};
        emit_row(result, step, mean);
        window_sum = LossParts{};
        window_count = 0;
        if (step == cfg.steps) break;
      }
    }
    result.steps_run = cfg.steps;
    return result;
  }

  struct Batches {
    ObjectiveBatch obj;
    RandomBatch rnd;
    ConstraintBatch con;
    PairBatch obj_pairs, rnd_pairs, con_pairs;
  };

  Batches draw(std::mt19937_64& rng) {
    Batches b;
    b.obj_pairs = sample_objective_pairs(ds, cfg.batch_objective, rng);
    b.rnd_pairs = td ? sample_td_random_pairs(ds, cfg.batch_objective, rng)
                     : sample_random_state_pairs(ds, cfg.batch_objective, rng);
    b.con_pairs = sample_constraint_pairs(ds, cfg.h_c, cfg.batch_constraint, rng);
    b.obj = materialize_objective(ds, b.obj_pairs, td);
    b.rnd = materialize_random(ds, b.rnd_pairs, td);
    b.con = materialize_constraint(ds, b.con_pairs);
    return b;
  }

  LossParts step_loss(TrainResult& r, std::mt19937_64& rng) {
    Batches b = draw(rng);
    if (td) {
      return loss_tdmaddist(r.params, *r.target, b.obj, b.rnd, b.con, td_config());
    }
    return loss_maddist(r.params, b.obj, b.rnd, b.con, mad_config());
  }

  LossParts apply_step(TrainResult& r, std::mt19937_64& rng) {
    Batches b = draw(rng);
    LossResult loss = td ? loss_tdmaddist_grads(r.params, *r.target, b.obj, b.rnd, b.con, td_config())
                         : loss_maddist_grads(r.params, b.obj, b.rnd, b.con, mad_config());
    if (!std::isfinite(loss.parts.total)) {
      throw NumericError("non-finite loss at step " + std::to_string(r.optimizer.step_count + 1) + "; " +
                         describe_batch(b.obj, b.con));
    }
    if (cfg.grad_clip > 0.0) {
      const double norm = loss.grads.global_norm();
      if (norm > cfg.grad_clip) loss.grads.scale(cfg.grad_clip / norm);
    }
    adamw_step(r.params, loss.grads, r.optimizer);
    if (td) polyak_update(*r.target, r.params, polyak_beta);
    return loss.parts;
  }

  MadDistConfig mad_config() const {
    MadDistConfig c;
    static_cast<TrainConfigBase&>(c) = cfg;
    c.d_max = d_max;
    return c;
  }

  TDMadDistConfig td_config() const {
    TDMadDistConfig c;
    static_cast<TrainConfigBase&>(c) = cfg;
    c.polyak_beta = polyak_beta;
    return c;
  }

  void emit_row(TrainResult& r, int64_t step, const LossParts& losses) {
    MetricRow row;
    row.step = step;
    row.losses = losses;
    if (hooks.evaluate) row.metrics = hooks.evaluate(r.params);
    if (hooks.on_row) hooks.on_row(row);
    r.history.push_back(std::move(row));
  }
};

}  // namespace

TrainResult train_maddist(const TrajectoryDataset& ds, const MadDistConfig& cfg, uint64_t seed,
                          const TrainHooks& hooks) {
  if (cfg.d_max <= 0.0) throw ConfigError("d_max must be positive");
  TrainDriver driver{ds, cfg, seed, hooks, false};
  driver.d_max = cfg.d_max;
  return driver.run();
}

TrainResult train_tdmaddist(const TrajectoryDataset& ds, const TDMadDistConfig& cfg, uint64_t seed,
                            const TrainHooks& hooks) {
  if (cfg.polyak_beta <= 0.0 || cfg.polyak_beta >= 1.0) {
    throw ConfigError("polyak_beta must lie in (0, 1)");
  }
  TrainDriver driver{ds, cfg, seed, hooks, true};
  driver.polyak_beta = cfg.polyak_beta;
  return driver.run();
}

std::string metric_history_header() {
  return "step,L_o,L_r,L_c,spearman,pearson,ratio_cv";
}

std::string metric_row_csv(const MetricRow& row) {
  char buf[256];
  if (row.metrics) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                  static_cast<long long>(row.step), row.losses.objective, row.losses.random,
                  row.losses.constraint, row.metrics->spearman, row.metrics->pearson,
                  row.metrics->ratio_cv);
  } else {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,,,", static_cast<long long>(row.step),
                  row.losses.objective, row.losses.random, row.losses.constraint);
  }
  return buf;
}

}  // namespace mad
