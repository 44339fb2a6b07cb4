#include "mad/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mad/errors.hpp"

namespace mad {

namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

KeyValueConfig KeyValueConfig::from_text(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line is not 'key = value': " + line, line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty config key", line_no);
    cfg.set(key, value);
  }
  return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  read_[key] = false;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::optional<std::string> KeyValueConfig::get_optional(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  read_[key] = true;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
  auto v = get_optional(key);
  return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
  auto v = get_optional(key);
  if (!v) return fallback;
  try {
    size_t used = 0;
    const double parsed = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + *v);
  }
}

int64_t KeyValueConfig::get_int(const std::string& key, int64_t fallback) {
  auto v = get_optional(key);
  if (!v) return fallback;
  try {
    size_t used = 0;
    const int64_t parsed = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + *v);
  }
}

std::vector<int64_t> KeyValueConfig::get_int_list(const std::string& key,
                                                  const std::vector<int64_t>& fallback) {
  auto v = get_optional(key);
  if (!v) return fallback;
  std::vector<int64_t> out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has a bad list entry: " + item);
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
  return out;
}

std::vector<std::string> KeyValueConfig::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, read] : read_) {
    if (!read) out.push_back(key);
  }
  return out;
}

namespace {

uint64_t parse_seed(const std::string& text) {
  try {
    size_t used = 0;
    const uint64_t seed = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return seed;
  } catch (const std::exception&) {
    throw ConfigError("seed is not a nonnegative integer: " + text);
  }
}

}  // namespace

RunConfig resolve_config_text(const std::string& text, const std::vector<std::string>& overrides,
                              const char* env_seed, bool require_seed) {
  KeyValueConfig kv = KeyValueConfig::from_text(text);
  for (const std::string& assignment : overrides) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override is not key=value: " + assignment);
    }
    kv.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  RunConfig rc;

  if (auto seed = kv.get_optional("seed")) {
    rc.seed = parse_seed(*seed);
  } else if (env_seed && *env_seed) {
    rc.seed = parse_seed(env_seed);
  } else if (require_seed) {
    throw ConfigError("no seed: set 'seed' in the config or the MAD_SEED environment variable");
  }

  rc.out_dir = kv.get_string("out", "");
  rc.algorithm = kv.get_string("algo", "maddist");
  if (rc.algorithm != "maddist" && rc.algorithm != "tdmaddist") {
    throw ConfigError("algo must be maddist or tdmaddist, got " + rc.algorithm);
  }

  rc.env_name = kv.get_string("env.name", "cliffwalking");
  rc.env_sigma = kv.get_double("env.sigma", 0.1);
  rc.env_layout = kv.get_string("env.layout", "umaze");

  rc.dataset_trajectories = kv.get_int("dataset.n_trajectories", 100);
  rc.dataset_max_len = kv.get_int("dataset.max_len", 0);
  rc.dataset_path = kv.get_string("dataset.path", "");

  TrainConfigBase base;
  base.w_r = kv.get_double("train.w_r", 1.0);
  base.w_c = kv.get_double("train.w_c", 0.1);
  base.h_c = static_cast<int>(kv.get_int("train.h_c", 6));
  base.quasimetric = QuasimetricSpec::parse(kv.get_string("quasimetric", "simple(0.5)"));
  base.batch_objective = static_cast<int>(kv.get_int("train.batch_objective", 256));
  base.batch_constraint = static_cast<int>(kv.get_int("train.batch_constraint", 1024));
  base.steps = kv.get_int("train.steps", 50000);
  base.learning_rate = kv.get_double("train.learning_rate", 1e-4);
  base.latent_dim = kv.get_int("train.latent_dim", 256);
  base.hidden = kv.get_int_list("train.hidden", {512, 512});
  base.weight_decay = kv.get_double("train.weight_decay", 1e-4);
  base.grad_clip = kv.get_double("train.grad_clip", 0.0);
  base.eval_interval = kv.get_int("train.eval_interval", 1000);

  static_cast<TrainConfigBase&>(rc.maddist) = base;
  rc.maddist.d_max = kv.get_double("train.d_max", 100.0);
  static_cast<TrainConfigBase&>(rc.tdmaddist) = base;
  rc.tdmaddist.polyak_beta = kv.get_double("train.polyak_beta", 0.005);

  rc.adam_beta1 = kv.get_double("optimizer.beta1", 0.9);
  rc.adam_beta2 = kv.get_double("optimizer.beta2", 0.999);
  rc.adam_epsilon = kv.get_double("optimizer.epsilon", 1e-8);
  for (TrainConfigBase* c : {static_cast<TrainConfigBase*>(&rc.maddist),
                             static_cast<TrainConfigBase*>(&rc.tdmaddist)}) {
    c->adam_beta1 = rc.adam_beta1;
    c->adam_beta2 = rc.adam_beta2;
    c->adam_epsilon = rc.adam_epsilon;
  }

  rc.checkpoint_path = kv.get_string("checkpoint", "");

  rc.eval_pairs = kv.get_int("eval.n_pairs", 0);
  rc.eval_dump_pairs = kv.get_int("eval.dump_pairs", 0) != 0;

  rc.plan_candidates = kv.get_int("plan.candidates", 100);
  rc.plan_horizon = kv.get_int("plan.horizon", 10);
  rc.plan_episodes = kv.get_int("plan.episodes", 50);
  rc.plan_max_steps = kv.get_int("plan.max_steps", 400);
  rc.plan_goal_tolerance = kv.get_double("plan.goal_tolerance", 0.5);
  rc.plan_metric = kv.get_string("plan.metric", "learned");
  if (rc.plan_metric != "learned" && rc.plan_metric != "oracle") {
    throw ConfigError("plan.metric must be learned or oracle");
  }
  rc.plan_traces = kv.get_int("plan.traces", 0) != 0;
  rc.plan_start_state = kv.get_int("plan.start_state", -1);
  rc.plan_goal_state = kv.get_int("plan.goal_state", -1);

  const auto unread = kv.unread_keys();
  if (!unread.empty()) {
    std::string joined;
    for (const auto& k : unread) joined += (joined.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config keys: " + joined);
  }
  return rc;
}

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides,
                         const char* env_seed, bool require_seed) {
  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file: " + config_path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  return resolve_config_text(text, overrides, env_seed, require_seed);
}

std::string RunConfig::resolved_text() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    // Shortest representation that round-trips.
    for (int precision : {15, 16, 17}) {
      std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
      if (std::strtod(buf, nullptr) == v) break;
    }
    return std::string(buf);
  };
  out << "seed = " << seed << "\n";
  out << "out = " << out_dir << "\n";
  out << "algo = " << algorithm << "\n";
  out << "env.name = " << env_name << "\n";
  out << "env.sigma = " << num(env_sigma) << "\n";
  out << "env.layout = " << env_layout << "\n";
  out << "dataset.n_trajectories = " << dataset_trajectories << "\n";
  out << "dataset.max_len = " << resolved_max_len() << "\n";
  out << "dataset.path = " << dataset_path << "\n";
  const TrainConfigBase& base = algorithm == "tdmaddist"
                                    ? static_cast<const TrainConfigBase&>(tdmaddist)
                                    : static_cast<const TrainConfigBase&>(maddist);
  out << "quasimetric = " << base.quasimetric.to_string() << "\n";
  out << "train.w_r = " << num(base.w_r) << "\n";
  out << "train.w_c = " << num(base.w_c) << "\n";
  out << "train.h_c = " << base.h_c << "\n";
  if (algorithm == "maddist") out << "train.d_max = " << num(maddist.d_max) << "\n";
  if (algorithm == "tdmaddist") out << "train.polyak_beta = " << num(tdmaddist.polyak_beta) << "\n";
  out << "train.batch_objective = " << base.batch_objective << "\n";
  out << "train.batch_constraint = " << base.batch_constraint << "\n";
  out << "train.steps = " << base.steps << "\n";
  out << "train.learning_rate = " << num(base.learning_rate) << "\n";
  out << "train.latent_dim = " << base.latent_dim << "\n";
  out << "train.hidden = ";
  for (size_t i = 0; i < base.hidden.size(); ++i) out << (i ? "," : "") << base.hidden[i];
  out << "\n";
  out << "train.weight_decay = " << num(base.weight_decay) << "\n";
  out << "train.grad_clip = " << num(base.grad_clip) << "\n";
  out << "train.eval_interval = " << base.eval_interval << "\n";
  out << "optimizer.beta1 = " << num(adam_beta1) << "\n";
  out << "optimizer.beta2 = " << num(adam_beta2) << "\n";
  out << "optimizer.epsilon = " << num(adam_epsilon) << "\n";
  out << "checkpoint = " << checkpoint_path << "\n";
  out << "eval.n_pairs = " << eval_pairs << "\n";
  out << "eval.dump_pairs = " << (eval_dump_pairs ? 1 : 0) << "\n";
  out << "plan.candidates = " << plan_candidates << "\n";
  out << "plan.horizon = " << plan_horizon << "\n";
  out << "plan.episodes = " << plan_episodes << "\n";
  out << "plan.max_steps = " << plan_max_steps << "\n";
  out << "plan.goal_tolerance = " << num(plan_goal_tolerance) << "\n";
  out << "plan.metric = " << plan_metric << "\n";
  out << "plan.traces = " << (plan_traces ? 1 : 0) << "\n";
  out << "plan.start_state = " << plan_start_state << "\n";
  out << "plan.goal_state = " << plan_goal_state << "\n";
  return out.str();
}

}  // namespace mad
