#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mad/quasimetric.hpp"
#include "mad/training.hpp"

namespace mad {

// Flat "key = value" text with dotted section names; '#' starts a comment.
// Later assignments win, so command-line overrides are applied as extra
// assignments after the file.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int64_t get_int(const std::string& key, int64_t fallback);
  std::vector<int64_t> get_int_list(const std::string& key, const std::vector<int64_t>& fallback);
  std::optional<std::string> get_optional(const std::string& key);

  // Keys present in the input but never read by the resolver: typos.
  std::vector<std::string> unread_keys() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> read_;
};

// Fully resolved run settings; every field has its final value, including
// defaults the user never spelled out.
struct RunConfig {
  uint64_t seed = 0;
  std::string out_dir;
  std::string algorithm = "maddist";  // maddist | tdmaddist

  std::string env_name = "cliffwalking";
  double env_sigma = 0.1;
  std::string env_layout = "umaze";  // pointmaze only; name or path to ASCII file

  int64_t dataset_trajectories = 100;
  int64_t dataset_max_len = 0;  // 0 -> per-env default (200 grids, 500 maze)
  std::string dataset_path;

  MadDistConfig maddist;
  TDMadDistConfig tdmaddist;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  std::string checkpoint_path;  // eval / plan input

  int64_t eval_pairs = 0;  // 0 -> enumerate
  bool eval_dump_pairs = false;

  int64_t plan_candidates = 100;
  int64_t plan_horizon = 10;
  int64_t plan_episodes = 50;
  int64_t plan_max_steps = 400;
  double plan_goal_tolerance = 0.5;
  std::string plan_metric = "learned";  // learned | oracle
  bool plan_traces = false;
  int64_t plan_start_state = -1;  // discrete envs: -1 = env default
  int64_t plan_goal_state = -1;

  bool is_pointmaze() const { return env_name == "pointmaze"; }
  int64_t resolved_max_len() const {
    return dataset_max_len > 0 ? dataset_max_len : (is_pointmaze() ? 500 : 200);
  }

  // The echo written into every output directory.
  std::string resolved_text() const;
};

// Resolves file + overrides into a RunConfig. `overrides` are "key=value"
// strings; `env_seed` supplies the MAD_SEED fallback when the config has no
// seed. Throws ConfigError for unknown keys, bad values or a missing seed.
RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides,
                         const char* env_seed, bool require_seed = true);
RunConfig resolve_config_text(const std::string& text, const std::vector<std::string>& overrides,
                              const char* env_seed, bool require_seed = true);

}  // namespace mad
