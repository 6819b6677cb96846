#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flowmno/detect.hpp"
#include "flowmno/farneback.hpp"
#include "flowmno/gvo.hpp"
#include "flowmno/mno/loss.hpp"
#include "flowmno/mno/model.hpp"
#include "flowmno/mno/train.hpp"
#include "flowmno/synth_crowd.hpp"

namespace flowmno::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

/// `key = value` lines; '#' starts a comment. Duplicate keys are rejected.
std::vector<Entry> parse_key_values(const std::string& text);

double to_double(const Entry& e);
int to_int(const Entry& e);
std::uint64_t to_u64(const Entry& e);

struct RunConfig {
  farneback::Params flow;
  mno::ModelConfig model;
  mno::TrainConfig train;
  mno::LossConfig loss;
  gvo::GvoConfig gvo;
  synth::SceneConfig scene;
  int n_scenes = 20;
  int horizon = 12;
  double iou_threshold = detect::kDefaultIouThreshold;
  double conf_threshold = detect::kDefaultConfThreshold;
  std::filesystem::path data_dir;
  std::filesystem::path checkpoint;

  RunConfig();

  /// Sets the scene, model and training seeds together.
  void set_seed(std::uint64_t seed);

  /// Throws ConfigError naming the owning section when any invariant fails.
  void validate() const;
};

/// Applies entries on top of the defaults. Unknown keys and malformed values
/// raise ConfigError naming the key.
RunConfig load_run_config(const std::string& text);
RunConfig load_run_config_file(const std::filesystem::path& path);

/// Every recognised key in declaration order.
std::vector<std::string> run_config_keys();

/// Canonical `key=value` listing of a configuration.
std::string to_text(const RunConfig& cfg);

}  // namespace flowmno::config
