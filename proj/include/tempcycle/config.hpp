#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tempcycle/losses.hpp"
#include "tempcycle/nets.hpp"

namespace tempcycle {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training hyperparameters. Config-file keys are the member names.
struct TrainConfig {
  double lambda = 10.0;
  double mu = 10.0;
  double identity = 0.0;
  double learning_rate = 1e-4;
  int batch_size = 1;
  int epochs = 60;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  int image_size = 256;
  int load_size = 0;  // 0: round(image_size * 286 / 256)
  double width = 1.0;
  uint64_t seed = 0;
  int64_t checkpoint_every = 0;  // steps; 0 keeps only the final checkpoint
  int triplet_stride = 120;
  int buffer_capacity = 50;
  bool baseline = false;

  int resolved_load_size() const;
  NetConfig net() const;
  LossWeights weights() const;
  void validate() const;
};

/// Flat `key = value` lines; `#` starts a comment. Throws ConfigError naming the line.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

/// Throws ConfigError naming the key when it is unknown or its value does not parse.
void apply_config_value(TrainConfig& config, const std::string& key, const std::string& value);

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

/// Every key with its value; floating values round-trip exactly.
std::map<std::string, std::string> config_to_map(const TrainConfig& config);
TrainConfig config_from_map(const std::map<std::string, std::string>& values);

/// 32x32 crops, width 0.25, 2 epochs: exercises the whole graph in CI time.
TrainConfig smoke_preset();

}  // namespace tempcycle
