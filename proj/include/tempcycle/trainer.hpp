#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tempcycle/checkpoint.hpp"
#include "tempcycle/config.hpp"
#include "tempcycle/data.hpp"
#include "tempcycle/losses.hpp"
#include "tempcycle/nets.hpp"
#include "tempcycle/replay_buffer.hpp"

namespace tempcycle {

/// A generated pair of consecutive frames of interest for a temporal discriminator.
/// `earlier_run`/`later_run` record which generator run produced each frame.
struct TemporalSample {
  FramePair pair;
  int earlier_run = 0;
  int later_run = 0;
};

struct AdamState {
  std::vector<torch::Tensor> m, v;
  int64_t steps = 0;
};

/// Constant: no decay schedule is applied.
double learning_rate_at(const TrainConfig& config, int64_t step);

/// One Adam update of `params` from their accumulated gradients.
void adam_step(const std::vector<torch::Tensor>& params, AdamState& state, const TrainConfig& config);

// Everything needed to continue training bit-exactly.
struct TrainState {
  TrainConfig config;
  Generator g{nullptr};  // X -> Y
  Generator f{nullptr};  // Y -> X
  Discriminator d_x{nullptr}, d_y{nullptr};
  Discriminator d_tx{nullptr}, d_ty{nullptr};  // temporal; null for the baseline
  std::map<std::string, AdamState> adam;       // keyed by network name
  ReplayBuffer<Frame> pool_x, pool_y;
  ReplayBuffer<TemporalSample> pool_tx, pool_ty;
  int64_t step = 0;
  int64_t epoch = 0;
  int64_t step_in_epoch = 0;

  static TrainState create(const TrainConfig& config);

  bool temporal() const { return !config.baseline; }

  /// Network name -> module, in update order: G, F, D_X, D_Y[, D_TX, D_TY].
  std::vector<std::pair<std::string, torch::nn::Module*>> networks() const;

  Archive to_archive() const;
  static TrainState from_archive(const Archive& archive);
  void save(const std::filesystem::path& path) const;
  static TrainState load(const std::filesystem::path& path);
};

/// Full two-run step on one X triplet and one Y triplet: joint G+F update, then D_X, D_Y, D_TX, D_TY.
LossReport train_step(TrainState& state, const FrameTriplet& x, const FrameTriplet& y);
/// Gradient-accumulated step over a batch (loss averaged over samples).
LossReport train_step(TrainState& state, std::span<const FrameTriplet> x, std::span<const FrameTriplet> y);

/// Per-frame CycleGAN step with 3-channel generators and no temporal terms.
LossReport train_step_baseline(TrainState& state, const Frame& x, const Frame& y);
LossReport train_step_baseline(TrainState& state, std::span<const Frame> x, std::span<const Frame> y);

using StepCallback = std::function<void(int64_t step, int64_t epoch, const LossReport&)>;

/// Runs (or resumes) the epoch loop from `state`, writing
/// `out_dir/loss_log.csv` and `out_dir/checkpoints/step_%08d`.
/// Returns the final checkpoint path.
std::filesystem::path train(TrainState& state, const std::vector<FrameTriplet>& x_triplets,
                            const std::vector<FrameTriplet>& y_triplets, const std::filesystem::path& out_dir,
                            const StepCallback& on_step = {});

/// Training configuration recorded in a checkpoint header; validates format and architecture keys.
TrainConfig config_from_checkpoint(const Archive& archive);

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int64_t step);

}  // namespace tempcycle
