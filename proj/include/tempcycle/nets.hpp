#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "tempcycle/frame.hpp"

namespace tempcycle {

/// Residual blocks in every generator (one fewer than the classic 256px CycleGAN).
inline constexpr int kResidualBlocks = 8;

struct NetConfig {
  int image_size = 256;  // training crop edge; sizes the discriminator depth
  double width = 1.0;    // filter multiplier on the 64-filter baseline
  int frames = 2;        // frames per generator run: 2 (temporal) or 1 (per-frame baseline)

  int base_filters() const;
  void validate() const;
};

// Geometry of the discriminator stack: `stride2_layers` k4/s2 convolutions
// followed by a k4/s1 single-channel head.
struct DiscriminatorLayout {
  int stride2_layers = 0;
  int receptive_field = 0;
};

/// Receptive field of one output unit of a stack of (kernel, stride) layers.
int receptive_field(const std::vector<std::pair<int, int>>& kernel_stride);

/// Shallowest stack whose output units see at least `image_size` pixels.
DiscriminatorLayout discriminator_layout(int image_size);

class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// c7s1-k, d2k, d4k, 8 x R4k, u2k, uk, c7s1-(3*frames) with tanh.
class GeneratorImpl : public torch::nn::Module {
 public:
  GeneratorImpl(int frames, int filters);
  torch::Tensor forward(const torch::Tensor& x);

  int frames() const { return frames_; }
  int channels() const { return 3 * frames_; }
  int residual_blocks() const { return residual_blocks_; }

 private:
  int frames_;
  int residual_blocks_ = 0;
  torch::nn::Sequential model_{nullptr};
};
TORCH_MODULE(Generator);

/// Full-image convolutional discriminator with a raw (linear) score map.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(int in_channels, int filters, int image_size);
  torch::Tensor forward(const torch::Tensor& x);

  int in_channels() const { return in_channels_; }
  const DiscriminatorLayout& layout() const { return layout_; }

 private:
  int in_channels_;
  DiscriminatorLayout layout_;
  torch::nn::Sequential model_{nullptr};
};
TORCH_MODULE(Discriminator);

Generator make_generator(const NetConfig& cfg);
Discriminator make_discriminator(const NetConfig& cfg, bool temporal);

/// N(0, 0.02) for conv weights, zero biases, unit/zero instance-norm affine.
void initialize_weights(torch::nn::Module& module, uint64_t seed);

/// Runs a two-frame generator; `later` of the result is the frame of interest.
FramePair generator_forward(Generator& g, const FramePair& input);
/// Runs a single-frame (baseline) generator.
Frame generator_forward(Generator& g, const Frame& input);

torch::Tensor discriminator_forward(Discriminator& d, const Frame& input);
torch::Tensor discriminator_forward(Discriminator& d, const FramePair& input);

int64_t count_parameters(const torch::nn::Module& module);

}  // namespace tempcycle
