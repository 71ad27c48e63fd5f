#include "tempcycle/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tempcycle {

namespace nn = torch::nn;

int NetConfig::base_filters() const {
  return std::max(1, static_cast<int>(std::lround(64.0 * width)));
}

void NetConfig::validate() const {
  if (image_size < 4 || image_size % 4 != 0) {
    throw std::invalid_argument("image_size must be a positive multiple of 4, got " +
                                std::to_string(image_size));
  }
  if (!(width > 0.0)) throw std::invalid_argument("width must be > 0");
  if (frames != 1 && frames != 2) throw std::invalid_argument("frames must be 1 or 2");
}

int receptive_field(const std::vector<std::pair<int, int>>& kernel_stride) {
  int rf = 1;
  for (auto it = kernel_stride.rbegin(); it != kernel_stride.rend(); ++it) {
    rf = (rf - 1) * it->second + it->first;
  }
  return rf;
}

DiscriminatorLayout discriminator_layout(int image_size) {
  std::vector<std::pair<int, int>> layers{{4, 1}};
  for (int n = 1;; ++n) {
    layers.insert(layers.begin(), {4, 2});
    const int rf = receptive_field(layers);
    if (rf >= image_size) return {n, rf};
  }
}

ResidualBlockImpl::ResidualBlockImpl(int channels) {
  body_ = register_module(
      "body",
      nn::Sequential(
          nn::ReflectionPad2d(1),
          nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).bias(false)),
          nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true)),
          nn::ReLU(),
          nn::ReflectionPad2d(1),
          nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).bias(false)),
          nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true))));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

namespace {

void conv_norm_relu(nn::Sequential& seq, int in, int out, int kernel, int stride, int padding) {
  seq->push_back(nn::Conv2d(
      nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false)));
  seq->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out).affine(true)));
  seq->push_back(nn::ReLU());
}

}  // namespace

GeneratorImpl::GeneratorImpl(int frames, int filters) : frames_(frames) {
  const int io = 3 * frames;
  nn::Sequential seq;
  seq->push_back(nn::ReflectionPad2d(3));
  conv_norm_relu(seq, io, filters, 7, 1, 0);
  conv_norm_relu(seq, filters, 2 * filters, 3, 2, 1);
  conv_norm_relu(seq, 2 * filters, 4 * filters, 3, 2, 1);
  for (int i = 0; i < kResidualBlocks; ++i) {
    seq->push_back(ResidualBlock(4 * filters));
    ++residual_blocks_;
  }
  for (int mult : {4, 2}) {
    seq->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(mult * filters, mult * filters / 2, 3)
                                           .stride(2)
                                           .padding(1)
                                           .output_padding(1)
                                           .bias(false)));
    seq->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(mult * filters / 2).affine(true)));
    seq->push_back(nn::ReLU());
  }
  seq->push_back(nn::ReflectionPad2d(3));
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(filters, io, 7)));
  seq->push_back(nn::Tanh());
  model_ = register_module("model", seq);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& x) { return model_->forward(x); }

DiscriminatorImpl::DiscriminatorImpl(int in_channels, int filters, int image_size)
    : in_channels_(in_channels), layout_(discriminator_layout(image_size)) {
  nn::Sequential seq;
  int in = in_channels;
  for (int i = 0; i < layout_.stride2_layers; ++i) {
    const int out = filters * std::min(1 << i, 8);
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1).bias(i == 0)));
    if (i > 0) seq->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out).affine(true)));
    seq->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    in = out;
  }
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, 4).stride(1).padding(1)));
  model_ = register_module("model", seq);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) { return model_->forward(x); }

Generator make_generator(const NetConfig& cfg) {
  cfg.validate();
  return Generator(cfg.frames, cfg.base_filters());
}

Discriminator make_discriminator(const NetConfig& cfg, bool temporal) {
  cfg.validate();
  return Discriminator(temporal ? 6 : 3, cfg.base_filters(), cfg.image_size);
}

void initialize_weights(torch::nn::Module& module, uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = at::detail::createCPUGenerator(seed);
  module.apply([&](nn::Module& m) {
    if (auto* conv = m.as<nn::Conv2d>()) {
      conv->weight.normal_(0.0, 0.02, gen);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* deconv = m.as<nn::ConvTranspose2d>()) {
      deconv->weight.normal_(0.0, 0.02, gen);
      if (deconv->bias.defined()) deconv->bias.zero_();
    } else if (auto* norm = m.as<nn::InstanceNorm2d>()) {
      norm->weight.fill_(1.0);
      norm->bias.zero_();
    }
  });
}

FramePair generator_forward(Generator& g, const FramePair& input) {
  if (g->frames() != 2) throw std::invalid_argument("generator_forward: generator expects 1 frame");
  if (!input.earlier.same_shape(input.later)) {
    throw std::invalid_argument("generator_forward: input frame shapes differ");
  }
  if (input.later.height() % 4 != 0 || input.later.width() % 4 != 0) {
    throw std::invalid_argument("generator_forward: spatial size must be divisible by 4");
  }
  return FramePair::split(g->forward(input.stacked()));
}

Frame generator_forward(Generator& g, const Frame& input) {
  if (g->frames() != 1) throw std::invalid_argument("generator_forward: generator expects 2 frames");
  if (input.height() % 4 != 0 || input.width() % 4 != 0) {
    throw std::invalid_argument("generator_forward: spatial size must be divisible by 4");
  }
  return Frame(g->forward(input.batched()).squeeze(0));
}

torch::Tensor discriminator_forward(Discriminator& d, const Frame& input) {
  if (d->in_channels() != 3) {
    throw std::invalid_argument("discriminator_forward: discriminator expects " +
                                std::to_string(d->in_channels()) + " channels, got 3");
  }
  return d->forward(input.batched());
}

torch::Tensor discriminator_forward(Discriminator& d, const FramePair& input) {
  if (d->in_channels() != 6) {
    throw std::invalid_argument("discriminator_forward: discriminator expects " +
                                std::to_string(d->in_channels()) + " channels, got 6");
  }
  return d->forward(input.stacked());
}

int64_t count_parameters(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace tempcycle
