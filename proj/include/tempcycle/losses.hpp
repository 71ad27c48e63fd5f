#pragma once

#include <torch/torch.h>

#include <optional>
#include <stdexcept>
#include <string>

#include "tempcycle/frame.hpp"

namespace tempcycle {

/// Thrown when a loss or one of its inputs is NaN/inf; names the offending term.
class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const std::string& component)
      : std::runtime_error("non-finite loss component: " + component), component_(component) {}
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

/// 0.5 * (mean((real - 1)^2) + mean(fake^2)).
torch::Tensor lsgan_d_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);
/// mean((fake - 1)^2).
torch::Tensor lsgan_g_loss(const torch::Tensor& fake_scores);

/// lambda * mean |original - reconstructed| over all elements of both frames.
torch::Tensor cycle_loss(const FramePair& original, const FramePair& reconstructed, double lambda);
torch::Tensor cycle_loss(const Frame& original, const Frame& reconstructed, double lambda);

/// Mean absolute difference between two renderings of the same time step.
torch::Tensor temporal_match_loss(const Frame& run1_later, const Frame& run2_earlier);

struct LossWeights {
  double lambda = 10.0;   // cycle consistency
  double mu = 10.0;       // temporal L1 matching
  double identity = 0.0;  // identity mapping; 0 disables
};

// Scalar summary of one training step. Cycle, temporal-match and identity
// terms are stored unweighted; total_generators applies LossWeights:
//
//   total_generators = g_adv + f_adv + g_temp_adv + f_temp_adv
//                    + lambda * (cycle_x + cycle_y)
//                    + mu * (temporal_match_x + temporal_match_y)
//                    + identity * (identity_x + identity_y)
//   total_discriminators = d_x + d_y + d_tx + d_ty
//
// Temporal fields are empty for the per-frame baseline; identity fields are
// empty when the identity weight is 0.
struct LossReport {
  double g_adv = 0, f_adv = 0;
  std::optional<double> g_temp_adv, f_temp_adv;
  double cycle_x = 0, cycle_y = 0;
  std::optional<double> temporal_match_x, temporal_match_y;
  std::optional<double> identity_x, identity_y;
  double d_x = 0, d_y = 0;
  std::optional<double> d_tx, d_ty;
  double total_generators = 0, total_discriminators = 0;

  bool temporal() const { return g_temp_adv.has_value(); }

  /// Column order of the loss log (schema v1).
  static std::string csv_header();
  std::string csv_row(int64_t step, int64_t epoch) const;
  static std::pair<std::pair<int64_t, int64_t>, LossReport> parse_csv_row(const std::string& line);
};

// Generator-side terms of one step, still attached to the graph.
struct GeneratorTerms {
  torch::Tensor g_adv, f_adv;
  std::optional<torch::Tensor> g_temp_adv, f_temp_adv;
  torch::Tensor cycle_x, cycle_y;
  std::optional<torch::Tensor> temporal_match_x, temporal_match_y;
  std::optional<torch::Tensor> identity_x, identity_y;
};

struct GeneratorObjective {
  torch::Tensor total;
  LossReport report;  // discriminator fields left at zero
};

GeneratorObjective assemble_generator_objective(const GeneratorTerms& terms, const LossWeights& weights);

/// Fills the discriminator fields and total_discriminators.
void record_discriminator_losses(LossReport& report, double d_x, double d_y,
                                 std::optional<double> d_tx, std::optional<double> d_ty);

}  // namespace tempcycle
