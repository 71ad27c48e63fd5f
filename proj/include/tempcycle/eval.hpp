#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempcycle/frame.hpp"
#include "tempcycle/infer.hpp"

namespace tempcycle {

struct FlickerReport {
  double score = 0.0;              // mean of residuals
  std::vector<double> residuals;   // one per t >= 1
  std::string model_id;
  std::string dataset_id;
};

// Flicker: temporal change of the translation not explained by temporal
// change of the source,
//
//   residual_t = mean |(g_t - g_{t-1}) - (x_t - x_{t-1})|,   t >= 1
//   score      = mean_t residual_t
FlickerReport flicker_report(std::span<const Frame> source, std::span<const Frame> translated);
double flicker_score(std::span<const Frame> source, std::span<const Frame> translated);

/// Streams `frames` through `map` (first frame paired with itself).
std::vector<Frame> translate_sequence(const FrameMap& map, std::span<const Frame> frames);

/// Mean L1 between x_t and F(y_{t-1}, y_t) for t >= 2, where y are G's frames of interest.
double cycle_reconstruction_error(const FrameMap& g, const FrameMap& f, std::span<const Frame> frames);

struct VideoScore {
  std::string video_id;
  size_t frames = 0;
  double flicker = 0.0;
  double recon_error = 0.0;
  std::optional<double> baseline_flicker;
  std::optional<double> baseline_recon_error;
};

struct ComparisonReport {
  std::vector<VideoScore> rows;  // one per test video
  double mean_flicker = 0.0;
  double mean_recon_error = 0.0;
  std::optional<double> mean_baseline_flicker;
  std::optional<double> mean_baseline_recon_error;
  std::optional<double> flicker_ratio;  // mean_flicker / mean_baseline_flicker

  /// Column order of the report (schema v1).
  static std::string csv_header();
  void write_csv(const std::filesystem::path& path) const;
  std::string summary_json() const;
};

/// Scores a checkpoint (and optionally a baseline) on every video of `test_dir`, x2y direction.
ComparisonReport compare_models(const std::filesystem::path& checkpoint,
                                const std::optional<std::filesystem::path>& baseline,
                                const std::filesystem::path& test_dir);

}  // namespace tempcycle
