#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tempcycle/data.hpp"
#include "tempcycle/frame.hpp"
#include "tempcycle/image_io.hpp"

namespace tempcycle {

// Procedural two-domain video corpus.
//
// Both domains animate 2-3 ellipses/polygons drifting and rotating over a
// background. Domain X ("phantom") renders them flat-shaded from a small
// palette on a plain background, so a frame never holds more than
// kFlatColorLimit distinct colors. Domain Y ("tissue") renders the same kind
// of motion with texture attached to each shape, a per-video color jitter,
// a textured background and moving specular highlights, which puts it well
// above that count.
//
// Per-frame displacement of any shape point is at most 3 px at size 128
// (scaled linearly with size). As a result the mean absolute difference of
// consecutive frames (0-255 scale) stays below kMaxMeanFrameDifference, while
// same-index frames of two different videos differ by more than that.

inline constexpr int kFlatColorLimit = 32;
inline constexpr double kMaxDisplacementAt128 = 3.0;
inline constexpr double kMaxMeanFrameDifference = 5.0;

/// Renders one video; deterministic in (domain, video_seed, frames, size).
std::vector<RgbImage> synth_video(Domain domain, uint64_t video_seed, int frames, int size);

struct SynthOptions {
  uint64_t seed = 7;
  int train_videos = 4;
  int test_videos = 2;
  int frames_per_video = 30;
  int size = 64;
};

/// Writes `n_videos` videos of one domain to `split_dir/<video_id>/%06d.png`.
/// Video ids are zero-padded global indices starting at `first_index`.
VideoDataset synth_generate(Domain domain, uint64_t seed, int n_videos, int frames_per_video, int size,
                            const std::filesystem::path& split_dir, int first_index = 0);

/// Writes root/{X,Y}/{train,test}/... plus root/manifest.json; returns the manifest text.
std::string synth_corpus(const std::filesystem::path& root, const SynthOptions& options);

int distinct_colors(const RgbImage& image);

/// Mean absolute channel difference of two equally sized images, in [0, 255].
double mean_abs_difference(const RgbImage& a, const RgbImage& b);

}  // namespace tempcycle
