#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tempcycle/frame.hpp"
#include "tempcycle/image_io.hpp"

namespace tempcycle {

namespace fs = std::filesystem;

/// Pixel mapping [0, 255] -> [-1, 1], no resampling.
Frame frame_from_image(const RgbImage& image);
/// [-1, 1] -> [0, 255]; clamps, then rounds half away from zero.
RgbImage image_from_frame(const Frame& frame);

/// Square crop centred on the longer axis, bilinear resize to size x size, map to [-1, 1].
Frame preprocess(const RgbImage& image, int size = 286);

/// Central size x size window of a frame.
Frame center_crop(const Frame& frame, int size);

/// Start indices s = 0, stride, 2*stride, ... with s + 2 < frame_count.
std::vector<size_t> triplet_starts(size_t frame_count, int stride);

struct Video {
  std::string id;
  std::vector<fs::path> frames;  // 000000.png, 000001.png, ... in order
};

struct VideoDataset {
  fs::path root;
  std::vector<Video> videos;
  double fps = 30.0;
};

/// Frame files of one video directory; names must be %06d.png, contiguous from 0.
std::vector<fs::path> list_frames(const fs::path& video_dir);

/// Videos under `split_dir`, one subdirectory each (sorted by id). A directory
/// holding frames directly is treated as a single video.
VideoDataset scan_videos(const fs::path& split_dir);

/// Throws if any video id appears in both datasets.
void ensure_disjoint(const VideoDataset& a, const VideoDataset& b);

struct FrameTriplet {
  std::array<Frame, 3> frames;  // t-2, t-1, t
  std::string video_id;
  size_t start = 0;
};

/// Loads and preprocesses (to load_size) the sampled triplets of one video.
std::vector<FrameTriplet> sample_triplets(const Video& video, int stride, int load_size = 286);
std::vector<FrameTriplet> load_triplets(const VideoDataset& dataset, int stride, int load_size = 286);

struct AugmentOptions {
  int crop_size = 256;
  double flip_probability = 0.5;
  std::optional<std::pair<int, int>> offset;  // (top, left); drawn uniformly when unset
};

/// One crop window and one flip decision, shared by all three frames.
FrameTriplet augment(const FrameTriplet& triplet, std::mt19937_64& rng, const AugmentOptions& options = {});

}  // namespace tempcycle
