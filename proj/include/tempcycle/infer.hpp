#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "tempcycle/config.hpp"
#include "tempcycle/frame.hpp"
#include "tempcycle/nets.hpp"

namespace tempcycle {

enum class Direction { XtoY, YtoX };

Direction parse_direction(const std::string& text);  // "x2y" | "y2x"

/// Maps (previous input, current input) to the current frame of interest.
using FrameMap = std::function<Frame(const Frame& previous, const Frame& current)>;

/// Wraps a generator; single-frame generators ignore `previous`. Runs without autograd.
FrameMap frame_map(Generator generator);

struct LoadedGenerator {
  Generator net{nullptr};
  TrainConfig config;
};

/// G (x2y) or F (y2x) from a training-state checkpoint.
LoadedGenerator load_generator(const std::filesystem::path& checkpoint, Direction direction);

/// Frame as the model sees it at inference: preprocess to load size, centre crop to image size.
Frame load_inference_frame(const std::filesystem::path& png, const TrainConfig& config);

// One-in-one-out streaming translation with one frame of context. The first
// frame is paired with itself.
class StreamSession {
 public:
  StreamSession(FrameMap map, int image_size);

  Frame push_frame(const Frame& frame);
  size_t frames_emitted() const { return emitted_; }
  bool has_context() const { return previous_.has_value(); }

 private:
  FrameMap map_;
  int image_size_;
  std::optional<Frame> previous_;
  size_t emitted_ = 0;
};

/// Translates every frame of `in_dir` into `out_dir/%06d.png`; returns the frame count.
size_t translate_video(const std::filesystem::path& checkpoint, const std::filesystem::path& in_dir,
                       const std::filesystem::path& out_dir, Direction direction = Direction::XtoY);

}  // namespace tempcycle
