#include "tempcycle/infer.hpp"

#include <stdexcept>

#include "tempcycle/checkpoint.hpp"
#include "tempcycle/data.hpp"
#include "tempcycle/trainer.hpp"

namespace tempcycle {

Direction parse_direction(const std::string& text) {
  if (text == "x2y") return Direction::XtoY;
  if (text == "y2x") return Direction::YtoX;
  throw std::invalid_argument("direction must be x2y or y2x, got '" + text + "'");
}

FrameMap frame_map(Generator generator) {
  generator->eval();
  return [g = std::move(generator)](const Frame& previous, const Frame& current) mutable {
    torch::NoGradGuard no_grad;
    if (g->frames() == 1) return generator_forward(g, current);
    return generator_forward(g, FramePair{previous, current}).later;
  };
}

LoadedGenerator load_generator(const std::filesystem::path& checkpoint, Direction direction) {
  const auto archive = Archive::load(checkpoint);
  LoadedGenerator out;
  out.config = config_from_checkpoint(archive);
  out.net = make_generator(out.config.net());
  load_module_section(archive.section(direction == Direction::XtoY ? "G" : "F"), *out.net);
  out.net->eval();
  return out;
}

Frame load_inference_frame(const std::filesystem::path& png, const TrainConfig& config) {
  return center_crop(preprocess(read_png(png), config.resolved_load_size()), config.image_size);
}

StreamSession::StreamSession(FrameMap map, int image_size) : map_(std::move(map)), image_size_(image_size) {}

Frame StreamSession::push_frame(const Frame& frame) {
  if (frame.height() != image_size_ || frame.width() != image_size_) {
    throw std::invalid_argument("push_frame: expected " + std::to_string(image_size_) + "x" +
                                std::to_string(image_size_) + " frame, got " + Frame::shape_string(frame.tensor()));
  }
  const Frame& previous = previous_ ? *previous_ : frame;
  Frame out = map_(previous, frame);
  previous_ = frame;
  ++emitted_;
  return out;
}

size_t translate_video(const std::filesystem::path& checkpoint, const std::filesystem::path& in_dir,
                       const std::filesystem::path& out_dir, Direction direction) {
  const auto frames = list_frames(in_dir);
  auto model = load_generator(checkpoint, direction);
  StreamSession session(frame_map(model.net), model.config.image_size);
  std::filesystem::create_directories(out_dir);
  for (const auto& path : frames) {
    const auto out = session.push_frame(load_inference_frame(path, model.config));
    write_png(out_dir / path.filename(), image_from_frame(out));
  }
  return session.frames_emitted();
}

}  // namespace tempcycle
