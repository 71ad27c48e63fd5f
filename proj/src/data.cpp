#include "tempcycle/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tempcycle/random.hpp"

namespace tempcycle {

namespace {

bool is_frame_name(const std::string& name) {
  if (name.size() != 10 || name.substr(6) != ".png") return false;
  return std::all_of(name.begin(), name.begin() + 6, [](char c) { return c >= '0' && c <= '9'; });
}

std::string frame_name(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.png", index);
  return buf;
}

}  // namespace

Frame frame_from_image(const RgbImage& image) {
  auto hwc = torch::from_blob(const_cast<uint8_t*>(image.pixels.data()), {image.height, image.width, 3},
                              torch::kUInt8);
  auto chw = hwc.permute({2, 0, 1}).to(torch::kFloat64);
  return Frame((chw / 127.5 - 1.0).to(torch::kFloat32).contiguous());
}

RgbImage image_from_frame(const Frame& frame) {
  auto t = frame.tensor().detach().to(torch::kFloat32).contiguous();
  const int h = static_cast<int>(frame.height()), w = static_cast<int>(frame.width());
  RgbImage img(w, h);
  auto acc = t.accessor<float, 3>();
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = std::clamp((static_cast<double>(acc[c][y][x]) + 1.0) * 127.5, 0.0, 255.0);
        img.at(x, y)[c] = static_cast<uint8_t>(std::round(v));
      }
    }
  }
  return img;
}

Frame preprocess(const RgbImage& image, int size) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<size_t>(image.width) * image.height * 3) {
    throw std::invalid_argument("preprocess: image is not a well-formed RGB buffer");
  }
  if (size <= 0) throw std::invalid_argument("preprocess: size must be positive");
  const int side = std::min(image.width, image.height);
  const int x0 = (image.width - side) / 2;
  const int y0 = (image.height - side) / 2;
  const double scale = static_cast<double>(side) / size;

  struct Tap {
    int i0, i1;
    double t;
  };
  std::vector<Tap> taps(size);
  for (int i = 0; i < size; ++i) {
    const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(side - 1));
    const int i0 = static_cast<int>(std::floor(src));
    taps[i] = {i0, std::min(i0 + 1, side - 1), src - i0};
  }

  auto out = torch::empty({3, size, size}, torch::kFloat32);
  auto acc = out.accessor<float, 3>();
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  for (int y = 0; y < size; ++y) {
    const auto& ty = taps[y];
    for (int x = 0; x < size; ++x) {
      const auto& tx = taps[x];
      const uint8_t* p00 = image.at(x0 + tx.i0, y0 + ty.i0);
      const uint8_t* p01 = image.at(x0 + tx.i1, y0 + ty.i0);
      const uint8_t* p10 = image.at(x0 + tx.i0, y0 + ty.i1);
      const uint8_t* p11 = image.at(x0 + tx.i1, y0 + ty.i1);
      for (int c = 0; c < 3; ++c) {
        const double top = lerp(p00[c], p01[c], tx.t);
        const double bottom = lerp(p10[c], p11[c], tx.t);
        acc[c][y][x] = static_cast<float>(lerp(top, bottom, ty.t) / 127.5 - 1.0);
      }
    }
  }
  return Frame(out);
}

Frame center_crop(const Frame& frame, int size) {
  if (frame.height() < size || frame.width() < size) {
    throw std::invalid_argument("center_crop: frame smaller than crop size");
  }
  const int64_t top = (frame.height() - size) / 2, left = (frame.width() - size) / 2;
  return Frame(frame.tensor().narrow(1, top, size).narrow(2, left, size).contiguous());
}

std::vector<size_t> triplet_starts(size_t frame_count, int stride) {
  if (stride < 1) throw std::invalid_argument("triplet sampling stride must be >= 1");
  std::vector<size_t> starts;
  for (size_t s = 0; s + 2 < frame_count; s += static_cast<size_t>(stride)) starts.push_back(s);
  return starts;
}

std::vector<fs::path> list_frames(const fs::path& video_dir) {
  if (!fs::is_directory(video_dir)) throw std::runtime_error("not a directory: " + video_dir.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(video_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") names.push_back(entry.path().filename());
  }
  if (names.empty()) throw std::runtime_error("no frames found in " + video_dir.string());
  std::sort(names.begin(), names.end());
  std::vector<fs::path> frames;
  for (size_t i = 0; i < names.size(); ++i) {
    if (!is_frame_name(names[i])) {
      throw std::runtime_error("unexpected frame file name " + names[i] + " in " + video_dir.string());
    }
    if (names[i] != frame_name(i)) {
      throw std::runtime_error("missing frame " + frame_name(i) + " in " + video_dir.string());
    }
    frames.push_back(video_dir / names[i]);
  }
  return frames;
}

VideoDataset scan_videos(const fs::path& split_dir) {
  if (!fs::is_directory(split_dir)) throw std::runtime_error("dataset directory not found: " + split_dir.string());
  VideoDataset ds;
  ds.root = split_dir;
  std::vector<fs::path> dirs;
  bool has_frames = false;
  for (const auto& entry : fs::directory_iterator(split_dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
    if (entry.is_regular_file() && entry.path().extension() == ".png") has_frames = true;
  }
  if (has_frames) {
    ds.videos.push_back({split_dir.filename().string(), list_frames(split_dir)});
    return ds;
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) ds.videos.push_back({d.filename().string(), list_frames(d)});
  if (ds.videos.empty()) throw std::runtime_error("no videos found in " + split_dir.string());
  return ds;
}

void ensure_disjoint(const VideoDataset& a, const VideoDataset& b) {
  std::set<std::string> ids;
  for (const auto& v : a.videos) ids.insert(v.id);
  for (const auto& v : b.videos) {
    if (ids.count(v.id)) throw std::runtime_error("video " + v.id + " appears in both splits");
  }
}

std::vector<FrameTriplet> sample_triplets(const Video& video, int stride, int load_size) {
  std::vector<FrameTriplet> out;
  for (size_t s : triplet_starts(video.frames.size(), stride)) {
    FrameTriplet t;
    t.video_id = video.id;
    t.start = s;
    for (size_t k = 0; k < 3; ++k) t.frames[k] = preprocess(read_png(video.frames[s + k]), load_size);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<FrameTriplet> load_triplets(const VideoDataset& dataset, int stride, int load_size) {
  std::vector<FrameTriplet> out;
  for (const auto& v : dataset.videos) {
    auto part = sample_triplets(v, stride, load_size);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

FrameTriplet augment(const FrameTriplet& triplet, std::mt19937_64& rng, const AugmentOptions& options) {
  const auto& first = triplet.frames[0];
  const int crop = options.crop_size;
  if (first.height() < crop || first.width() < crop) {
    throw std::invalid_argument("augment: frames smaller than crop size " + std::to_string(crop));
  }
  for (const auto& f : triplet.frames) {
    if (!f.same_shape(first)) throw std::invalid_argument("augment: triplet frames differ in shape");
  }
  int top, left;
  if (options.offset) {
    std::tie(top, left) = *options.offset;
    if (top < 0 || left < 0 || top + crop > first.height() || left + crop > first.width()) {
      throw std::invalid_argument("augment: crop offset out of range");
    }
  } else {
    top = static_cast<int>(uniform_index(rng, static_cast<uint64_t>(first.height() - crop + 1)));
    left = static_cast<int>(uniform_index(rng, static_cast<uint64_t>(first.width() - crop + 1)));
  }
  const bool flip = uniform01(rng) < options.flip_probability;

  FrameTriplet out;
  out.video_id = triplet.video_id;
  out.start = triplet.start;
  for (size_t k = 0; k < 3; ++k) {
    auto t = triplet.frames[k].tensor().narrow(1, top, crop).narrow(2, left, crop);
    if (flip) t = t.flip({2});
    out.frames[k] = Frame(t.contiguous());
  }
  return out;
}

}  // namespace tempcycle
