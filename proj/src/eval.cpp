#include "tempcycle/eval.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "tempcycle/data.hpp"

namespace tempcycle {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct Model {
  FrameMap g, f;
  TrainConfig config;
};

Model load_model(const std::filesystem::path& checkpoint) {
  auto g = load_generator(checkpoint, Direction::XtoY);
  auto f = load_generator(checkpoint, Direction::YtoX);
  return {frame_map(g.net), frame_map(f.net), g.config};
}

}  // namespace

FlickerReport flicker_report(std::span<const Frame> source, std::span<const Frame> translated) {
  if (source.size() != translated.size()) throw std::invalid_argument("flicker_score: sequence lengths differ");
  if (source.size() < 2) throw std::invalid_argument("flicker_score: need at least 2 frames");
  FlickerReport r;
  torch::NoGradGuard no_grad;
  for (size_t t = 1; t < source.size(); ++t) {
    if (!source[t].same_shape(source[0]) || !translated[t].same_shape(source[0])) {
      throw std::invalid_argument("flicker_score: frame shapes differ");
    }
    const auto dg = translated[t].tensor().to(torch::kFloat64) - translated[t - 1].tensor().to(torch::kFloat64);
    const auto dx = source[t].tensor().to(torch::kFloat64) - source[t - 1].tensor().to(torch::kFloat64);
    r.residuals.push_back((dg - dx).abs().mean().item<double>());
  }
  r.score = mean(r.residuals);
  return r;
}

double flicker_score(std::span<const Frame> source, std::span<const Frame> translated) {
  return flicker_report(source, translated).score;
}

std::vector<Frame> translate_sequence(const FrameMap& map, std::span<const Frame> frames) {
  std::vector<Frame> out;
  out.reserve(frames.size());
  for (size_t t = 0; t < frames.size(); ++t) out.push_back(map(frames[t == 0 ? 0 : t - 1], frames[t]));
  return out;
}

double cycle_reconstruction_error(const FrameMap& g, const FrameMap& f, std::span<const Frame> frames) {
  if (frames.size() < 3) throw std::invalid_argument("cycle_reconstruction_error: need at least 3 frames");
  torch::NoGradGuard no_grad;
  const auto translated = translate_sequence(g, frames);
  std::vector<double> errors;
  for (size_t t = 2; t < frames.size(); ++t) {
    const auto recon = f(translated[t - 1], translated[t]);
    errors.push_back((recon.tensor() - frames[t].tensor()).abs().mean().item<double>());
  }
  return mean(errors);
}

std::string ComparisonReport::csv_header() {
  return "video_id,frames,flicker,recon_error,baseline_flicker,baseline_recon_error";
}

void ComparisonReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write report " + path.string());
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << r.video_id << ',' << r.frames << ',' << fmt(r.flicker) << ',' << fmt(r.recon_error) << ','
       << (r.baseline_flicker ? fmt(*r.baseline_flicker) : "") << ','
       << (r.baseline_recon_error ? fmt(*r.baseline_recon_error) : "") << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string ComparisonReport::summary_json() const {
  nlohmann::ordered_json j;
  j["videos"] = rows.size();
  j["mean_flicker"] = mean_flicker;
  j["mean_recon_error"] = mean_recon_error;
  j["mean_baseline_flicker"] = mean_baseline_flicker ? nlohmann::ordered_json(*mean_baseline_flicker) : nullptr;
  j["mean_baseline_recon_error"] =
      mean_baseline_recon_error ? nlohmann::ordered_json(*mean_baseline_recon_error) : nullptr;
  j["flicker_ratio"] = flicker_ratio ? nlohmann::ordered_json(*flicker_ratio) : nullptr;
  return j.dump(2);
}

ComparisonReport compare_models(const std::filesystem::path& checkpoint,
                                const std::optional<std::filesystem::path>& baseline,
                                const std::filesystem::path& test_dir) {
  const auto model = load_model(checkpoint);
  std::optional<Model> reference;
  if (baseline) {
    reference = load_model(*baseline);
    if (reference->config.image_size != model.config.image_size) {
      throw std::invalid_argument("compare_models: checkpoints use different image sizes (" +
                                  std::to_string(model.config.image_size) + " vs " +
                                  std::to_string(reference->config.image_size) + ")");
    }
  }
  const auto dataset = scan_videos(test_dir);
  ComparisonReport report;
  std::vector<double> flicker, recon, base_flicker, base_recon;
  for (const auto& video : dataset.videos) {
    std::vector<Frame> frames;
    for (const auto& p : video.frames) frames.push_back(load_inference_frame(p, model.config));
    VideoScore row;
    row.video_id = video.id;
    row.frames = frames.size();
    row.flicker = flicker_score(frames, translate_sequence(model.g, frames));
    row.recon_error = cycle_reconstruction_error(model.g, model.f, frames);
    flicker.push_back(row.flicker);
    recon.push_back(row.recon_error);
    if (reference) {
      std::vector<Frame> ref_frames;
      for (const auto& p : video.frames) ref_frames.push_back(load_inference_frame(p, reference->config));
      row.baseline_flicker = flicker_score(ref_frames, translate_sequence(reference->g, ref_frames));
      row.baseline_recon_error = cycle_reconstruction_error(reference->g, reference->f, ref_frames);
      base_flicker.push_back(*row.baseline_flicker);
      base_recon.push_back(*row.baseline_recon_error);
    }
    report.rows.push_back(std::move(row));
  }
  report.mean_flicker = mean(flicker);
  report.mean_recon_error = mean(recon);
  if (reference) {
    report.mean_baseline_flicker = mean(base_flicker);
    report.mean_baseline_recon_error = mean(base_recon);
    report.flicker_ratio = report.mean_flicker / *report.mean_baseline_flicker;
  }
  return report;
}

}  // namespace tempcycle
