#include "tempcycle/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "tempcycle/random.hpp"

namespace tempcycle {

namespace {

using Rgb = std::array<double, 3>;

constexpr std::array<Rgb, 6> kPhantomPalette{{{230, 230, 225},
                                              {180, 60, 60},
                                              {60, 140, 60},
                                              {70, 70, 160},
                                              {200, 160, 60},
                                              {120, 120, 120}}};
constexpr Rgb kPhantomBackground{200, 190, 170};

constexpr std::array<Rgb, 5> kTissuePalette{{{170, 50, 50}, {200, 90, 80}, {150, 40, 60}, {210, 120, 100}, {120, 30, 40}}};
constexpr Rgb kTissueBackground{90, 20, 25};

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Triangle-wave reflection keeps motion continuous at the walls.
double bounce(double c, double lo, double hi) {
  const double span = hi - lo;
  double u = std::fmod(c - lo, 2 * span);
  if (u < 0) u += 2 * span;
  return lo + (u <= span ? u : 2 * span - u);
}

struct Texture {
  double f1, f2, f3, p1, p2, p3;

  static Texture draw(std::mt19937_64& rng, double scale) {
    Texture t;
    t.f1 = uniform(rng, 0.15, 0.45) / scale;
    t.f2 = uniform(rng, 0.15, 0.45) / scale;
    t.f3 = uniform(rng, 0.3, 0.8) / scale;
    t.p1 = uniform(rng, 0, 2 * std::numbers::pi);
    t.p2 = uniform(rng, 0, 2 * std::numbers::pi);
    t.p3 = uniform(rng, 0, 2 * std::numbers::pi);
    return t;
  }

  double operator()(double u, double v) const {
    return 0.6 + 0.2 * std::sin(f1 * u + p1) * std::cos(f2 * v + p2) + 0.15 * std::sin(f3 * (u + v) + p3);
  }
};

struct Shape {
  bool ellipse = true;
  double x0, y0, vx, vy;
  double rx, ry;                 // ellipse semi-axes
  std::vector<double> radii;     // polygon vertex radii
  double rot0, omega;
  Rgb color;
  Texture texture;

  double extent() const {
    return ellipse ? std::max(rx, ry) : *std::max_element(radii.begin(), radii.end());
  }
};

struct Highlight {
  double x0, y0, vx, vy, sigma;
};

struct Scene {
  Domain domain;
  int size;
  std::vector<Shape> shapes;
  std::vector<Highlight> highlights;
  Rgb background;
  Rgb jitter{1, 1, 1};
  Texture background_texture;
};

Scene make_scene(Domain domain, uint64_t seed, int size) {
  std::mt19937_64 rng(seed);
  const double scale = size / 128.0;
  Scene s{domain, size, {}, {}, domain == Domain::X ? kPhantomBackground : kTissueBackground, {1, 1, 1}, {}};
  if (domain == Domain::Y) {
    for (auto& j : s.jitter) j = uniform(rng, 0.85, 1.15);
    s.background_texture = Texture::draw(rng, scale);
  }
  const int n = 2 + static_cast<int>(uniform_index(rng, 2));
  for (int i = 0; i < n; ++i) {
    Shape sh;
    sh.ellipse = uniform01(rng) < 0.5;
    sh.x0 = uniform(rng, 0.2, 0.8) * size;
    sh.y0 = uniform(rng, 0.2, 0.8) * size;
    const double heading = uniform(rng, 0, 2 * std::numbers::pi);
    const double speed = uniform(rng, 0.5, 1.5) * scale;
    sh.vx = speed * std::cos(heading);
    sh.vy = speed * std::sin(heading);
    const double r = uniform(rng, 0.12, 0.22) * size;
    if (sh.ellipse) {
      sh.rx = r;
      sh.ry = r * uniform(rng, 0.5, 1.0);
    } else {
      const int vertices = 3 + static_cast<int>(uniform_index(rng, 3));
      for (int k = 0; k < vertices; ++k) sh.radii.push_back(r * uniform(rng, 0.8, 1.0));
    }
    sh.rot0 = uniform(rng, 0, 2 * std::numbers::pi);
    // Rim speed omega * r stays below 1.2 px/frame at size 128.
    sh.omega = uniform(rng, -1.0, 1.0) * 1.2 * scale / sh.extent();
    if (domain == Domain::X) {
      sh.color = kPhantomPalette[uniform_index(rng, kPhantomPalette.size())];
    } else {
      sh.color = kTissuePalette[uniform_index(rng, kTissuePalette.size())];
      sh.texture = Texture::draw(rng, scale);
    }
    s.shapes.push_back(std::move(sh));
  }
  if (domain == Domain::Y) {
    const int nh = 1 + static_cast<int>(uniform_index(rng, 2));
    for (int i = 0; i < nh; ++i) {
      const double heading = uniform(rng, 0, 2 * std::numbers::pi);
      const double speed = uniform(rng, 0.5, 2.0) * scale;
      s.highlights.push_back({uniform(rng, 0.2, 0.8) * size, uniform(rng, 0.2, 0.8) * size,
                              speed * std::cos(heading), speed * std::sin(heading), uniform(rng, 1.5, 3.0) * scale});
    }
  }
  return s;
}

bool inside_polygon(const std::vector<double>& radii, double u, double v) {
  const size_t n = radii.size();
  bool in = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const double ai = 2 * std::numbers::pi * i / n, aj = 2 * std::numbers::pi * j / n;
    const double xi = radii[i] * std::cos(ai), yi = radii[i] * std::sin(ai);
    const double xj = radii[j] * std::cos(aj), yj = radii[j] * std::sin(aj);
    if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

RgbImage render(const Scene& s, int t) {
  const int size = s.size;
  const double lo = 0.1 * size, hi = 0.9 * size;
  struct Placed {
    double cx, cy, c, sn;
  };
  std::vector<Placed> placed;
  for (const auto& sh : s.shapes) {
    const double rot = sh.rot0 + sh.omega * t;
    placed.push_back({bounce(sh.x0 + sh.vx * t, lo, hi), bounce(sh.y0 + sh.vy * t, lo, hi), std::cos(rot), std::sin(rot)});
  }
  std::vector<std::pair<double, double>> spots;
  for (const auto& h : s.highlights) {
    spots.emplace_back(bounce(h.x0 + h.vx * t, lo, hi), bounce(h.y0 + h.vy * t, lo, hi));
  }

  RgbImage img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      Rgb color = s.background;
      double shade = s.domain == Domain::Y ? s.background_texture(px, py) : 1.0;
      for (size_t i = s.shapes.size(); i-- > 0;) {
        const auto& sh = s.shapes[i];
        const auto& p = placed[i];
        const double dx = px - p.cx, dy = py - p.cy;
        const double u = dx * p.c + dy * p.sn, v = -dx * p.sn + dy * p.c;
        const bool hit = sh.ellipse ? (u * u) / (sh.rx * sh.rx) + (v * v) / (sh.ry * sh.ry) <= 1.0
                                    : inside_polygon(sh.radii, u, v);
        if (hit) {
          color = sh.color;
          shade = s.domain == Domain::Y ? sh.texture(u, v) : 1.0;
          break;
        }
      }
      double glow = 0.0;
      for (size_t i = 0; i < spots.size(); ++i) {
        const double dx = px - spots[i].first, dy = py - spots[i].second;
        const double sg = s.highlights[i].sigma;
        glow += 200.0 * std::exp(-(dx * dx + dy * dy) / (2 * sg * sg));
      }
      uint8_t* out = img.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = color[c] * shade * s.jitter[c] + glow;
        out[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return img;
}

std::string video_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

std::string frame_file(int index) { return video_id(index) + ".png"; }

}  // namespace

std::vector<RgbImage> synth_video(Domain domain, uint64_t video_seed, int frames, int size) {
  if (size < 4 || size % 4 != 0) throw std::invalid_argument("synth: size must be a positive multiple of 4");
  if (frames < 1) throw std::invalid_argument("synth: frames_per_video must be >= 1");
  const Scene scene = make_scene(domain, video_seed, size);
  std::vector<RgbImage> out;
  out.reserve(frames);
  for (int t = 0; t < frames; ++t) out.push_back(render(scene, t));
  return out;
}

VideoDataset synth_generate(Domain domain, uint64_t seed, int n_videos, int frames_per_video, int size,
                            const std::filesystem::path& split_dir, int first_index) {
  if (size < 4 || size % 4 != 0) throw std::invalid_argument("synth: size must be a positive multiple of 4");
  if (n_videos < 0) throw std::invalid_argument("synth: n_videos must be >= 0");
  VideoDataset ds;
  ds.root = split_dir;
  const uint64_t domain_tag = domain == Domain::X ? 0 : 1;
  for (int i = 0; i < n_videos; ++i) {
    const int index = first_index + i;
    const auto frames =
        synth_video(domain, derive_seed(seed, Stream::Synth, domain_tag, static_cast<uint64_t>(index)), frames_per_video, size);
    Video v{video_id(index), {}};
    const auto dir = split_dir / v.id;
    std::filesystem::create_directories(dir);
    for (int t = 0; t < frames_per_video; ++t) {
      const auto path = dir / frame_file(t);
      write_png(path, frames[t]);
      v.frames.push_back(path);
    }
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

std::string synth_corpus(const std::filesystem::path& root, const SynthOptions& o) {
  nlohmann::ordered_json manifest;
  manifest["format"] = "tempcycle-synth";
  manifest["version"] = 1;
  manifest["seed"] = o.seed;
  manifest["size"] = o.size;
  manifest["frames_per_video"] = o.frames_per_video;
  manifest["train_videos"] = o.train_videos;
  manifest["test_videos"] = o.test_videos;
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  for (Domain d : {Domain::X, Domain::Y}) {
    const auto train = synth_generate(d, o.seed, o.train_videos, o.frames_per_video, o.size,
                                      root / domain_name(d) / "train", 0);
    const auto test = synth_generate(d, o.seed, o.test_videos, o.frames_per_video, o.size,
                                     root / domain_name(d) / "test", o.train_videos);
    for (const auto* ds : {&train, &test}) {
      for (const auto& v : ds->videos) {
        for (const auto& f : v.frames) {
          files[std::filesystem::relative(f, root).generic_string()] = sha256_file(f);
        }
      }
    }
  }
  manifest["files"] = std::move(files);
  const std::string text = manifest.dump(2) + "\n";
  std::ofstream os(root / "manifest.json", std::ios::binary | std::ios::trunc);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + (root / "manifest.json").string());
  return text;
}

int distinct_colors(const RgbImage& image) {
  std::set<uint32_t> colors;
  for (size_t i = 0; i + 2 < image.pixels.size(); i += 3) {
    colors.insert(uint32_t(image.pixels[i]) << 16 | uint32_t(image.pixels[i + 1]) << 8 | image.pixels[i + 2]);
  }
  return static_cast<int>(colors.size());
}

double mean_abs_difference(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("mean_abs_difference: size mismatch");
  double sum = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) sum += std::abs(int(a.pixels[i]) - int(b.pixels[i]));
  return a.pixels.empty() ? 0.0 : sum / static_cast<double>(a.pixels.size());
}

}  // namespace tempcycle
