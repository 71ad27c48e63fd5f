#include <gtest/gtest.h>

#include <fstream>

#include "tempcycle/eval.hpp"
#include "tempcycle/image_io.hpp"
#include "tempcycle/infer.hpp"
#include "tempcycle/trainer.hpp"
#include "test_support.hpp"

using namespace tempcycle;
using tempcycle::testing::random_frame;
using tempcycle::testing::TempDir;

namespace {

TrainConfig tiny(bool baseline = false) {
  auto c = smoke_preset();
  c.baseline = baseline;
  c.seed = 23;
  return c;
}

std::vector<Frame> random_sequence(size_t n, int size, uint64_t seed) {
  std::vector<Frame> out;
  for (size_t i = 0; i < n; ++i) out.push_back(random_frame(size, size, seed + i));
  return out;
}

Frame constant(double v, int size = 4) { return Frame(torch::full({3, size, size}, v)); }

FrameMap identity_map() {
  return [](const Frame&, const Frame& current) { return current; };
}

// Shared fixture: untrained temporal and baseline checkpoints plus a 30-frame video.
class InferFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("infer");
    TrainState::create(tiny()).save(*dir_ / "temporal.ckpt");
    TrainState::create(tiny(true)).save(*dir_ / "baseline.ckpt");
    synth_generate(Domain::X, 5, 2, 30, 36, *dir_ / "test");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static TempDir* dir_;
};
TempDir* InferFixture::dir_ = nullptr;

std::vector<std::string> hashes(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& p : list_frames(dir)) out.push_back(sha256_file(p));
  return out;
}

}  // namespace

TEST(Stream, OneFrameOutPerFrameIn) {
  auto g = make_generator(NetConfig{16, 0.125, 2});
  StreamSession session(frame_map(g), 16);
  EXPECT_FALSE(session.has_context());
  for (size_t i = 0; i < 7; ++i) {
    const auto out = session.push_frame(random_frame(16, 16, i));
    EXPECT_EQ(out.height(), 16);
    EXPECT_EQ(session.frames_emitted(), i + 1);
  }
  EXPECT_TRUE(session.has_context());
  EXPECT_THROW(session.push_frame(random_frame(20, 20, 0)), std::invalid_argument);
}

TEST(Stream, FirstFrameIsPairedWithItself) {
  auto g = make_generator(NetConfig{16, 0.125, 2});
  initialize_weights(*g, 3);
  const auto seq = random_sequence(3, 16, 10);
  StreamSession session(frame_map(g), 16);
  const auto first = session.push_frame(seq[0]);
  const auto second = session.push_frame(seq[1]);
  torch::NoGradGuard no_grad;
  g->eval();
  EXPECT_TRUE(torch::equal(first.tensor(), generator_forward(g, FramePair(seq[0], seq[0])).later.tensor()));
  EXPECT_TRUE(torch::equal(second.tensor(), generator_forward(g, FramePair(seq[0], seq[1])).later.tensor()));
}

TEST(Stream, SessionsAreIndependentOfInterleaving) {
  auto g = make_generator(NetConfig{16, 0.125, 2});
  const auto seq = random_sequence(5, 16, 40);
  const auto map = frame_map(g);
  StreamSession a(map, 16), b(map, 16), c(map, 16);
  std::vector<Frame> out_a, out_b;
  for (const auto& f : seq) out_a.push_back(a.push_frame(f));
  for (const auto& f : seq) {
    out_b.push_back(b.push_frame(f));
    c.push_frame(random_frame(16, 16, 99));  // unrelated session in between
  }
  for (size_t i = 0; i < seq.size(); ++i) EXPECT_TRUE(torch::equal(out_a[i].tensor(), out_b[i].tensor()));
}

TEST(Stream, DirectionParsing) {
  EXPECT_EQ(parse_direction("x2y"), Direction::XtoY);
  EXPECT_EQ(parse_direction("y2x"), Direction::YtoX);
  EXPECT_THROW(parse_direction("sideways"), std::invalid_argument);
}

TEST_F(InferFixture, TranslateVideoKeepsCountAndIndices) {
  TempDir out("translate_out");
  const auto n = translate_video(*dir_ / "temporal.ckpt", *dir_ / "test" / "000000", out.path());
  EXPECT_EQ(n, 30u);
  const auto frames = list_frames(out.path());
  ASSERT_EQ(frames.size(), 30u);
  EXPECT_EQ(frames.back().filename(), "000029.png");
  const auto img = read_png(frames[0]);
  EXPECT_EQ(img.width, 32);  // inference crop of the 36 px load size
}

TEST_F(InferFixture, TranslationIsDeterministic) {
  TempDir a("translate_a"), b("translate_b");
  translate_video(*dir_ / "temporal.ckpt", *dir_ / "test" / "000000", a.path());
  translate_video(*dir_ / "temporal.ckpt", *dir_ / "test" / "000000", b.path());
  EXPECT_EQ(hashes(a.path()), hashes(b.path()));
}

TEST_F(InferFixture, TemporalAndBaselineOutputsDiffer) {
  TempDir a("translate_t"), b("translate_b");
  translate_video(*dir_ / "temporal.ckpt", *dir_ / "test" / "000000", a.path());
  translate_video(*dir_ / "baseline.ckpt", *dir_ / "test" / "000000", b.path());
  EXPECT_NE(hashes(a.path()), hashes(b.path()));
}

TEST_F(InferFixture, EmptyInputDirectoryIsAnError) {
  TempDir empty("translate_empty"), out("translate_empty_out");
  try {
    translate_video(*dir_ / "temporal.ckpt", empty.path(), out.path());
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("no frames found"), std::string::npos);
  }
}

TEST_F(InferFixture, LoadGeneratorPicksDirection) {
  const auto g = load_generator(*dir_ / "temporal.ckpt", Direction::XtoY);
  const auto f = load_generator(*dir_ / "temporal.ckpt", Direction::YtoX);
  auto state = TrainState::load(*dir_ / "temporal.ckpt");
  EXPECT_TRUE(torch::equal(g.net->parameters()[0], state.g->parameters()[0]));
  EXPECT_TRUE(torch::equal(f.net->parameters()[0], state.f->parameters()[0]));
  EXPECT_EQ(g.config.image_size, 32);
  EXPECT_THROW(load_generator(*dir_ / "missing.ckpt", Direction::XtoY), std::runtime_error);
}

TEST_F(InferFixture, CompareSameCheckpointGivesUnitRatio) {
  const auto report = compare_models(*dir_ / "temporal.ckpt", *dir_ / "temporal.ckpt", *dir_ / "test");
  EXPECT_EQ(report.rows.size(), 2u);
  ASSERT_TRUE(report.flicker_ratio.has_value());
  EXPECT_EQ(*report.flicker_ratio, 1.0);
  EXPECT_EQ(report.rows[0].video_id, "000000");
  EXPECT_EQ(report.rows[0].frames, 30u);
  EXPECT_EQ(report.rows[0].flicker, *report.rows[0].baseline_flicker);
}

TEST_F(InferFixture, CompareTemporalWithBaselineWritesCsv) {
  const auto report = compare_models(*dir_ / "temporal.ckpt", *dir_ / "baseline.ckpt", *dir_ / "test");
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_NE(report.mean_flicker, *report.mean_baseline_flicker);
  TempDir out("report");
  report.write_csv(out / "r.csv");
  std::ifstream is(out / "r.csv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, ComparisonReport::csv_header());
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
  EXPECT_NE(report.summary_json().find("\"flicker_ratio\""), std::string::npos);
}

TEST_F(InferFixture, IncompatibleImageSizesAreRejected) {
  auto c = tiny(true);
  c.image_size = 16;
  TempDir other("other_size");
  TrainState::create(c).save(other / "small.ckpt");
  EXPECT_THROW(compare_models(*dir_ / "temporal.ckpt", other / "small.ckpt", *dir_ / "test"), std::invalid_argument);
}

TEST(Flicker, Examples) {
  const auto seq = random_sequence(6, 8, 1);
  EXPECT_EQ(flicker_score(seq, seq), 0.0);

  const std::vector<Frame> flat_a{constant(0.2), constant(0.2), constant(0.2)};
  const std::vector<Frame> flat_b{constant(-0.7), constant(-0.7), constant(-0.7)};
  EXPECT_EQ(flicker_score(flat_a, flat_b), 0.0);

  std::vector<Frame> alternating;
  for (int t = 0; t < 9; ++t) alternating.push_back(constant(0.3 + (t % 2 ? 0.1 : -0.1)));
  std::vector<Frame> still(9, constant(0.5));
  EXPECT_NEAR(flicker_score(still, alternating), 0.2, 1e-7);
}

TEST(Flicker, ScoreIsMeanOfResiduals) {
  const auto a = random_sequence(7, 8, 3), b = random_sequence(7, 8, 30);
  const auto r = flicker_report(a, b);
  ASSERT_EQ(r.residuals.size(), 6u);
  double sum = 0;
  for (size_t t = 1; t < a.size(); ++t) {
    const auto d = (b[t].tensor().to(torch::kFloat64) - b[t - 1].tensor().to(torch::kFloat64)) -
                   (a[t].tensor().to(torch::kFloat64) - a[t - 1].tensor().to(torch::kFloat64));
    EXPECT_NEAR(r.residuals[t - 1], d.abs().mean().item<double>(), 1e-12);
    sum += r.residuals[t - 1];
  }
  EXPECT_NEAR(r.score, sum / 6, 1e-12);
}

TEST(Flicker, Properties) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto a = random_sequence(6, 8, seed), b = random_sequence(6, 8, seed + 100);
    const double base = flicker_score(a, b);
    std::vector<Frame> shifted;
    for (const auto& f : b) shifted.emplace_back(f.tensor() + 0.375);
    EXPECT_NEAR(flicker_score(a, shifted), base, 1e-7);
    std::reverse(a.begin(), a.end());
    std::reverse(b.begin(), b.end());
    EXPECT_NEAR(flicker_score(a, b), base, 1e-12);
  }
}

TEST(Flicker, Errors) {
  const auto a = random_sequence(3, 4, 0);
  EXPECT_THROW(flicker_score(a, random_sequence(2, 4, 0)), std::invalid_argument);
  EXPECT_THROW(flicker_score(std::span(a).first(1), std::span(a).first(1)), std::invalid_argument);
}

TEST(CycleReconstruction, IdentityMapsGiveZero) {
  EXPECT_EQ(cycle_reconstruction_error(identity_map(), identity_map(), random_sequence(5, 8, 2)), 0.0);
  EXPECT_THROW(cycle_reconstruction_error(identity_map(), identity_map(), random_sequence(2, 8, 2)),
               std::invalid_argument);
}

TEST(CycleReconstruction, MatchesBruteForce) {
  auto g = make_generator(NetConfig{16, 0.125, 2});
  auto f = make_generator(NetConfig{16, 0.125, 2});
  initialize_weights(*g, 1);
  initialize_weights(*f, 2);
  const auto x = random_sequence(6, 16, 7);
  const double got = cycle_reconstruction_error(frame_map(g), frame_map(f), x);

  torch::NoGradGuard no_grad;
  g->eval();
  f->eval();
  double sum = 0;
  for (size_t t = 2; t < x.size(); ++t) {
    const auto y_prev = generator_forward(g, FramePair(x[t - 2], x[t - 1])).later;
    const auto y_now = generator_forward(g, FramePair(x[t - 1], x[t])).later;
    const auto rec = generator_forward(f, FramePair(y_prev, y_now)).later;
    sum += (rec.tensor() - x[t].tensor()).abs().mean().item<double>();
  }
  EXPECT_NEAR(got, sum / 4, 1e-9);
}
