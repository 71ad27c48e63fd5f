#include <gtest/gtest.h>

#include <fstream>

#include "tempcycle/trainer.hpp"
#include "test_support.hpp"

using namespace tempcycle;
using tempcycle::testing::synthetic_triplets;
using tempcycle::testing::TempDir;

namespace {

TrainConfig tiny(bool baseline = false) {
  auto c = smoke_preset();
  c.baseline = baseline;
  c.seed = 17;
  return c;
}

const std::vector<FrameTriplet>& xs32() {
  static const auto t = synthetic_triplets(Domain::X, 4, 32, 1);
  return t;
}
const std::vector<FrameTriplet>& ys32() {
  static const auto t = synthetic_triplets(Domain::Y, 4, 32, 2);
  return t;
}

std::vector<torch::Tensor> snapshot(const torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool any_changed(const std::vector<torch::Tensor>& before, const torch::nn::Module& m) {
  const auto now = m.parameters();
  for (size_t i = 0; i < now.size(); ++i) {
    if (!torch::equal(before[i], now[i])) return true;
  }
  return false;
}

void expect_same_parameters(const TrainState& a, const TrainState& b) {
  const auto na = a.networks(), nb = b.networks();
  ASSERT_EQ(na.size(), nb.size());
  for (size_t i = 0; i < na.size(); ++i) {
    const auto pa = na[i].second->parameters(), pb = nb[i].second->parameters();
    for (size_t j = 0; j < pa.size(); ++j) ASSERT_TRUE(torch::equal(pa[j], pb[j])) << na[i].first;
  }
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

void expect_finite_non_negative(const LossReport& r) {
  std::vector<double> values{r.g_adv, r.f_adv, r.cycle_x, r.cycle_y, r.d_x, r.d_y, r.total_generators,
                             r.total_discriminators};
  for (const auto& o : {r.g_temp_adv, r.f_temp_adv, r.temporal_match_x, r.temporal_match_y, r.d_tx, r.d_ty}) {
    if (o) values.push_back(*o);
  }
  for (double v : values) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
}

}  // namespace

TEST(TrainStep, ReportIsWellFormed) {
  auto s = TrainState::create(tiny());
  const auto r = train_step(s, xs32()[0], ys32()[0]);
  expect_finite_non_negative(r);
  EXPECT_TRUE(r.temporal());
  EXPECT_TRUE(r.d_tx.has_value());
  EXPECT_FALSE(r.identity_x.has_value());
  for (const auto& [name, net] : s.networks()) {
    for (const auto& p : net->parameters()) ASSERT_TRUE(torch::isfinite(p).all().item<bool>()) << name;
  }
}

TEST(TrainStep, EveryNetworkMoves) {
  auto s = TrainState::create(tiny());
  std::vector<std::vector<torch::Tensor>> before;
  for (const auto& [name, net] : s.networks()) before.push_back(snapshot(*net));
  train_step(s, xs32()[0], ys32()[0]);
  const auto nets = s.networks();
  for (size_t i = 0; i < nets.size(); ++i) EXPECT_TRUE(any_changed(before[i], *nets[i].second)) << nets[i].first;
  EXPECT_EQ(nets.size(), 6u);
  EXPECT_EQ(nets[0].first, "G");
  EXPECT_EQ(nets[5].first, "D_TY");
}

TEST(TrainStep, IdenticalStatesGiveIdenticalReports) {
  auto a = TrainState::create(tiny());
  auto b = TrainState::create(tiny());
  for (size_t i = 0; i < 3; ++i) {
    const auto ra = train_step(a, xs32()[i], ys32()[i]);
    const auto rb = train_step(b, xs32()[i], ys32()[i]);
    EXPECT_EQ(ra.csv_row(0, 0), rb.csv_row(0, 0));
  }
  expect_same_parameters(a, b);
}

TEST(TrainStep, MirroredDomainsGiveMirroredTerms) {
  auto a = TrainState::create(tiny());
  auto b = TrainState::create(tiny());
  // b holds a's networks with the domain roles swapped.
  auto swap_roles = [](const torch::nn::Module& from, torch::nn::Module& to) {
    torch::NoGradGuard no_grad;
    const auto src = from.parameters();
    auto dst = to.parameters();
    for (size_t i = 0; i < src.size(); ++i) dst[i].copy_(src[i]);
  };
  swap_roles(*a.g, *b.f);
  swap_roles(*a.f, *b.g);
  swap_roles(*a.d_x, *b.d_y);
  swap_roles(*a.d_y, *b.d_x);
  swap_roles(*a.d_tx, *b.d_ty);
  swap_roles(*a.d_ty, *b.d_tx);
  const auto ra = train_step(a, xs32()[0], ys32()[0]);
  const auto rb = train_step(b, ys32()[0], xs32()[0]);
  EXPECT_EQ(ra.g_adv, rb.f_adv);
  EXPECT_EQ(ra.f_adv, rb.g_adv);
  EXPECT_EQ(ra.g_temp_adv, rb.f_temp_adv);
  EXPECT_EQ(ra.cycle_x, rb.cycle_y);
  EXPECT_EQ(ra.cycle_y, rb.cycle_x);
  EXPECT_EQ(ra.temporal_match_x, rb.temporal_match_y);
  EXPECT_EQ(ra.temporal_match_y, rb.temporal_match_x);
  EXPECT_EQ(ra.d_x, rb.d_y);
  EXPECT_EQ(ra.d_ty, rb.d_tx);
  EXPECT_NEAR(ra.total_generators, rb.total_generators, 1e-9);
}

TEST(TrainStep, TemporalPoolsHoldCrossRunPairsOfInterest) {
  auto s = TrainState::create(tiny());
  const auto& x = xs32()[0].frames;
  FramePair expected_y;
  {
    torch::NoGradGuard no_grad;
    expected_y = FramePair(generator_forward(s.g, FramePair(x[0], x[1])).later,
                           generator_forward(s.g, FramePair(x[1], x[2])).later);
  }
  train_step(s, xs32()[0], ys32()[0]);
  ASSERT_EQ(s.pool_ty.size(), 1u);
  const auto& item = s.pool_ty.items()[0];
  EXPECT_EQ(item.earlier_run, 1);
  EXPECT_EQ(item.later_run, 2);
  EXPECT_TRUE(torch::allclose(item.pair.earlier.tensor(), expected_y.earlier.tensor(), 0, 1e-6));
  EXPECT_TRUE(torch::allclose(item.pair.later.tensor(), expected_y.later.tensor(), 0, 1e-6));
  for (size_t i = 1; i < 4; ++i) train_step(s, xs32()[i], ys32()[i]);
  for (const auto* pool : {&s.pool_tx, &s.pool_ty}) {
    for (const auto& it : pool->items()) {
      EXPECT_EQ(it.earlier_run, 1);
      EXPECT_EQ(it.later_run, 2);
    }
  }
  EXPECT_EQ(s.pool_x.size(), 8u);  // two frames of interest per step
}

TEST(TrainStep, SaveLoadThenStepMatchesPlainStep) {
  TempDir dir("trainer_ckpt");
  auto a = TrainState::create(tiny());
  train_step(a, xs32()[0], ys32()[0]);
  a.save(dir / "state.ckpt");
  auto b = TrainState::load(dir / "state.ckpt");
  expect_same_parameters(a, b);
  for (size_t i = 1; i < 3; ++i) {
    EXPECT_EQ(train_step(a, xs32()[i], ys32()[i]).csv_row(0, 0), train_step(b, xs32()[i], ys32()[i]).csv_row(0, 0));
  }
  expect_same_parameters(a, b);
}

TEST(TrainStep, BatchAccumulatesGradients) {
  auto c = tiny();
  c.batch_size = 2;
  auto s = TrainState::create(c);
  const std::vector<FrameTriplet> bx{xs32()[0], xs32()[1]}, by{ys32()[0], ys32()[1]};
  auto r = train_step(s, bx, by);
  expect_finite_non_negative(r);
  EXPECT_EQ(s.pool_x.size(), 4u);
  EXPECT_THROW(train_step(s, std::span<const FrameTriplet>(bx), std::span<const FrameTriplet>(by).first(1)),
               std::invalid_argument);
}

TEST(TrainStep, IdentityTermsWhenEnabled) {
  auto c = tiny();
  c.identity = 0.5;
  auto s = TrainState::create(c);
  const auto r = train_step(s, xs32()[0], ys32()[0]);
  ASSERT_TRUE(r.identity_x.has_value());
  EXPECT_GT(*r.identity_x, 0.0);
}

TEST(BaselineStep, WellFormedWithoutTemporalTerms) {
  auto s = TrainState::create(tiny(true));
  EXPECT_FALSE(s.d_tx);
  EXPECT_EQ(s.g->frames(), 1);
  const auto r = train_step_baseline(s, xs32()[0].frames[2], ys32()[0].frames[2]);
  expect_finite_non_negative(r);
  EXPECT_FALSE(r.temporal());
  EXPECT_FALSE(r.d_tx.has_value());
  EXPECT_FALSE(r.temporal_match_x.has_value());
  EXPECT_THROW(train_step(s, xs32()[0], ys32()[0]), std::logic_error);
}

TEST(BaselineStep, ZeroCycleWeightReportsZeroCycle) {
  auto c = tiny(true);
  c.lambda = 0.0;
  auto s = TrainState::create(c);
  const auto r = train_step_baseline(s, xs32()[0].frames[2], ys32()[0].frames[2]);
  EXPECT_EQ(r.cycle_x * c.lambda + r.cycle_y * c.lambda, 0.0);
  EXPECT_DOUBLE_EQ(r.total_generators, r.g_adv + r.f_adv);
}

TEST(BaselineStep, Deterministic) {
  auto a = TrainState::create(tiny(true));
  auto b = TrainState::create(tiny(true));
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(train_step_baseline(a, xs32()[i].frames[2], ys32()[i].frames[2]).csv_row(0, 0),
              train_step_baseline(b, xs32()[i].frames[2], ys32()[i].frames[2]).csv_row(0, 0));
  }
}

TEST(Optimizer, LearningRateIsConstant) {
  const auto c = tiny();
  for (int64_t step : {0, 1, 1000, 1000000}) EXPECT_EQ(learning_rate_at(c, step), c.learning_rate);
}

TEST(Optimizer, AdamMatchesReferenceUpdate) {
  auto c = tiny();
  c.learning_rate = 0.01;
  auto p = torch::tensor({1.0, -2.0, 0.5}, torch::kFloat64).requires_grad_(true);
  AdamState st;
  std::vector<double> m(3, 0.0), v(3, 0.0), ref{1.0, -2.0, 0.5};
  const std::vector<std::vector<double>> grads{{0.3, -0.1, 0.0}, {0.2, 0.4, -1.0}, {-0.5, 0.1, 2.0}};
  for (size_t k = 0; k < grads.size(); ++k) {
    p.mutable_grad() = torch::tensor(grads[k], torch::kFloat64);
    adam_step({p}, st, c);
    const double t = static_cast<double>(k + 1);
    for (size_t i = 0; i < 3; ++i) {
      m[i] = c.beta1 * m[i] + (1 - c.beta1) * grads[k][i];
      v[i] = c.beta2 * v[i] + (1 - c.beta2) * grads[k][i] * grads[k][i];
      const double mh = m[i] / (1 - std::pow(c.beta1, t)), vh = v[i] / (1 - std::pow(c.beta2, t));
      ref[i] -= c.learning_rate * mh / (std::sqrt(vh) + c.eps);
      EXPECT_NEAR(p[i].item<double>(), ref[i], 1e-12);
    }
  }
  EXPECT_EQ(st.steps, 3);
}

TEST(Optimizer, StepSizeDoesNotDecay) {
  // Constant gradient: Adam moves every step by the learning rate.
  auto c = tiny();
  auto p = torch::zeros({1}, torch::kFloat64).requires_grad_(true);
  AdamState st;
  double last = 0.0;
  for (int k = 0; k < 2000; ++k) {
    p.mutable_grad() = torch::ones({1}, torch::kFloat64);
    adam_step({p}, st, c);
    const double now = p.item<double>();
    if (k % 500 == 499) EXPECT_NEAR(last - now, c.learning_rate, 1e-9);
    last = now;
  }
}

TEST(Train, TwoEpochsOfTenTripletsLogTwentyRows) {
  TempDir dir("train_rows");
  const auto x = synthetic_triplets(Domain::X, 10, 36, 3), y = synthetic_triplets(Domain::Y, 10, 36, 4);
  auto s = TrainState::create(tiny());
  int callbacks = 0;
  const auto ckpt = train(s, x, y, dir.path(), [&](int64_t, int64_t, const LossReport&) { ++callbacks; });
  const auto lines = read_lines(dir / "loss_log.csv");
  ASSERT_EQ(lines.size(), 21u);
  EXPECT_EQ(lines[0], LossReport::csv_header());
  EXPECT_EQ(lines[1].substr(0, 4), "1,0,");
  EXPECT_EQ(lines[20].substr(0, 5), "20,1,");
  EXPECT_EQ(callbacks, 20);
  EXPECT_EQ(s.step, 20);
  EXPECT_EQ(ckpt, checkpoint_path(dir.path(), 20));
  EXPECT_TRUE(fs::exists(ckpt));
}

TEST(Train, RepeatedRunsWriteIdenticalLogs) {
  TempDir a("train_det_a"), b("train_det_b");
  const auto x = synthetic_triplets(Domain::X, 5, 36, 3), y = synthetic_triplets(Domain::Y, 5, 36, 4);
  auto sa = TrainState::create(tiny());
  auto sb = TrainState::create(tiny());
  train(sa, x, y, a.path());
  train(sb, x, y, b.path());
  EXPECT_EQ(read_lines(a / "loss_log.csv"), read_lines(b / "loss_log.csv"));
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  TempDir full("resume_full"), part("resume_part");
  const auto x = synthetic_triplets(Domain::X, 6, 36, 5), y = synthetic_triplets(Domain::Y, 5, 36, 6);
  auto c = tiny();
  c.checkpoint_every = 4;
  auto s = TrainState::create(c);
  train(s, x, y, full.path());
  const auto reference = read_lines(full / "loss_log.csv");
  ASSERT_EQ(reference.size(), 13u);  // 2 epochs x 6 steps

  // Copy the step-4 checkpoint and its log prefix into a fresh run directory.
  auto resumed = TrainState::load(checkpoint_path(full.path(), 4));
  EXPECT_EQ(resumed.step, 4);
  {
    std::ofstream log(part / "loss_log.csv");
    for (size_t i = 0; i < 5; ++i) log << reference[i] << '\n';
  }
  train(resumed, x, y, part.path());
  EXPECT_EQ(read_lines(part / "loss_log.csv"), reference);
  expect_same_parameters(s, resumed);
}

TEST(Train, BaselineRunsThroughTheSameLoop) {
  TempDir dir("train_base");
  const auto x = synthetic_triplets(Domain::X, 3, 36, 3), y = synthetic_triplets(Domain::Y, 3, 36, 4);
  auto s = TrainState::create(tiny(true));
  train(s, x, y, dir.path());
  const auto lines = read_lines(dir / "loss_log.csv");
  ASSERT_EQ(lines.size(), 7u);
  const auto [pos, r] = LossReport::parse_csv_row(lines.back());
  EXPECT_FALSE(r.temporal());
}

TEST(Train, EmptyDatasetIsAnError) {
  TempDir dir("train_empty");
  auto s = TrainState::create(tiny());
  EXPECT_THROW(train(s, {}, synthetic_triplets(Domain::Y, 2, 36, 1), dir.path()), std::invalid_argument);
}

TEST(Config, ParsesValidatesAndRoundTrips) {
  auto kv = parse_key_values("# comment\nlambda = 5\n\nwidth=0.5  # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].first, "lambda");
  EXPECT_EQ(kv[1].second, "0.5");

  TrainConfig c;
  apply_config_value(c, "mu", "2.5");
  EXPECT_EQ(c.mu, 2.5);
  try {
    apply_config_value(c, "lamda", "1");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("lamda"), std::string::npos);
  }
  EXPECT_THROW(apply_config_value(c, "epochs", "many"), ConfigError);
  EXPECT_THROW(parse_key_values("just words\n"), ConfigError);

  c.learning_rate = 1.0 / 3.0;
  EXPECT_EQ(config_from_map(config_to_map(c)).learning_rate, c.learning_rate);
  EXPECT_EQ(TrainConfig{}.resolved_load_size(), 286);
  EXPECT_EQ(smoke_preset().resolved_load_size(), 36);
  auto bad = TrainConfig{};
  bad.image_size = 30;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
