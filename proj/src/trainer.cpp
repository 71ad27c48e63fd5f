#include "tempcycle/trainer.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tempcycle/random.hpp"

namespace tempcycle {

namespace {

constexpr int kFirstRun = 1;
constexpr int kSecondRun = 2;

void set_requires_grad(torch::nn::Module& m, bool flag) {
  for (auto& p : m.parameters()) p.set_requires_grad(flag);
}

void require_finite_parameters(const std::string& name, const torch::nn::Module& m) {
  for (const auto& p : m.parameters()) {
    if (!torch::isfinite(p).all().item<bool>()) throw NonFiniteLoss("parameters of " + name);
  }
}

torch::Tensor stack_frames(std::initializer_list<Frame> frames) {
  std::vector<torch::Tensor> ts;
  for (const auto& f : frames) ts.push_back(f.tensor());
  return torch::stack(ts);
}

// One Adam step for a network from a loss that is already averaged over the batch.
void optimize(TrainState& s, const std::string& name, torch::nn::Module& net) {
  adam_step(net.parameters(), s.adam[name], s.config);
}

double average(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

LossReport average_reports(const std::vector<LossReport>& rs) {
  if (rs.size() == 1) return rs.front();
  auto avg = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : rs) v.push_back(r.*field);
    return average(v);
  };
  auto avg_opt = [&](auto field) -> std::optional<double> {
    if (!(rs.front().*field)) return std::nullopt;
    std::vector<double> v;
    for (const auto& r : rs) v.push_back(*(r.*field));
    return average(v);
  };
  LossReport out;
  out.g_adv = avg(&LossReport::g_adv);
  out.f_adv = avg(&LossReport::f_adv);
  out.g_temp_adv = avg_opt(&LossReport::g_temp_adv);
  out.f_temp_adv = avg_opt(&LossReport::f_temp_adv);
  out.cycle_x = avg(&LossReport::cycle_x);
  out.cycle_y = avg(&LossReport::cycle_y);
  out.temporal_match_x = avg_opt(&LossReport::temporal_match_x);
  out.temporal_match_y = avg_opt(&LossReport::temporal_match_y);
  out.identity_x = avg_opt(&LossReport::identity_x);
  out.identity_y = avg_opt(&LossReport::identity_y);
  out.d_x = avg(&LossReport::d_x);
  out.d_y = avg(&LossReport::d_y);
  out.d_tx = avg_opt(&LossReport::d_tx);
  out.d_ty = avg_opt(&LossReport::d_ty);
  out.total_generators = avg(&LossReport::total_generators);
  out.total_discriminators = avg(&LossReport::total_discriminators);
  return out;
}

// Detached generator outputs that feed the discriminator updates.
struct TemporalFakes {
  Frame y_first, y_second;  // frames of interest y'_{t-1}, y''_t
  Frame x_first, x_second;  // frames of interest x'_{t-1}, x''_t
};

std::pair<GeneratorObjective, TemporalFakes> temporal_generator_pass(TrainState& s, const FrameTriplet& xt,
                                                                     const FrameTriplet& yt) {
  const auto& x = xt.frames;
  const auto& y = yt.frames;
  const FramePair x_run1{x[0], x[1]}, x_run2{x[1], x[2]};
  const FramePair y_run1{y[0], y[1]}, y_run2{y[1], y[2]};

  // X -> Y -> X. Both runs go through the same G (and F) parameters.
  const auto fake_y1 = generator_forward(s.g, x_run1);  // y'_{t-2}, y'_{t-1}
  const auto fake_y2 = generator_forward(s.g, x_run2);  // y''_{t-1}, y''_t
  const auto rec_x1 = generator_forward(s.f, fake_y1);
  const auto rec_x2 = generator_forward(s.f, fake_y2);
  // Y -> X -> Y
  const auto fake_x1 = generator_forward(s.f, y_run1);
  const auto fake_x2 = generator_forward(s.f, y_run2);
  const auto rec_y1 = generator_forward(s.g, fake_x1);
  const auto rec_y2 = generator_forward(s.g, fake_x2);

  GeneratorTerms t;
  t.g_adv = 0.5 * (lsgan_g_loss(discriminator_forward(s.d_y, fake_y1.later)) +
                   lsgan_g_loss(discriminator_forward(s.d_y, fake_y2.later)));
  t.f_adv = 0.5 * (lsgan_g_loss(discriminator_forward(s.d_x, fake_x1.later)) +
                   lsgan_g_loss(discriminator_forward(s.d_x, fake_x2.later)));
  t.g_temp_adv = lsgan_g_loss(discriminator_forward(s.d_ty, FramePair{fake_y1.later, fake_y2.later}));
  t.f_temp_adv = lsgan_g_loss(discriminator_forward(s.d_tx, FramePair{fake_x1.later, fake_x2.later}));
  t.cycle_x = 0.5 * (cycle_loss(x_run1, rec_x1, 1.0) + cycle_loss(x_run2, rec_x2, 1.0));
  t.cycle_y = 0.5 * (cycle_loss(y_run1, rec_y1, 1.0) + cycle_loss(y_run2, rec_y2, 1.0));
  // Same time step t-1 rendered by both runs.
  t.temporal_match_y = temporal_match_loss(fake_y1.later, fake_y2.earlier) +
                       temporal_match_loss(rec_y1.later, rec_y2.earlier);
  t.temporal_match_x = temporal_match_loss(fake_x1.later, fake_x2.earlier) +
                       temporal_match_loss(rec_x1.later, rec_x2.earlier);
  if (s.config.identity > 0) {
    t.identity_y = cycle_loss(y_run2, generator_forward(s.g, y_run2), 1.0);
    t.identity_x = cycle_loss(x_run2, generator_forward(s.f, x_run2), 1.0);
  }
  auto objective = assemble_generator_objective(t, s.config.weights());
  TemporalFakes fakes{fake_y1.later.detached(), fake_y2.later.detached(), fake_x1.later.detached(),
                      fake_x2.later.detached()};
  return {std::move(objective), std::move(fakes)};
}

struct BaselineFakes {
  Frame y, x;
};

std::pair<GeneratorObjective, BaselineFakes> baseline_generator_pass(TrainState& s, const Frame& x, const Frame& y) {
  const auto fake_y = generator_forward(s.g, x);
  const auto rec_x = generator_forward(s.f, fake_y);
  const auto fake_x = generator_forward(s.f, y);
  const auto rec_y = generator_forward(s.g, fake_x);

  GeneratorTerms t;
  t.g_adv = lsgan_g_loss(discriminator_forward(s.d_y, fake_y));
  t.f_adv = lsgan_g_loss(discriminator_forward(s.d_x, fake_x));
  t.cycle_x = cycle_loss(x, rec_x, 1.0);
  t.cycle_y = cycle_loss(y, rec_y, 1.0);
  if (s.config.identity > 0) {
    t.identity_y = cycle_loss(y, generator_forward(s.g, y), 1.0);
    t.identity_x = cycle_loss(x, generator_forward(s.f, x), 1.0);
  }
  auto objective = assemble_generator_objective(t, s.config.weights());
  return {std::move(objective), BaselineFakes{fake_y.detached(), fake_x.detached()}};
}

// Runs `loss_of(i)` for every sample, accumulating gradients of loss / n into
// `net`, then takes one Adam step. Returns the per-sample loss values.
template <typename LossFn>
std::vector<double> discriminator_update(TrainState& s, const std::string& name, Discriminator& net, size_t n,
                                         LossFn loss_of) {
  set_requires_grad(*net, true);
  net->zero_grad();
  std::vector<double> values;
  for (size_t i = 0; i < n; ++i) {
    auto loss = loss_of(i);
    values.push_back(loss.template item<double>());
    (loss / static_cast<double>(n)).backward();
  }
  optimize(s, name, *net);
  require_finite_parameters(name, *net);
  return values;
}

void begin_generator_phase(TrainState& s) {
  for (auto& [name, net] : s.networks()) {
    const bool is_generator = name == "G" || name == "F";
    set_requires_grad(*net, is_generator);
    if (is_generator) net->zero_grad();
  }
}

void finish_generator_phase(TrainState& s) {
  optimize(s, "G", *s.g);
  optimize(s, "F", *s.f);
  require_finite_parameters("G", *s.g);
  require_finite_parameters("F", *s.f);
}

void check_batch(size_t nx, size_t ny) {
  if (nx == 0 || nx != ny) throw std::invalid_argument("train_step: need equally sized, non-empty X and Y batches");
}

std::vector<size_t> permutation(size_t n, uint64_t seed) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  return order;
}

torch::Tensor string_tensor(const std::string& s) {
  auto t = torch::empty({static_cast<int64_t>(s.size())}, torch::kUInt8);
  std::memcpy(t.data_ptr(), s.data(), s.size());
  return t;
}

std::string tensor_string(const torch::Tensor& t) {
  return std::string(static_cast<const char*>(t.data_ptr()), static_cast<size_t>(t.numel()));
}

torch::Tensor int_tensor(std::vector<int64_t> values) {
  return torch::tensor(values, torch::kInt64);
}

std::string item_name(size_t i) { return "item/" + std::to_string(i); }

}  // namespace

double learning_rate_at(const TrainConfig& config, int64_t /*step*/) { return config.learning_rate; }

void adam_step(const std::vector<torch::Tensor>& params, AdamState& st, const TrainConfig& cfg) {
  torch::NoGradGuard no_grad;
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.push_back(torch::zeros_like(p));
      st.v.push_back(torch::zeros_like(p));
    }
  }
  if (st.m.size() != params.size()) throw std::logic_error("adam_step: parameter count changed");
  ++st.steps;
  const double lr = learning_rate_at(cfg, st.steps);
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.steps));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.steps));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& grad = params[i].grad();
    if (!grad.defined()) continue;
    st.m[i].mul_(cfg.beta1).add_(grad, 1.0 - cfg.beta1);
    st.v[i].mul_(cfg.beta2).addcmul_(grad, grad, 1.0 - cfg.beta2);
    const auto denom = (st.v[i].sqrt() / std::sqrt(bias2)).add_(cfg.eps);
    params[i].addcdiv_(st.m[i], denom, -lr / bias1);
  }
}

TrainState TrainState::create(const TrainConfig& config) {
  config.validate();
  TrainState s;
  s.config = config;
  const auto net = config.net();
  const auto cap = static_cast<size_t>(config.buffer_capacity);
  s.g = make_generator(net);
  s.f = make_generator(net);
  s.d_x = make_discriminator(net, false);
  s.d_y = make_discriminator(net, false);
  if (!config.baseline) {
    s.d_tx = make_discriminator(net, true);
    s.d_ty = make_discriminator(net, true);
  }
  uint64_t index = 0;
  for (auto& [name, module] : s.networks()) {
    initialize_weights(*module, derive_seed(config.seed, Stream::Init, index++));
    s.adam[name] = AdamState{};
  }
  s.pool_x = ReplayBuffer<Frame>(cap, derive_seed(config.seed, Stream::Buffer, 0));
  s.pool_y = ReplayBuffer<Frame>(cap, derive_seed(config.seed, Stream::Buffer, 1));
  s.pool_tx = ReplayBuffer<TemporalSample>(cap, derive_seed(config.seed, Stream::Buffer, 2));
  s.pool_ty = ReplayBuffer<TemporalSample>(cap, derive_seed(config.seed, Stream::Buffer, 3));
  return s;
}

std::vector<std::pair<std::string, torch::nn::Module*>> TrainState::networks() const {
  std::vector<std::pair<std::string, torch::nn::Module*>> out{
      {"G", g.ptr().get()}, {"F", f.ptr().get()}, {"D_X", d_x.ptr().get()}, {"D_Y", d_y.ptr().get()}};
  if (temporal()) {
    out.emplace_back("D_TX", d_tx.ptr().get());
    out.emplace_back("D_TY", d_ty.ptr().get());
  }
  return out;
}

Archive TrainState::to_archive() const {
  Archive a;
  for (const auto& [k, v] : config_to_map(config)) a.header[k] = v;
  a.header["format"] = "tempcycle-train-state";
  a.header["kind"] = temporal() ? "tempcyclegan" : "cyclegan";
  a.header["frames"] = std::to_string(config.net().frames);
  a.header["residual_blocks"] = std::to_string(kResidualBlocks);

  for (const auto& [name, module] : networks()) {
    a.add_section(name) = module_section(name, *module);
    auto& opt = a.add_section("adam/" + name);
    const auto& st = adam.at(name);
    opt.arrays.push_back({"steps", int_tensor({st.steps})});
    for (size_t i = 0; i < st.m.size(); ++i) {
      opt.arrays.push_back({"m/" + std::to_string(i), st.m[i].clone()});
      opt.arrays.push_back({"v/" + std::to_string(i), st.v[i].clone()});
    }
  }
  auto frame_pool = [&](const std::string& name, const ReplayBuffer<Frame>& pool) {
    auto& sec = a.add_section(name);
    sec.arrays.push_back({"rng", string_tensor(pool.rng_state())});
    sec.arrays.push_back({"size", int_tensor({static_cast<int64_t>(pool.size())})});
    for (size_t i = 0; i < pool.size(); ++i) sec.arrays.push_back({item_name(i), pool.items()[i].tensor().clone()});
  };
  auto pair_pool = [&](const std::string& name, const ReplayBuffer<TemporalSample>& pool) {
    auto& sec = a.add_section(name);
    sec.arrays.push_back({"rng", string_tensor(pool.rng_state())});
    sec.arrays.push_back({"size", int_tensor({static_cast<int64_t>(pool.size())})});
    for (size_t i = 0; i < pool.size(); ++i) {
      const auto& it = pool.items()[i];
      sec.arrays.push_back({item_name(i) + "/earlier", it.pair.earlier.tensor().clone()});
      sec.arrays.push_back({item_name(i) + "/later", it.pair.later.tensor().clone()});
      sec.arrays.push_back({item_name(i) + "/runs", int_tensor({it.earlier_run, it.later_run})});
    }
  };
  frame_pool("pool/X", pool_x);
  frame_pool("pool/Y", pool_y);
  if (temporal()) {
    pair_pool("pool/TX", pool_tx);
    pair_pool("pool/TY", pool_ty);
  }
  auto& progress = a.add_section("progress");
  progress.arrays.push_back({"step", int_tensor({step})});
  progress.arrays.push_back({"epoch", int_tensor({epoch})});
  progress.arrays.push_back({"step_in_epoch", int_tensor({step_in_epoch})});
  return a;
}

TrainConfig config_from_checkpoint(const Archive& a) {
  if (a.header_value("format") != "tempcycle-train-state") throw std::runtime_error("checkpoint: not a training state");
  if (a.header_value("residual_blocks") != std::to_string(kResidualBlocks)) {
    throw std::runtime_error("checkpoint: generators must have " + std::to_string(kResidualBlocks) + " residual blocks");
  }
  auto values = a.header;
  for (const char* extra : {"format", "kind", "frames", "residual_blocks"}) values.erase(extra);
  auto config = config_from_map(values);
  if (a.header_value("frames") != std::to_string(config.net().frames)) {
    throw std::runtime_error("checkpoint: frame count does not match configuration");
  }
  return config;
}

TrainState TrainState::from_archive(const Archive& a) {
  TrainState s = create(config_from_checkpoint(a));

  for (auto& [name, module] : s.networks()) {
    load_module_section(a.section(name), *module);
    const auto& opt = a.section("adam/" + name);
    auto& st = s.adam[name];
    st.steps = opt.at("steps").item<int64_t>();
    const auto params = module->parameters();
    if (opt.contains("m/0")) {
      for (size_t i = 0; i < params.size(); ++i) {
        st.m.push_back(opt.at("m/" + std::to_string(i)).clone());
        st.v.push_back(opt.at("v/" + std::to_string(i)).clone());
      }
    }
  }
  auto frame_pool = [&](const std::string& name, ReplayBuffer<Frame>& pool) {
    const auto& sec = a.section(name);
    std::vector<Frame> items;
    const auto n = sec.at("size").item<int64_t>();
    for (int64_t i = 0; i < n; ++i) items.emplace_back(sec.at(item_name(i)).clone());
    pool.restore(std::move(items), tensor_string(sec.at("rng")));
  };
  auto pair_pool = [&](const std::string& name, ReplayBuffer<TemporalSample>& pool) {
    const auto& sec = a.section(name);
    std::vector<TemporalSample> items;
    const auto n = sec.at("size").item<int64_t>();
    for (int64_t i = 0; i < n; ++i) {
      const auto runs = sec.at(item_name(i) + "/runs");
      items.push_back({FramePair(Frame(sec.at(item_name(i) + "/earlier").clone()),
                                 Frame(sec.at(item_name(i) + "/later").clone())),
                       static_cast<int>(runs[0].item<int64_t>()), static_cast<int>(runs[1].item<int64_t>())});
    }
    pool.restore(std::move(items), tensor_string(sec.at("rng")));
  };
  frame_pool("pool/X", s.pool_x);
  frame_pool("pool/Y", s.pool_y);
  if (s.temporal()) {
    pair_pool("pool/TX", s.pool_tx);
    pair_pool("pool/TY", s.pool_ty);
  }
  const auto& progress = a.section("progress");
  s.step = progress.at("step").item<int64_t>();
  s.epoch = progress.at("epoch").item<int64_t>();
  s.step_in_epoch = progress.at("step_in_epoch").item<int64_t>();
  return s;
}

void TrainState::save(const std::filesystem::path& path) const { to_archive().save(path); }

TrainState TrainState::load(const std::filesystem::path& path) { return from_archive(Archive::load(path)); }

LossReport train_step(TrainState& s, const FrameTriplet& x, const FrameTriplet& y) {
  return train_step(s, std::span<const FrameTriplet>(&x, 1), std::span<const FrameTriplet>(&y, 1));
}

LossReport train_step(TrainState& s, std::span<const FrameTriplet> xs, std::span<const FrameTriplet> ys) {
  if (!s.temporal()) throw std::logic_error("train_step: state was created for the per-frame baseline");
  check_batch(xs.size(), ys.size());
  const size_t n = xs.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < 3; ++k) {
      if (!xs[i].frames[k].same_shape(ys[i].frames[k]) || !xs[i].frames[k].same_shape(xs[i].frames[0])) {
        throw std::invalid_argument("train_step: X and Y triplet frames must share one shape");
      }
    }
  }

  begin_generator_phase(s);
  std::vector<LossReport> reports;
  std::vector<TemporalFakes> fakes;
  for (size_t i = 0; i < n; ++i) {
    auto [objective, f] = temporal_generator_pass(s, xs[i], ys[i]);
    (objective.total / static_cast<double>(n)).backward();
    reports.push_back(objective.report);
    fakes.push_back(std::move(f));
  }
  finish_generator_phase(s);

  const auto d_x = discriminator_update(s, "D_X", s.d_x, n, [&](size_t i) {
    const auto& x = xs[i].frames;
    const auto fake = stack_frames({s.pool_x.query(fakes[i].x_first), s.pool_x.query(fakes[i].x_second)});
    return lsgan_d_loss(s.d_x->forward(stack_frames({x[1], x[2]})), s.d_x->forward(fake));
  });
  const auto d_y = discriminator_update(s, "D_Y", s.d_y, n, [&](size_t i) {
    const auto& y = ys[i].frames;
    const auto fake = stack_frames({s.pool_y.query(fakes[i].y_first), s.pool_y.query(fakes[i].y_second)});
    return lsgan_d_loss(s.d_y->forward(stack_frames({y[1], y[2]})), s.d_y->forward(fake));
  });
  const auto d_tx = discriminator_update(s, "D_TX", s.d_tx, n, [&](size_t i) {
    const auto& x = xs[i].frames;
    const auto fake = s.pool_tx.query({FramePair{fakes[i].x_first, fakes[i].x_second}, kFirstRun, kSecondRun});
    return lsgan_d_loss(discriminator_forward(s.d_tx, FramePair{x[1], x[2]}), discriminator_forward(s.d_tx, fake.pair));
  });
  const auto d_ty = discriminator_update(s, "D_TY", s.d_ty, n, [&](size_t i) {
    const auto& y = ys[i].frames;
    const auto fake = s.pool_ty.query({FramePair{fakes[i].y_first, fakes[i].y_second}, kFirstRun, kSecondRun});
    return lsgan_d_loss(discriminator_forward(s.d_ty, FramePair{y[1], y[2]}), discriminator_forward(s.d_ty, fake.pair));
  });
  for (size_t i = 0; i < n; ++i) record_discriminator_losses(reports[i], d_x[i], d_y[i], d_tx[i], d_ty[i]);
  return average_reports(reports);
}

LossReport train_step_baseline(TrainState& s, const Frame& x, const Frame& y) {
  return train_step_baseline(s, std::span<const Frame>(&x, 1), std::span<const Frame>(&y, 1));
}

LossReport train_step_baseline(TrainState& s, std::span<const Frame> xs, std::span<const Frame> ys) {
  if (s.temporal()) throw std::logic_error("train_step_baseline: state was created for the temporal model");
  check_batch(xs.size(), ys.size());
  const size_t n = xs.size();
  for (size_t i = 0; i < n; ++i) {
    if (!xs[i].same_shape(ys[i]) || !xs[i].same_shape(xs[0])) {
      throw std::invalid_argument("train_step_baseline: X and Y frames must share one shape");
    }
  }

  begin_generator_phase(s);
  std::vector<LossReport> reports;
  std::vector<BaselineFakes> fakes;
  for (size_t i = 0; i < n; ++i) {
    auto [objective, f] = baseline_generator_pass(s, xs[i], ys[i]);
    (objective.total / static_cast<double>(n)).backward();
    reports.push_back(objective.report);
    fakes.push_back(std::move(f));
  }
  finish_generator_phase(s);

  const auto d_x = discriminator_update(s, "D_X", s.d_x, n, [&](size_t i) {
    return lsgan_d_loss(discriminator_forward(s.d_x, xs[i]), discriminator_forward(s.d_x, s.pool_x.query(fakes[i].x)));
  });
  const auto d_y = discriminator_update(s, "D_Y", s.d_y, n, [&](size_t i) {
    return lsgan_d_loss(discriminator_forward(s.d_y, ys[i]), discriminator_forward(s.d_y, s.pool_y.query(fakes[i].y)));
  });
  for (size_t i = 0; i < n; ++i) record_discriminator_losses(reports[i], d_x[i], d_y[i], std::nullopt, std::nullopt);
  return average_reports(reports);
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%08lld", static_cast<long long>(step));
  return out_dir / "checkpoints" / buf;
}

namespace {

// Loss log rows with step <= keep_through survive a resume; later ones are discarded.
std::ofstream open_loss_log(const std::filesystem::path& path, int64_t keep_through) {
  std::vector<std::string> kept;
  if (keep_through > 0 && std::filesystem::exists(path)) {
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (LossReport::parse_csv_row(line).first.first <= keep_through) kept.push_back(line);
    }
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << LossReport::csv_header() << '\n';
  for (const auto& l : kept) os << l << '\n';
  return os;
}

}  // namespace

std::filesystem::path train(TrainState& s, const std::vector<FrameTriplet>& x_triplets,
                            const std::vector<FrameTriplet>& y_triplets, const std::filesystem::path& out_dir,
                            const StepCallback& on_step) {
  if (x_triplets.empty()) throw std::invalid_argument("train: no training triplets for domain X");
  if (y_triplets.empty()) throw std::invalid_argument("train: no training triplets for domain Y");
  const auto& cfg = s.config;
  std::filesystem::create_directories(out_dir / "checkpoints");
  auto log = open_loss_log(out_dir / "loss_log.csv", s.step);

  const size_t nx = x_triplets.size(), ny = y_triplets.size();
  const size_t samples = std::max(nx, ny);
  const auto batch = static_cast<size_t>(cfg.batch_size);
  const auto steps_per_epoch = static_cast<int64_t>((samples + batch - 1) / batch);
  const AugmentOptions aug{cfg.image_size, 0.5, std::nullopt};

  std::filesystem::path last;
  for (; s.epoch < cfg.epochs; ++s.epoch, s.step_in_epoch = 0) {
    const auto epoch = static_cast<uint64_t>(s.epoch);
    const auto order_x = permutation(nx, derive_seed(cfg.seed, Stream::Shuffle, epoch, 0));
    const auto order_y = permutation(ny, derive_seed(cfg.seed, Stream::Shuffle, epoch, 1));
    while (s.step_in_epoch < steps_per_epoch) {
      std::vector<FrameTriplet> bx, by;
      const size_t first = static_cast<size_t>(s.step_in_epoch) * batch;
      for (size_t j = first; j < std::min(first + batch, samples); ++j) {
        std::mt19937_64 rng_x(derive_seed(cfg.seed, Stream::Augment, epoch, 2 * j));
        std::mt19937_64 rng_y(derive_seed(cfg.seed, Stream::Augment, epoch, 2 * j + 1));
        bx.push_back(augment(x_triplets[order_x[j % nx]], rng_x, aug));
        by.push_back(augment(y_triplets[order_y[j % ny]], rng_y, aug));
      }
      LossReport report;
      if (s.temporal()) {
        report = train_step(s, bx, by);
      } else {
        std::vector<Frame> fx, fy;
        for (const auto& t : bx) fx.push_back(t.frames[2]);
        for (const auto& t : by) fy.push_back(t.frames[2]);
        report = train_step_baseline(s, fx, fy);
      }
      ++s.step;
      ++s.step_in_epoch;
      log << report.csv_row(s.step, s.epoch) << '\n';
      log.flush();
      if (!log) throw std::runtime_error("write failed: " + (out_dir / "loss_log.csv").string());
      if (on_step) on_step(s.step, s.epoch, report);
      if (cfg.checkpoint_every > 0 && s.step % cfg.checkpoint_every == 0) {
        last = checkpoint_path(out_dir, s.step);
        s.save(last);
      }
    }
  }
  if (last != checkpoint_path(out_dir, s.step)) {
    last = checkpoint_path(out_dir, s.step);
    s.save(last);
  }
  return last;
}

}  // namespace tempcycle
