#include "tempcycle/losses.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace tempcycle {

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t).all().item<bool>()) throw NonFiniteLoss(what);
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + Frame::shape_string(a) +
                                " vs " + Frame::shape_string(b));
  }
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

double scalar(const torch::Tensor& t, const char* name) {
  const double v = t.item<double>();
  if (!std::isfinite(v)) throw NonFiniteLoss(name);
  return v;
}

std::optional<double> scalar(const std::optional<torch::Tensor>& t, const char* name) {
  if (!t) return std::nullopt;
  return scalar(*t, name);
}

}  // namespace

torch::Tensor lsgan_d_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  require_finite(real_scores, "lsgan_d_loss real scores");
  require_finite(fake_scores, "lsgan_d_loss fake scores");
  return 0.5 * ((real_scores - 1).pow(2).mean() + fake_scores.pow(2).mean());
}

torch::Tensor lsgan_g_loss(const torch::Tensor& fake_scores) {
  require_finite(fake_scores, "lsgan_g_loss fake scores");
  return (fake_scores - 1).pow(2).mean();
}

torch::Tensor cycle_loss(const FramePair& original, const FramePair& reconstructed, double lambda) {
  require_same_shape(original.later.tensor(), reconstructed.later.tensor(), "cycle_loss");
  require_same_shape(original.earlier.tensor(), reconstructed.earlier.tensor(), "cycle_loss");
  const auto diff = torch::cat({(original.earlier.tensor() - reconstructed.earlier.tensor()).abs().flatten(),
                                (original.later.tensor() - reconstructed.later.tensor()).abs().flatten()});
  return lambda * diff.mean();
}

torch::Tensor cycle_loss(const Frame& original, const Frame& reconstructed, double lambda) {
  require_same_shape(original.tensor(), reconstructed.tensor(), "cycle_loss");
  return lambda * (original.tensor() - reconstructed.tensor()).abs().mean();
}

torch::Tensor temporal_match_loss(const Frame& run1_later, const Frame& run2_earlier) {
  require_same_shape(run1_later.tensor(), run2_earlier.tensor(), "temporal_match_loss");
  return (run1_later.tensor() - run2_earlier.tensor()).abs().mean();
}

GeneratorObjective assemble_generator_objective(const GeneratorTerms& t, const LossWeights& w) {
  LossReport r;
  r.g_adv = scalar(t.g_adv, "g_adv");
  r.f_adv = scalar(t.f_adv, "f_adv");
  r.g_temp_adv = scalar(t.g_temp_adv, "g_temp_adv");
  r.f_temp_adv = scalar(t.f_temp_adv, "f_temp_adv");
  r.cycle_x = scalar(t.cycle_x, "cycle_x");
  r.cycle_y = scalar(t.cycle_y, "cycle_y");
  r.temporal_match_x = scalar(t.temporal_match_x, "temporal_match_x");
  r.temporal_match_y = scalar(t.temporal_match_y, "temporal_match_y");
  r.identity_x = scalar(t.identity_x, "identity_x");
  r.identity_y = scalar(t.identity_y, "identity_y");

  auto total = t.g_adv + t.f_adv + w.lambda * (t.cycle_x + t.cycle_y);
  double sum = r.g_adv + r.f_adv + w.lambda * (r.cycle_x + r.cycle_y);
  if (t.g_temp_adv && t.f_temp_adv) {
    total = total + *t.g_temp_adv + *t.f_temp_adv;
    sum += *r.g_temp_adv + *r.f_temp_adv;
  }
  if (t.temporal_match_x && t.temporal_match_y) {
    total = total + w.mu * (*t.temporal_match_x + *t.temporal_match_y);
    sum += w.mu * (*r.temporal_match_x + *r.temporal_match_y);
  }
  if (t.identity_x && t.identity_y) {
    total = total + w.identity * (*t.identity_x + *t.identity_y);
    sum += w.identity * (*r.identity_x + *r.identity_y);
  }
  r.total_generators = sum;
  if (!std::isfinite(sum)) throw NonFiniteLoss("total_generators");
  return {total, r};
}

void record_discriminator_losses(LossReport& r, double d_x, double d_y, std::optional<double> d_tx,
                                 std::optional<double> d_ty) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v)) throw NonFiniteLoss(name);
  };
  check(d_x, "d_x");
  check(d_y, "d_y");
  r.d_x = d_x;
  r.d_y = d_y;
  r.d_tx = d_tx;
  r.d_ty = d_ty;
  r.total_discriminators = d_x + d_y;
  if (d_tx) {
    check(*d_tx, "d_tx");
    r.total_discriminators += *d_tx;
  }
  if (d_ty) {
    check(*d_ty, "d_ty");
    r.total_discriminators += *d_ty;
  }
}

std::string LossReport::csv_header() {
  return "step,epoch,g_adv,f_adv,g_temp_adv,f_temp_adv,cycle_x,cycle_y,temporal_match_x,"
         "temporal_match_y,identity_x,identity_y,d_x,d_y,d_tx,d_ty,total_generators,"
         "total_discriminators";
}

std::string LossReport::csv_row(int64_t step, int64_t epoch) const {
  std::ostringstream os;
  os << step << ',' << epoch << ',' << fmt_double(g_adv) << ',' << fmt_double(f_adv) << ','
     << fmt_opt(g_temp_adv) << ',' << fmt_opt(f_temp_adv) << ',' << fmt_double(cycle_x) << ','
     << fmt_double(cycle_y) << ',' << fmt_opt(temporal_match_x) << ',' << fmt_opt(temporal_match_y)
     << ',' << fmt_opt(identity_x) << ',' << fmt_opt(identity_y) << ',' << fmt_double(d_x) << ','
     << fmt_double(d_y) << ',' << fmt_opt(d_tx) << ',' << fmt_opt(d_ty) << ','
     << fmt_double(total_generators) << ',' << fmt_double(total_discriminators);
  return os.str();
}

std::pair<std::pair<int64_t, int64_t>, LossReport> LossReport::parse_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  if (cells.size() != 18) throw std::runtime_error("loss log: expected 18 columns, got " + std::to_string(cells.size()));
  auto num = [](const std::string& s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw std::runtime_error("loss log: bad number '" + s + "'");
    return v;
  };
  auto opt = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return num(s);
  };
  LossReport r;
  r.g_adv = num(cells[2]);
  r.f_adv = num(cells[3]);
  r.g_temp_adv = opt(cells[4]);
  r.f_temp_adv = opt(cells[5]);
  r.cycle_x = num(cells[6]);
  r.cycle_y = num(cells[7]);
  r.temporal_match_x = opt(cells[8]);
  r.temporal_match_y = opt(cells[9]);
  r.identity_x = opt(cells[10]);
  r.identity_y = opt(cells[11]);
  r.d_x = num(cells[12]);
  r.d_y = num(cells[13]);
  r.d_tx = opt(cells[14]);
  r.d_ty = opt(cells[15]);
  r.total_generators = num(cells[16]);
  r.total_discriminators = num(cells[17]);
  return {{std::stoll(cells[0]), std::stoll(cells[1])}, r};
}

}  // namespace tempcycle
