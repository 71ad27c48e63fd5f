#include "tempcycle/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace tempcycle {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter number(T TrainConfig::*member) {
  return [member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"lambda", number(&TrainConfig::lambda)},
      {"mu", number(&TrainConfig::mu)},
      {"identity", number(&TrainConfig::identity)},
      {"learning_rate", number(&TrainConfig::learning_rate)},
      {"batch_size", number(&TrainConfig::batch_size)},
      {"epochs", number(&TrainConfig::epochs)},
      {"beta1", number(&TrainConfig::beta1)},
      {"beta2", number(&TrainConfig::beta2)},
      {"eps", number(&TrainConfig::eps)},
      {"image_size", number(&TrainConfig::image_size)},
      {"load_size", number(&TrainConfig::load_size)},
      {"width", number(&TrainConfig::width)},
      {"seed", number(&TrainConfig::seed)},
      {"checkpoint_every", number(&TrainConfig::checkpoint_every)},
      {"triplet_stride", number(&TrainConfig::triplet_stride)},
      {"buffer_capacity", number(&TrainConfig::buffer_capacity)},
      {"baseline", [](TrainConfig& c, const std::string& k, const std::string& v) { c.baseline = parse_bool(k, v); }},
  };
  return table;
}

}  // namespace

int TrainConfig::resolved_load_size() const {
  if (load_size > 0) return load_size;
  return static_cast<int>(std::lround(image_size * 286.0 / 256.0));
}

NetConfig TrainConfig::net() const { return NetConfig{image_size, width, baseline ? 1 : 2}; }

LossWeights TrainConfig::weights() const { return LossWeights{lambda, mu, identity}; }

void TrainConfig::validate() const {
  net().validate();
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
  };
  positive(learning_rate, "learning_rate");
  positive(eps, "eps");
  if (lambda < 0 || mu < 0 || identity < 0) throw ConfigError("loss weights must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("adam betas must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (triplet_stride < 1) throw ConfigError("triplet_stride must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (resolved_load_size() < image_size) throw ConfigError("load_size must be >= image_size");
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(config, key, value);
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  for (const auto& [k, v] : parse_key_values(ss.str())) apply_config_value(base, k, v);
  return base;
}

std::map<std::string, std::string> config_to_map(const TrainConfig& c) {
  return {
      {"lambda", fmt(c.lambda)},
      {"mu", fmt(c.mu)},
      {"identity", fmt(c.identity)},
      {"learning_rate", fmt(c.learning_rate)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"beta1", fmt(c.beta1)},
      {"beta2", fmt(c.beta2)},
      {"eps", fmt(c.eps)},
      {"image_size", std::to_string(c.image_size)},
      {"load_size", std::to_string(c.load_size)},
      {"width", fmt(c.width)},
      {"seed", std::to_string(c.seed)},
      {"checkpoint_every", std::to_string(c.checkpoint_every)},
      {"triplet_stride", std::to_string(c.triplet_stride)},
      {"buffer_capacity", std::to_string(c.buffer_capacity)},
      {"baseline", c.baseline ? "true" : "false"},
  };
}

TrainConfig config_from_map(const std::map<std::string, std::string>& values) {
  TrainConfig c;
  for (const auto& [k, v] : values) apply_config_value(c, k, v);
  return c;
}

TrainConfig smoke_preset() {
  TrainConfig c;
  c.image_size = 32;
  c.width = 0.25;
  c.epochs = 2;
  c.triplet_stride = 3;
  return c;
}

}  // namespace tempcycle
