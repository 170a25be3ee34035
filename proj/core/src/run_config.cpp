#include "splatstab/run_config.hpp"

#include <fstream>
#include <sstream>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T, typename F>
T convert(const std::string& key, const std::string& value, F&& f) {
  try {
    std::size_t used = 0;
    const T out = f(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw InputError("invalid value for " + key + ": '" + value + "'");
  }
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(n) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw InputError("config line " + std::to_string(n) + ": empty key");
    out[key] = value;
  }
  return out;
}

ConfigMap read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void RunConfig::overlay(const ConfigMap& overrides) {
  for (const auto& [k, v] : overrides) values_[k] = v;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return convert<double>(key, it->second, [](const std::string& s, std::size_t* u) { return std::stod(s, u); });
}

int RunConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return convert<int>(key, it->second, [](const std::string& s, std::size_t* u) { return std::stoi(s, u); });
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (!it->second.empty() && it->second[0] == '-') throw InputError("invalid value for " + key);
  return convert<std::uint64_t>(key, it->second,
                                [](const std::string& s, std::size_t* u) { return std::stoull(s, u); });
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw InputError("invalid value for " + key + ": '" + v + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key, const std::vector<int>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(convert<int>(key, item, [](const std::string& s, std::size_t* u) { return std::stoi(s, u); }));
  }
  return out;
}

std::string RunConfig::require(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw InputError("missing required setting " + key);
  return it->second;
}

StabilizeConfig stabilize_config_from(const RunConfig& c) {
  StabilizeConfig s;
  s.smoothing.sigma_s = c.get_double("sigma", s.smoothing.sigma_s);
  if (c.has("window") && c.get_string("window") != "auto") s.smoothing.window = c.get_int("window", 0);
  s.pad = c.get_int("pad", s.pad);
  OptimConfig& o = s.optim;
  o.epochs = c.get_int("epochs", o.epochs);
  o.dilation_schedule = c.get_int_list("dilation", o.dilation_schedule);
  if (!c.has("dilation") && o.epochs != 3) {
    o.dilation_schedule.resize(o.epochs, o.dilation_schedule.empty() ? 0 : o.dilation_schedule.back());
  }
  o.steps_per_epoch = c.get_int("steps", o.steps_per_epoch);
  o.views_per_step = c.get_int("views", o.views_per_step);
  o.window = c.get_int("view_window", o.window);
  o.reg_window = c.get_int("reg_window", o.reg_window);
  o.weights.ssim = c.get_double("lambda_ssim", o.weights.ssim);
  o.weights.consistent = c.get_double("lambda_consistent", o.weights.consistent);
  o.weights.scale = c.get_double("lambda_scale", o.weights.scale);
  o.weights.offset = c.get_double("lambda_offset", o.weights.offset);
  o.rates.offset = c.get_double("lr_offset", o.rates.offset);
  o.rates.scale = c.get_double("lr_scale", o.rates.scale);
  o.rates.rot = c.get_double("lr_rot", o.rates.rot);
  o.rates.alpha = c.get_double("lr_alpha", o.rates.alpha);
  o.rates.color = c.get_double("lr_color", o.rates.color);
  const std::string opt = c.get_string("optimizer", "adam");
  if (opt == "adam") {
    o.optimizer = OptimizerKind::kAdam;
  } else if (opt == "gd") {
    o.optimizer = OptimizerKind::kGradientDescent;
  } else {
    throw InputError("unknown optimizer " + opt);
  }
  const std::string pm = c.get_string("pair_mode", "offset");
  if (pm == "offset") {
    o.pair_mode = PairMode::kNormalizedOffset;
  } else if (pm == "mean") {
    o.pair_mode = PairMode::kRawMean;
  } else {
    throw InputError("unknown pair_mode " + pm);
  }
  o.compensation.enabled = c.get_bool("compensation", o.compensation.enabled);
  o.init.layers = c.get_int("layers", o.init.layers);
  o.init.alpha = c.get_double("init_alpha", o.init.alpha);
  o.init.scale_pixels = c.get_double("init_scale", o.init.scale_pixels);
  o.seed = c.get_u64("seed", o.seed);
  s.smoothing.validate();
  o.validate();
  if (s.pad < 0) throw InputError("pad must be non-negative");
  return s;
}

void require_paths_exist(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) {
    if (!p.empty() && !std::filesystem::exists(p)) throw InputError("no such file or directory: " + p.string());
  }
}

}  // namespace splatstab
