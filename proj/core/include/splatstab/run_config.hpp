#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "splatstab/stabilize.hpp"

namespace splatstab {

using ConfigMap = std::map<std::string, std::string>;

// "key = value" lines; '#' starts a comment. Throws InputError naming the line
// on anything else.
ConfigMap parse_config(const std::string& text);
ConfigMap read_config(const std::filesystem::path& path);

// Resolved settings of one CLI invocation: flag values overlaid by the config
// file. Typed getters throw InputError on malformed values.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(ConfigMap values) : values_(std::move(values)) {}

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  // Overrides every key present in `overrides`.
  void overlay(const ConfigMap& overrides);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = {}) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  // Throws InputError("missing required setting <key>").
  std::string require(const std::string& key) const;

  const ConfigMap& values() const { return values_; }

 private:
  ConfigMap values_;
};

// Keys: sigma, pad, epochs, steps, views, window, reg_window, dilation,
// lambda_ssim, lambda_consistent, lambda_scale, lambda_offset, lr_offset,
// lr_scale, lr_rot, lr_alpha, lr_color, optimizer (adam|gd), pair_mode
// (offset|mean), compensation, layers, init_alpha, init_scale, seed.
StabilizeConfig stabilize_config_from(const RunConfig& config);

// Fail-fast check that every listed path exists.
void require_paths_exist(const std::vector<std::filesystem::path>& paths);

}  // namespace splatstab
