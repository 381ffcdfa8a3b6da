#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gem {

// Usage-level problems (bad flags, missing/invalid config). The CLI maps
// these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run configuration: a flat key = value document ('#' comments, blank lines
// ignored). Every CLI flag has a config-file equivalent; flags override file
// values via override_value().
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  void override_value(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t seed() const;

  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key) const;

  std::string require(const std::string& key) const;       // ConfigError when absent
  std::string require_file(const std::string& key) const;  // and the file must exist

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace gem
