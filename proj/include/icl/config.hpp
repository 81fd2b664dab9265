#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace icl::config {

/// Flat `key = value` configuration. Lines starting with '#' are comments;
/// list values are comma-separated. Environment variables named
/// ICL_<KEY-in-upper-case> override file values.
struct KVConfig {
  std::map<std::string, std::string> values;

  static KVConfig from_file(const std::string& path);
  static KVConfig from_text(const std::string& text);
  void apply_env_overrides(const std::vector<std::string>& known_keys);

  bool has(const std::string& key) const { return values.count(key) > 0; }
  void set(const std::string& key, const std::string& v) { values[key] = v; }

  std::string get_string(const std::string& key, const std::string& dflt) const;
  int get_int(const std::string& key, int dflt) const;
  uint64_t get_u64(const std::string& key, uint64_t dflt) const;
  double get_double(const std::string& key, double dflt) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& dflt) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& dflt) const;
};

std::vector<std::string> split_list(const std::string& s);

}  // namespace icl::config
