#include "icl/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace icl::config {

namespace {
std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

KVConfig KVConfig::from_text(const std::string& text) {
  KVConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.values[key] = val;
  }
  return cfg;
}

KVConfig KVConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_text(buf.str());
}

void KVConfig::apply_env_overrides(const std::vector<std::string>& known_keys) {
  for (const std::string& key : known_keys) {
    std::string env_name = "ICL_";
    for (char c : key) env_name += static_cast<char>(c == '-' ? '_' : std::toupper(c));
    if (const char* v = std::getenv(env_name.c_str())) values[key] = v;
  }
}

std::string KVConfig::get_string(const std::string& key, const std::string& dflt) const {
  auto it = values.find(key);
  return it == values.end() ? dflt : it->second;
}

int KVConfig::get_int(const std::string& key, int dflt) const {
  auto it = values.find(key);
  return it == values.end() ? dflt : std::stoi(it->second);
}

uint64_t KVConfig::get_u64(const std::string& key, uint64_t dflt) const {
  auto it = values.find(key);
  return it == values.end() ? dflt : std::stoull(it->second);
}

double KVConfig::get_double(const std::string& key, double dflt) const {
  auto it = values.find(key);
  return it == values.end() ? dflt : std::stod(it->second);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<int> KVConfig::get_int_list(const std::string& key,
                                        const std::vector<int>& dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  std::vector<int> out;
  for (const std::string& s : split_list(it->second)) out.push_back(std::stoi(s));
  return out;
}

std::vector<double> KVConfig::get_double_list(const std::string& key,
                                              const std::vector<double>& dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  std::vector<double> out;
  for (const std::string& s : split_list(it->second)) out.push_back(std::stod(s));
  return out;
}

std::vector<std::string> KVConfig::get_string_list(const std::string& key,
                                                   const std::vector<std::string>& dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  return split_list(it->second);
}

}  // namespace icl::config
