#pragma once

#include <map>
#include <string>
#include <vector>

namespace unveil {

// Flat key-value configuration with sections. Keys are "section.name"; the
// registry of known keys carries every tunable constant with its default, and
// unknown keys are rejected at load/set time.
class Config {
 public:
  static Config defaults();
  static Config load(const std::string& path);  // defaults + file overrides

  void save(const std::string& path) const;
  void parse_file(const std::string& path);

  // Accepts "section.key=value" (as from a --set flag) or "section.key" "value".
  void set(const std::string& key, const std::string& value);
  void set_kv(const std::string& assignment);  // "key=value"

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  long long get_int64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace unveil
