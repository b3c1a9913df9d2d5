#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace refmine {

/// Flat `key = value` file. Blank lines and `#` comments are ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(const std::string& text);

  bool has(const std::string& key) const { return values_.contains(key); }
  /// Parses the value as a double ("inf" accepted); `fallback` when absent.
  double get_double(const std::string& key, double fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace refmine
