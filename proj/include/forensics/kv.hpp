#pragma once

// Flat key-value config files: one `key = value` per line, `#` comments,
// optional double quotes around values. Used for synthesis, fraud scheme,
// battery, and dataset descriptor files.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace forensics::kv {

class Document {
 public:
  explicit Document(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

Document parse(const std::string& content, const std::string& label);
Document load(const std::string& path);

}  // namespace forensics::kv
