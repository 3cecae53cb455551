#include "forensics/kv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "forensics/csv.hpp"

namespace forensics::kv {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

Document parse(const std::string& content, const std::string& label) {
  std::map<std::string, std::string> values;
  std::istringstream in(content);
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(label + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(label + ":" + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (values.count(key))
      throw std::runtime_error(label + ":" + std::to_string(line_no) +
                               ": duplicate key '" + key + "'");
    values[key] = value;
  }
  return Document(std::move(values));
}

Document load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

std::string Document::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing config key '" + key + "'");
  return it->second;
}

std::string Document::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int64_t Document::get_int(const std::string& key) const {
  return csv::to_int64(get_string(key), "config key '" + key + "'");
}

int64_t Document::get_int(const std::string& key, int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Document::get_double(const std::string& key) const {
  return csv::to_double(get_string(key), "config key '" + key + "'");
}

double Document::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Document::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> Document::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::string v = get_string(key);
  size_t start = 0;
  while (start <= v.size()) {
    size_t pos = v.find(',', start);
    std::string item =
        pos == std::string::npos ? v.substr(start) : v.substr(start, pos - start);
    item = item.empty() ? item : item;
    // Trim spaces around items.
    size_t a = item.find_first_not_of(" \t");
    if (a != std::string::npos) {
      size_t b = item.find_last_not_of(" \t");
      out.push_back(item.substr(a, b - a + 1));
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace forensics::kv
