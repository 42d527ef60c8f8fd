#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "caudal/errors.hpp"

namespace caudal {

/// Flat key = value configuration grouped into [sections]. Lines starting
/// with '#' or ';' are comments; blank lines are ignored. Keys must appear
/// inside a section and may not repeat within it.
class ConfigFile {
 public:
  using Section = std::map<std::string, std::string>;

  static ConfigFile parse(std::string_view text,
                          const std::string& origin = "<string>") {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw config_error(origin + ":" + std::to_string(line_no) +
                             ": unterminated section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty())
          throw config_error(origin + ":" + std::to_string(line_no) +
                             ": empty section name");
        cfg.sections_[section];  // allow empty sections
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": expected key = value");
      if (section.empty())
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": key outside of any [section]");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": empty key");
      auto [it, inserted] = cfg.sections_[section].emplace(key, value);
      if (!inserted)
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": duplicate key '" + key + "' in [" + section +
                           "]");
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw config_error(origin_ + ": [" + section + "] " + key +
                         " must be a number, got '" + v + "'");
    return x;
  }

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw config_error(origin_ + ": [" + section + "] " + key +
                         " must be an integer, got '" + v + "'");
    return x;
  }

  std::uint64_t get_uint64(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw config_error(origin_ + ": [" + section + "] " + key +
                         " must be an unsigned integer, got '" + v + "'");
    return x;
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw config_error(origin_ + ": [" + section + "] " + key +
                       " must be a boolean, got '" + v + "'");
  }

  const std::map<std::string, Section>& sections() const { return sections_; }
  const std::string& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, Section> sections_;
  std::string origin_ = "<default>";
};

}  // namespace caudal
