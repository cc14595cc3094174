#include "chaoskit/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace chaoskit::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

Config Config::from_string(const std::string& text,
                           const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": empty key");
    }
    auto& sec = cfg.sections_[section];
    if (sec.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "' in [" + section + "]");
    }
    sec[key] = Entry{value, lineno, false};
  }
  return cfg;
}

const Config::Entry* Config::find(const std::string& section,
                                  const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  k->second.consumed = true;
  return &k->second;
}

void Config::fail(const std::string& section, const std::string& key,
                  const std::string& what) const {
  const auto s = sections_.find(section);
  int line = 0;
  if (s != sections_.end()) {
    const auto k = s->second.find(key);
    if (k != s->second.end()) line = k->second.line;
  }
  throw ConfigError(origin_ + ":" + std::to_string(line) + ": [" + section +
                    "] " + key + ": " + what);
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key,
                               const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

std::string Config::require_string(const std::string& section,
                                   const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    throw ConfigError(origin_ + ": missing required key [" + section + "] " +
                      key);
  }
  return e->value;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(section, key, "expected a number, got '" + e->value + "'");
  }
}

int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    fail(section, key, "expected an integer, got '" + e->value + "'");
  }
}

std::uint64_t Config::get_uint64(const std::string& section,
                                 const std::string& key,
                                 std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(section, key, "expected an unsigned integer, got '" + e->value +
                           "'");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(section, key, "expected a boolean, got '" + e->value + "'");
}

std::vector<int> Config::get_int_list(const std::string& section,
                                      const std::string& key,
                                      std::vector<int> fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<int> out;
  std::string item;
  std::istringstream in(e->value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      fail(section, key, "expected a comma-separated integer list");
    }
  }
  if (out.empty()) fail(section, key, "empty list");
  return out;
}

void Config::require_all_consumed() const {
  std::vector<std::string> leftovers;
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (!entry.consumed) {
        leftovers.push_back(origin_ + ":" + std::to_string(entry.line) +
                            ": unknown key [" + section + "] " + key);
      }
    }
  }
  if (!leftovers.empty()) {
    std::string msg = "config contains unknown keys:";
    for (const auto& l : leftovers) msg += "\n  " + l;
    throw ConfigError(msg);
  }
}

}  // namespace chaoskit::config
