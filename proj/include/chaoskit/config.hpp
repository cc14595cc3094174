#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chaoskit/errors.hpp"

namespace chaoskit::config {

struct ConfigError : InvalidInput {
  using InvalidInput::InvalidInput;
};

// Plain key=value files with [section] headers and # comments.  Every key
// must be consumed by the loader; leftovers are reported with their line
// numbers so config typos fail loudly.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text,
                            const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section,
                             const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::uint64_t get_uint64(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<int> get_int_list(const std::string& section,
                                const std::string& key,
                                std::vector<int> fallback) const;

  /// Throws ConfigError listing every unconsumed key with its line number.
  void require_all_consumed() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;

  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const;
};

}  // namespace chaoskit::config
