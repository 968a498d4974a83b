#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lrange {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. `[section]` lines prefix the keys that
/// follow with "section."; `#` starts a comment. Later assignments override
/// earlier ones, which is how a config file is layered over a preset.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<config>");

  /// Parses `text` and overrides existing keys.
  void merge(std::string_view text, const std::string& source);
  void set(const std::string& key, std::string value);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string str(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Comma-separated integers; "a:b" expands to the inclusive range a..b.
  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Throws ConfigError naming the first key (and its line) that is not in
  /// `known`. Entries of `known` ending in '*' match any key with that prefix.
  void check_known(const std::vector<std::string>& known) const;

  /// Canonical sorted `key = value` listing.
  std::string echo() const;
  std::vector<std::string> keys() const;

 private:
  struct Entry {
    std::string value;
    std::string origin;  // "source:line"
  };
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace lrange
