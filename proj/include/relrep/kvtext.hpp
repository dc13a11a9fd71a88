#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relrep {

/// Line-oriented `key = value` text.  `#` starts a comment, blank lines are
/// ignored, array values are whitespace- or comma-separated.  Every entry
/// remembers its line so diagnostics can point at it.
class KeyValueText {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueText parse(const std::string& text, const std::string& source = "<text>");

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  /// Keys that were present but never read; used to reject typos.
  std::vector<std::string> unread_keys() const;

  /// Raises a config error naming the key and its line.
  [[noreturn]] void field_error(const std::string& key, const std::string& message) const;

 private:
  const Entry& require(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  std::string source_;
  mutable std::map<std::string, bool> read_;
};

}  // namespace relrep
