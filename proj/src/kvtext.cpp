#include "relrep/kvtext.hpp"

#include <charconv>
#include <sstream>

#include "relrep/error.hpp"

namespace relrep {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(const std::string& token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

KeyValueText KeyValueText::parse(const std::string& text, const std::string& source) {
  KeyValueText kv;
  kv.source_ = source;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::config,
           source + ":" + std::to_string(line) + ": expected `key = value`, got `" + content + "`");
    }
    const std::string key = trim(content.substr(0, eq));
    if (key.empty()) {
      fail(ErrorCode::config, source + ":" + std::to_string(line) + ": empty key");
    }
    if (kv.entries_.count(key) != 0) {
      fail(ErrorCode::config, source + ":" + std::to_string(line) + ": duplicate key `" + key +
                                  "` (first on line " +
                                  std::to_string(kv.entries_.at(key).line) + ")");
    }
    kv.entries_[key] = Entry{trim(content.substr(eq + 1)), line};
  }
  return kv;
}

void KeyValueText::field_error(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  const std::string where =
      it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
  fail(ErrorCode::config, where + ": field `" + key + "`: " + message);
}

const KeyValueText::Entry& KeyValueText::require(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) field_error(key, "missing required key");
  read_[key] = true;
  return it->second;
}

std::string KeyValueText::get_string(const std::string& key) const { return require(key).value; }

std::string KeyValueText::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double KeyValueText::get_double(const std::string& key) const {
  const auto values = get_doubles(key);
  if (values.size() != 1) field_error(key, "expected a single number");
  return values.front();
}

double KeyValueText::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValueText::get_u64(const std::string& key) const {
  const std::string& value = require(key).value;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    field_error(key, "expected a nonnegative integer, got `" + value + "`");
  }
  return out;
}

std::uint64_t KeyValueText::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

std::vector<double> KeyValueText::get_doubles(const std::string& key) const {
  std::string value = require(key).value;
  for (char& c : value) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(value);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    double number = 0.0;
    if (!parse_number(token, number)) field_error(key, "`" + token + "` is not a number");
    out.push_back(number);
  }
  if (out.empty()) field_error(key, "no values");
  return out;
}

std::vector<double> KeyValueText::get_doubles(const std::string& key,
                                              std::vector<double> fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::string> KeyValueText::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (read_.count(key) == 0) out.push_back(key);
  }
  return out;
}

}  // namespace relrep
