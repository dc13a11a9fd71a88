#pragma once

// Numeric comparison of CSV artifacts against committed fixtures.  Comment
// lines and text fields must match exactly; numeric fields within a
// relative tolerance with a small absolute floor for values near zero.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace golden {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep && sep == ',') out.push_back("");
  return out;
}

inline bool as_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

/// Empty string when the two CSV texts agree, otherwise the first mismatch.
inline std::string compare_csv(const std::string& expected, const std::string& actual, double rel = 1e-10,
                               double abs_floor = 1e-12) {
  const auto a = split(expected, '\n');
  const auto b = split(actual, '\n');
  if (a.size() != b.size()) {
    return "row count " + std::to_string(b.size()) + " != " + std::to_string(a.size());
  }
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].rfind('#', 0) == 0 || b[r].rfind('#', 0) == 0) {
      if (a[r] != b[r]) return "line " + std::to_string(r + 1) + ": `" + b[r] + "` != `" + a[r] + "`";
      continue;
    }
    const auto fa = split(a[r], ',');
    const auto fb = split(b[r], ',');
    if (fa.size() != fb.size()) return "line " + std::to_string(r + 1) + ": field count differs";
    for (std::size_t c = 0; c < fa.size(); ++c) {
      double x = 0.0, y = 0.0;
      if (as_number(fa[c], x) && as_number(fb[c], y)) {
        if (std::isnan(x) && std::isnan(y)) continue;
        if (!(std::abs(x - y) <= rel * std::max(std::abs(x), std::abs(y)) + abs_floor)) {
          return "line " + std::to_string(r + 1) + " field " + std::to_string(c + 1) + ": " + fb[c] + " != " + fa[c];
        }
      } else if (fa[c] != fb[c]) {
        return "line " + std::to_string(r + 1) + " field " + std::to_string(c + 1) + ": `" + fb[c] + "` != `" +
               fa[c] + "`";
      }
    }
  }
  return {};
}

}  // namespace golden
