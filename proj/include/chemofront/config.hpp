#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chemofront/errors.hpp"

namespace chemofront {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Strict parse of a finite double; the whole token must be consumed.
inline double parse_double(std::string_view token, std::string_view key = {}) {
  const auto t = detail::trim(token);
  double value = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    std::string msg = "cannot parse number '" + std::string(t) + "'";
    if (!key.empty()) msg += " for key '" + std::string(key) + "'";
    throw InputError(msg);
  }
  return value;
}

inline long parse_integer(std::string_view token, std::string_view key = {}) {
  const auto t = detail::trim(token);
  long value = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    std::string msg = "cannot parse integer '" + std::string(t) + "'";
    if (!key.empty()) msg += " for key '" + std::string(key) + "'";
    throw InputError(msg);
  }
  return value;
}

/// Comma separated list of doubles, e.g. "0.1, 0.2, 0.5".
inline std::vector<double> parse_double_list(std::string_view token, std::string_view key = {}) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= token.size()) {
    const auto comma = token.find(',', start);
    const auto piece = token.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - start);
    out.push_back(parse_double(piece, key));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/**
 * Flat `name = value` configuration.
 *
 * `#` starts a comment. A `[section]` line prefixes the following keys with
 * `section.`; an empty `[]` returns to the top level. Repeated keys are an
 * error so that a config file describes exactly one run.
 */
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<string>") {
    KeyValueConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;

      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;

      const auto where = std::string(origin) + ":" + std::to_string(line_no);
      if (line.front() == '[') {
        if (line.back() != ']') throw InputError(where + ": malformed section header '" + std::string(line) + "'");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw InputError(where + ": expected 'name = value', got '" + std::string(line) + "'");
      const auto name = detail::trim(line.substr(0, eq));
      const auto value = detail::trim(line.substr(eq + 1));
      if (name.empty()) throw InputError(where + ": empty key");
      const auto key = section.empty() ? std::string(name) : section + "." + std::string(name);
      cfg.insert(key, std::string(value), where);
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  /// Adds or replaces a value (used for command-line overrides).
  void set(const std::string& key, const std::string& value) {
    if (auto it = index_.find(key); it != index_.end()) {
      entries_[it->second].second = value;
      return;
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(key, value);
  }

  bool contains(const std::string& key) const { return index_.count(key) != 0; }

  const std::string* find(const std::string& key) const {
    const auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
  }

  /// Entries in file order.
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  void insert(const std::string& key, const std::string& value, const std::string& where) {
    if (contains(key)) throw InputError(where + ": duplicate key '" + key + "'");
    set(key, value);
  }

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Splits "key=value" as given to --set.
inline std::pair<std::string, std::string> split_override(std::string_view arg) {
  const auto eq = arg.find('=');
  if (eq == std::string_view::npos || eq == 0) throw InputError("override must be key=value, got '" + std::string(arg) + "'");
  return {std::string(detail::trim(arg.substr(0, eq))), std::string(detail::trim(arg.substr(eq + 1)))};
}

}  // namespace chemofront
