#include "lrange/config.hpp"

#include <algorithm>

#include "lrange/format.hpp"

namespace lrange {

Config Config::parse(std::string_view text, const std::string& source) {
  Config c;
  c.merge(text, source);
  return c;
}

void Config::merge(std::string_view text, const std::string& source) {
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    entries_[full] = Entry{std::string(trim(line.substr(eq + 1))), where};
  }
}

void Config::set(const std::string& key, std::string value) {
  entries_[key] = Entry{std::move(value), "<override>"};
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

void Config::fail(const std::string& key, const std::string& why) const {
  const auto it = entries_.find(key);
  const std::string where = it == entries_.end() ? "<config>" : it->second.origin;
  throw ConfigError(where + ": " + key + ": " + why);
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::string Config::require(const std::string& key) const {
  const auto v = get(key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  return *v;
}

double Config::number(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return parse_double(*v);
  } catch (const std::invalid_argument& e) {
    fail(key, e.what());
  }
}

std::size_t Config::count(const std::string& key, std::size_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return static_cast<std::size_t>(parse_unsigned(*v));
  } catch (const std::invalid_argument& e) {
    fail(key, e.what());
  }
}

bool Config::flag(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(key, "expected true/false, got '" + *v + "'");
}

std::vector<std::string> Config::strings(const std::string& key,
                                         const std::vector<std::string>& fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  std::string_view rest = *v;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item.empty()) fail(key, "empty list item");
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::vector<std::size_t> Config::counts(const std::string& key,
                                        const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  try {
    for (const std::string& item : strings(key, {})) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        out.push_back(static_cast<std::size_t>(parse_unsigned(item)));
        continue;
      }
      const auto lo = parse_unsigned(std::string_view(item).substr(0, colon));
      const auto hi = parse_unsigned(std::string_view(item).substr(colon + 1));
      if (lo > hi) fail(key, "empty range '" + item + "'");
      for (auto i = lo; i <= hi; ++i) out.push_back(static_cast<std::size_t>(i));
    }
  } catch (const std::invalid_argument& e) {
    fail(key, e.what());
  }
  return out;
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  try {
    for (const std::string& item : strings(key, {})) out.push_back(parse_double(item));
  } catch (const std::invalid_argument& e) {
    fail(key, e.what());
  }
  return out;
}

void Config::check_known(const std::vector<std::string>& known) const {
  for (const auto& [key, entry] : entries_) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](const std::string& k) {
      if (!k.empty() && k.back() == '*') return key.rfind(k.substr(0, k.size() - 1), 0) == 0;
      return k == key;
    });
    if (!ok) throw ConfigError(entry.origin + ": unknown key '" + key + "'");
  }
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [key, entry] : entries_) out += key + " = " + entry.value + "\n";
  return out;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) out.push_back(key);
  return out;
}

}  // namespace lrange
