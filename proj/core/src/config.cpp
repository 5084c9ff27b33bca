#include "driftlab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace driftlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

double to_number(const std::string& raw, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(raw, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: " + raw);
  }
  if (used != raw.size())
    throw std::invalid_argument("config: key '" + key + "' is not a number: " + raw);
  return v;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  c.text_ = text;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("config: empty section name at line " +
                                    std::to_string(lineno));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value at line " +
                                  std::to_string(lineno));
    const std::string full = section.empty() ? key : section + "." + key;
    if (c.entries_.count(full))
      throw std::invalid_argument("config: duplicate key '" + full + "'");
    Entry e;
    if (value.front() == '[') {
      if (value.back() != ']')
        throw std::invalid_argument("config: unterminated array at line " +
                                    std::to_string(lineno));
      e.is_array = true;
      std::string body = value.substr(1, value.size() - 2);
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) e.items.push_back(item);
      }
    } else {
      e.raw = unquote(value);
    }
    c.entries_.emplace(full, std::move(e));
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Config::Entry& Config::fetch(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw std::invalid_argument("config: missing key '" + key + "'");
  consumed_.insert(key);
  return it->second;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

double Config::number(const std::string& key) const {
  const Entry& e = fetch(key);
  if (e.is_array)
    throw std::invalid_argument("config: key '" + key + "' is an array");
  return to_number(e.raw, key);
}

double Config::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::string Config::str(const std::string& key) const {
  const Entry& e = fetch(key);
  if (e.is_array)
    throw std::invalid_argument("config: key '" + key + "' is an array");
  return e.raw;
}

std::string Config::str_or(const std::string& key,
                           const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

bool Config::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + v);
}

std::vector<double> Config::array(const std::string& key) const {
  const Entry& e = fetch(key);
  if (!e.is_array)
    throw std::invalid_argument("config: key '" + key + "' is not an array");
  std::vector<double> out;
  out.reserve(e.items.size());
  for (const std::string& item : e.items) out.push_back(to_number(item, key));
  return out;
}

std::vector<double> Config::array_or(const std::string& key,
                                     const std::vector<double>& fallback) const {
  return has(key) ? array(key) : fallback;
}

std::vector<std::string> Config::keys_under(const std::string& section) const {
  std::vector<std::string> out;
  const std::string prefix = section + ".";
  for (const auto& [k, v] : entries_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

std::map<std::string, double> Config::number_map(const std::string& section) const {
  std::map<std::string, double> out;
  for (const std::string& k : keys_under(section)) {
    if (consumed_.count(k)) continue;  // e.g. a string id read beforehand
    out.emplace(k.substr(section.size() + 1), number(k));
  }
  return out;
}

void Config::ensure_all_consumed() const {
  std::string leftovers;
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) leftovers += (leftovers.empty() ? "" : ", ") + k;
  if (!leftovers.empty())
    throw std::invalid_argument("config: unrecognized keys: " + leftovers);
}

}  // namespace driftlab
