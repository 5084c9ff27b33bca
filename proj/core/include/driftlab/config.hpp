#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace driftlab {

// Strict key/table config: [section] headers, key = value lines, '#' comments.
// Values are numbers (scientific notation accepted), booleans, quoted or bare
// strings, or arrays [a, b, c]. Every key must be consumed by the experiment
// that runs the file; leftovers abort (typos in bound parameters must not
// pass silently).
class Config {
 public:
  static Config parse(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::vector<double> array(const std::string& key) const;
  std::vector<double> array_or(const std::string& key,
                               const std::vector<double>& fallback) const;

  // all keys under "section." (consumes nothing)
  std::vector<std::string> keys_under(const std::string& section) const;
  // numeric parameter map of a section, consuming the keys
  std::map<std::string, double> number_map(const std::string& section) const;

  void ensure_all_consumed() const;  // throws listing unconsumed keys
  const std::string& text() const { return text_; }

 private:
  struct Entry {
    std::string raw;
    bool is_array = false;
    std::vector<std::string> items;
  };
  const Entry& fetch(const std::string& key) const;

  std::string text_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> consumed_;
};

}  // namespace driftlab
