#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace driftlab {

using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);

// Run record: resolved config, seed, outputs with digests, formula provenance.
// Re-running the recorded config with the recorded seed reproduces every
// output digest (aggregation order is fixed everywhere).
class ManifestBuilder {
 public:
  ManifestBuilder(const std::string& experiment_id, std::uint64_t seed,
                  int workers);

  void set_config_text(const std::string& text);
  void add_resolved(const std::string& key, const ordered_json& value);
  void add_provenance(const std::string& formula_id, const ordered_json& inputs,
                      const ordered_json& value);
  void add_output_file(const std::string& path);
  void add_check(const std::string& name, bool pass, const ordered_json& detail);
  bool all_checks_pass() const;

  ordered_json finish(double wall_seconds) const;
  void write(const std::string& path, double wall_seconds) const;

 private:
  ordered_json j_;
};

// CSV writing with fixed formatting: header row, comma separated, '.' decimal.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void row(const std::vector<double>& values);
  const std::string& str() const { return buf_; }
  void write(const std::string& path) const;

 private:
  std::size_t n_cols_;
  std::string buf_;
};

}  // namespace driftlab
