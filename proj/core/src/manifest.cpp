#include "driftlab/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace driftlab {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

ManifestBuilder::ManifestBuilder(const std::string& experiment_id,
                                 std::uint64_t seed, int workers) {
  j_["experiment"] = experiment_id;
  j_["tool"] = "driftlab";
  j_["version"] = "0.1.0";
  j_["seed"] = seed;
  j_["workers"] = workers;
  j_["config_text"] = "";
  j_["resolved"] = ordered_json::object();
  j_["provenance"] = ordered_json::array();
  j_["outputs"] = ordered_json::array();
  j_["checks"] = ordered_json::array();
}

void ManifestBuilder::set_config_text(const std::string& text) {
  j_["config_text"] = text;
}

void ManifestBuilder::add_resolved(const std::string& key,
                                   const ordered_json& value) {
  j_["resolved"][key] = value;
}

void ManifestBuilder::add_provenance(const std::string& formula_id,
                                     const ordered_json& inputs,
                                     const ordered_json& value) {
  ordered_json p;
  p["formula"] = formula_id;
  p["inputs"] = inputs;
  p["value"] = value;
  j_["provenance"].push_back(p);
}

void ManifestBuilder::add_output_file(const std::string& path) {
  ordered_json o;
  o["path"] = path;
  char digest[19];
  std::snprintf(digest, sizeof(digest), "0x%016llx",
                static_cast<unsigned long long>(fnv1a64_file(path)));
  o["fnv1a64"] = digest;
  j_["outputs"].push_back(o);
}

void ManifestBuilder::add_check(const std::string& name, bool pass,
                                const ordered_json& detail) {
  ordered_json c;
  c["name"] = name;
  c["pass"] = pass;
  c["detail"] = detail;
  j_["checks"].push_back(c);
}

bool ManifestBuilder::all_checks_pass() const {
  for (const auto& c : j_["checks"])
    if (!c["pass"].get<bool>()) return false;
  return true;
}

ordered_json ManifestBuilder::finish(double wall_seconds) const {
  ordered_json out = j_;
  out["wall_seconds"] = wall_seconds;
  return out;
}

void ManifestBuilder::write(const std::string& path, double wall_seconds) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << finish(wall_seconds).dump(2) << "\n";
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : n_cols_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += columns[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != n_cols_)
    throw std::invalid_argument("CsvWriter: column count mismatch");
  char num[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    std::snprintf(num, sizeof(num), "%.12g", values[i]);
    buf_ += num;
  }
  buf_ += '\n';
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("CsvWriter: cannot write " + path);
  out << buf_;
}

}  // namespace driftlab
