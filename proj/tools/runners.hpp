#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/config.hpp"

namespace driftlab::cli {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = ".";
  std::string format = "csv";  // csv | json
};

struct RunResult {
  bool pass = true;
  std::vector<std::string> summary;   // one line per check
  std::vector<std::string> outputs;   // files written
};

// Experiment runners; each consumes its config keys strictly and writes
// CSV/JSON outputs plus a manifest into out_dir.
RunResult run_constants(const Config& cfg, const GlobalOpts& g);
RunResult run_couple(const Config& cfg, const GlobalOpts& g);
RunResult run_perturb(const Config& cfg, const GlobalOpts& g);
RunResult run_particles(const Config& cfg, const GlobalOpts& g);
RunResult run_poincare(const Config& cfg, const GlobalOpts& g);
RunResult run_transport(const Config& cfg, const GlobalOpts& g);
RunResult run_chaos(const Config& cfg, const GlobalOpts& g);
RunResult run_meanfield(const Config& cfg, const GlobalOpts& g);
RunResult run_validate(const Config& cfg, const GlobalOpts& g);

// dispatch on [experiment] kind; writes manifest + summary; removes partial
// outputs when the experiment throws
RunResult run_config(const std::string& path, const GlobalOpts& g);

}  // namespace driftlab::cli
