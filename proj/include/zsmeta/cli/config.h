#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zsmeta/cli/pipeline.h"
#include "zsmeta/dataio/synthetic.h"
#include "zsmeta/metalearn/trainer.h"

namespace zsmeta::cli {

// Unknown key, unparsable value or missing required key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::optional<std::uint64_t> seed;  // drives data generation, split and training
  std::string data;                   // price CSV; empty means gen_synthetic
  std::string out = "out";
  std::string split_file;             // reuse a split instead of computing one
  std::string checkpoint;             // eval only
  dataio::SyntheticConfig synth;
  DataOptions data_opts;
  metalearn::TrainConfig train;
  std::size_t top_n = 20;
  std::size_t mmd_samples = 2000;     // per side, before the kernel sums
  std::vector<double> cc_grid{0.0, 0.5, 1.0};
  std::vector<double> ht_grid{0.0, 0.5, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};

  // Copies `seed` into every module config that consumes one.
  void propagate_seed();
  // Module-level checks; throws std::invalid_argument.
  void validate() const;
};

// Every key in registry order.
const std::vector<std::string>& config_keys();

// Throws ConfigError naming the key.
void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const ExperimentConfig& cfg, const std::string& key);

// key=value lines; '#' starts a comment, blank lines are skipped.
std::vector<std::pair<std::string, std::string>> parse_config(std::istream& in, const std::string& source);
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

// "key=value" with the key validated.
std::pair<std::string, std::string> parse_assignment(const std::string& text);

// The fully resolved config, one key=value per line, readable by read_config.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace zsmeta::cli
