#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "zsmeta/cli/config.h"
#include "zsmeta/cli/pipeline.h"
#include "zsmeta/evalkit/report.h"
#include "zsmeta/metalearn/trainer.h"

namespace zsmeta::cli {

// Prices from cfg.data, or gen_synthetic when it is empty.
dataio::RawPanel load_raw(const ExperimentConfig& cfg);

// load_raw + prepare_data, reusing cfg.split_file when set.
PreparedData load_data(const ExperimentConfig& cfg);

struct TrialResult {
  metalearn::TrainResult trained;
  evalkit::EvalReport test;  // best-validation parameters on the test split
};

TrialResult run_trial(const metalearn::TrainConfig& train, const PreparedData& data, std::size_t top_n);

// Task-mix variants of the ablation, in output order. The full variant keeps
// the configured ratios; the others zero one or both of them.
struct Variant {
  std::string name;
  double cc_ratio = 0.0;
  double ht_ratio = 0.0;
};
std::array<Variant, 4> ablation_variants(double cc_ratio, double ht_ratio);

// Each writes config.txt (the resolved echo) plus its own outputs into cfg.out.
void cmd_gen(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_eval(const ExperimentConfig& cfg);
void cmd_sweep(const ExperimentConfig& cfg);
void cmd_ablate(const ExperimentConfig& cfg);

// Whole command line: 0 success, 1 validation error, 2 runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zsmeta::cli
