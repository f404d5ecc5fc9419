#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zsmeta/dataio/windows.h"
#include "zsmeta/encoders/params.h"
#include "zsmeta/evalkit/metrics.h"
#include "zsmeta/metalearn/maml.h"
#include "zsmeta/taskgen/hierarchical.h"
#include "zsmeta/taskgen/tasks.h"

namespace zsmeta::metalearn {

// kPretrain is plain mini-batch descent: one task per batch whose query is
// the whole batch, no inner adaptation.
enum class TaskSource { kProposed, kRandom, kDtw, kEuclidean, kPretrain };

std::string_view to_string(TaskSource source);
TaskSource parse_task_source(std::string_view name);

struct TrainConfig {
  MetaConfig meta;
  taskgen::TaskConfig tasks;
  TaskSource source = TaskSource::kProposed;
  enc::Arch arch = enc::Arch::kGru;
  std::size_t embed_dim = 32;
  std::size_t baseline_tasks = 0;  // 0: as many as the proposed constructor requests
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t baseline_task_count() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double meta_loss = 0.0;              // mean over batches of the mean query loss
  std::optional<double> val_ic;        // nullopt when no validation day is usable
  std::size_t batches = 0, batches_skipped = 0;
  std::size_t tasks_intra = 0, tasks_inter = 0, tasks_hard = 0, tasks_baseline = 0;
  std::size_t tasks_aborted = 0, task_warnings = 0;
  double seconds = 0.0;                // wall clock; kept out of the history JSON
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_ic;
  bool stopped_early = false;
};

// History without wall-clock fields, so reruns compare byte for byte.
nlohmann::ordered_json to_json(const TrainHistory& history);
nlohmann::ordered_json timing_json(const TrainHistory& history);

struct TrainResult {
  enc::ParamSet params;  // best validation epoch
  TrainHistory history;
};

// Predictions (first horizon step) against realized next-period returns,
// keyed by the window's last date.
evalkit::PredictionPanel predict_panel(const enc::ParamSet& params, const dataio::WindowSet& windows,
                                       std::size_t chunk = 2048);

// Mean daily IC of predict_panel; nullopt when no day is usable.
std::optional<double> validation_ic(const enc::ParamSet& params, const dataio::WindowSet& windows);

// Tasks for one batch under the configured source. Index space is the batch.
taskgen::TaskBatch batch_tasks(const TrainConfig& cfg, const enc::ParamSet& params, const Tensor& inputs,
                               std::uint64_t seed);

TrainResult train(const dataio::WindowSet& train_set, const dataio::WindowSet& val_set, const TrainConfig& cfg);

// train() with the source forced to kPretrain and inner_steps to 0.
TrainResult pretrain_baseline(const dataio::WindowSet& train_set, const dataio::WindowSet& val_set, TrainConfig cfg);

}  // namespace zsmeta::metalearn
