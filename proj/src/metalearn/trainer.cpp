#include "zsmeta/metalearn/trainer.h"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "zsmeta/common/seed.h"
#include "zsmeta/encoders/recurrent.h"
#include "zsmeta/gmm/mixture.h"

namespace zsmeta::metalearn {

std::string_view to_string(TaskSource source) {
  switch (source) {
    case TaskSource::kProposed: return "proposed";
    case TaskSource::kRandom: return "random";
    case TaskSource::kDtw: return "dtw";
    case TaskSource::kEuclidean: return "euclidean";
    case TaskSource::kPretrain: return "pretrain";
  }
  return "?";
}

TaskSource parse_task_source(std::string_view name) {
  for (auto s : {TaskSource::kProposed, TaskSource::kRandom, TaskSource::kDtw, TaskSource::kEuclidean,
                 TaskSource::kPretrain})
    if (name == to_string(s)) return s;
  throw std::invalid_argument("unknown task_source '" + std::string(name) +
                              "' (expected proposed, random, dtw, euclidean or pretrain)");
}

void TrainConfig::validate() const {
  meta.validate();
  tasks.validate();
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be at least 1");
  if (source == TaskSource::kProposed && meta.batch_size < tasks.task_size) {
    throw std::invalid_argument("batch_size must be at least task_size");
  }
  if ((source == TaskSource::kRandom || source == TaskSource::kDtw || source == TaskSource::kEuclidean) &&
      meta.batch_size < 2 * baseline_task_count()) {
    throw std::invalid_argument("batch_size must be at least twice the baseline task count");
  }
}

std::size_t TrainConfig::baseline_task_count() const {
  if (baseline_tasks > 0) return baseline_tasks;
  return std::max<std::size_t>(1, tasks.n_intra + tasks.n_inter() + tasks.n_hard());
}

nlohmann::ordered_json to_json(const TrainHistory& h) {
  nlohmann::ordered_json j;
  auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"meta_loss", e.meta_loss},
                      {"val_ic", e.val_ic ? nlohmann::ordered_json(*e.val_ic) : nullptr},
                      {"batches", e.batches},
                      {"batches_skipped", e.batches_skipped},
                      {"tasks",
                       {{"intra", e.tasks_intra},
                        {"inter", e.tasks_inter},
                        {"hard", e.tasks_hard},
                        {"baseline", e.tasks_baseline},
                        {"aborted", e.tasks_aborted},
                        {"warnings", e.task_warnings}}}});
  }
  j["best_epoch"] = h.best_epoch;
  j["best_val_ic"] = h.best_val_ic ? nlohmann::ordered_json(*h.best_val_ic) : nullptr;
  j["stopped_early"] = h.stopped_early;
  return j;
}

nlohmann::ordered_json timing_json(const TrainHistory& h) {
  nlohmann::ordered_json j;
  double total = 0.0;
  auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"seconds", e.seconds}});
    total += e.seconds;
  }
  j["total_seconds"] = total;
  return j;
}

evalkit::PredictionPanel predict_panel(const enc::ParamSet& params, const dataio::WindowSet& windows,
                                       std::size_t chunk) {
  evalkit::PredictionPanel panel;
  panel.rows.reserve(windows.size());
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
    const std::size_t end = std::min(windows.size(), begin + chunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Tensor out = enc::forecast(params, windows.inputs(idx));
    const std::size_t h = out.dim(1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& s = windows.samples[idx[k]];
      panel.rows.push_back({s.end_date, s.ticker, out[k * h], s.realized});
    }
  }
  return panel;
}

std::optional<double> validation_ic(const enc::ParamSet& params, const dataio::WindowSet& windows) {
  const auto series = evalkit::ic_series(predict_panel(params, windows), false);
  if (series.values.empty()) return std::nullopt;
  return evalkit::stable_mean(series.values);
}

taskgen::TaskBatch batch_tasks(const TrainConfig& cfg, const enc::ParamSet& params, const Tensor& inputs,
                               std::uint64_t seed) {
  const std::size_t n = inputs.dim(0);
  switch (cfg.source) {
    case TaskSource::kProposed: {
      const Tensor e = enc::embed(params, inputs);
      taskgen::TaskConfig tc = cfg.tasks;
      tc.seed = seed;
      return taskgen::construct_tasks(gmm::rows_to_matrix(e.data().data(), e.dim(0), e.dim(1)), tc);
    }
    case TaskSource::kRandom:
      return taskgen::baseline_random(n, cfg.baseline_task_count(), seed);
    case TaskSource::kDtw:
      return taskgen::hierarchical_tasks(inputs, taskgen::Metric::kDtw, cfg.baseline_task_count(), seed);
    case TaskSource::kEuclidean:
      return taskgen::hierarchical_tasks(inputs, taskgen::Metric::kEuclidean, cfg.baseline_task_count(), seed);
    case TaskSource::kPretrain: {
      taskgen::TaskBatch batch;
      taskgen::MetaTask all;
      all.kind = taskgen::TaskKind::kRandom;
      all.source = {0};
      all.query.resize(n);
      std::iota(all.query.begin(), all.query.end(), 0);
      batch.tasks.push_back(std::move(all));
      return batch;
    }
  }
  throw std::logic_error("batch_tasks: unknown source");
}

TrainResult train(const dataio::WindowSet& train_set, const dataio::WindowSet& val_set, const TrainConfig& config) {
  TrainConfig cfg = config;
  if (cfg.source == TaskSource::kPretrain) cfg.meta.inner_steps = 0;
  cfg.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training split");
  if (val_set.size() == 0) throw std::invalid_argument("train: empty validation split");
  const enc::Dims dims{train_set.features, cfg.embed_dim, train_set.horizon};
  if (val_set.features != dims.input || val_set.horizon != dims.horizon || val_set.length != train_set.length) {
    throw std::invalid_argument("train: train and validation windows differ in shape");
  }

  enc::ParamSet params = enc::init_params(cfg.arch, dims, derive_seed(cfg.seed, {10}));
  TrainResult result{params, {}};
  auto& hist = result.history;
  std::size_t stale = 0;
  bool improved_once = false;

  const std::size_t n = train_set.size(), bs = cfg.meta.batch_size;
  const std::size_t n_batches = std::max<std::size_t>(1, n / bs);  // the remainder is dropped
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= cfg.meta.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(cfg.seed, {20, epoch}));
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::span<const std::size_t> rows(order.data() + b * bs, std::min(bs, n - b * bs));
      if (rows.size() < 2) throw MetaError("train: batch " + std::to_string(b) + " has fewer than two samples");
      const Samples samples{train_set.inputs(rows), train_set.targets(rows)};

      taskgen::TaskBatch tasks;
      try {
        tasks = batch_tasks(cfg, params, samples.inputs, derive_seed(cfg.seed, {30, epoch, b}));
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::runtime_error&) {
        // mixture fit or task construction failed on this batch
        ++rec.batches_skipped;
        continue;
      }
      rec.task_warnings += tasks.warnings.size();
      try {
        auto step = meta_step(params, tasks.tasks, samples, cfg.meta);
        params = std::move(step.params);
        loss_sum += step.stats.mean_query_loss;
        rec.tasks_aborted += step.stats.tasks_aborted;
      } catch (const MetaError&) {
        ++rec.batches_skipped;
        rec.tasks_aborted += tasks.tasks.size();
        continue;
      }
      ++rec.batches;
      for (const auto& t : tasks.tasks) {
        switch (t.kind) {
          case taskgen::TaskKind::kIntra: ++rec.tasks_intra; break;
          case taskgen::TaskKind::kInter: ++rec.tasks_inter; break;
          case taskgen::TaskKind::kHard: ++rec.tasks_hard; break;
          default: ++rec.tasks_baseline; break;
        }
      }
    }
    if (rec.batches == 0) {
      throw MetaError("train: every batch of epoch " + std::to_string(epoch) + " failed");
    }
    rec.meta_loss = loss_sum / static_cast<double>(rec.batches);
    rec.val_ic = validation_ic(params, val_set);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    hist.epochs.push_back(rec);

    if (rec.val_ic && (!hist.best_val_ic || *rec.val_ic > *hist.best_val_ic)) {
      hist.best_val_ic = rec.val_ic;
      hist.best_epoch = epoch;
      result.params = params;
      improved_once = true;
      stale = 0;
    } else if (++stale > cfg.meta.patience) {
      hist.stopped_early = epoch < cfg.meta.epochs;
      break;
    }
  }
  if (!improved_once) {
    result.params = params;
    hist.best_epoch = hist.epochs.back().epoch;
  }
  return result;
}

TrainResult pretrain_baseline(const dataio::WindowSet& train_set, const dataio::WindowSet& val_set, TrainConfig cfg) {
  cfg.source = TaskSource::kPretrain;
  cfg.meta.inner_steps = 0;
  return train(train_set, val_set, cfg);
}

}  // namespace zsmeta::metalearn
