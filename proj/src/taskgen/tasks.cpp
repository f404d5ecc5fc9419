#include "zsmeta/taskgen/tasks.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "zsmeta/common/seed.h"

namespace zsmeta::taskgen {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kIntra: return "intra";
    case TaskKind::kInter: return "inter";
    case TaskKind::kHard: return "hard";
    case TaskKind::kRandom: return "random";
    case TaskKind::kCluster: return "cluster";
  }
  return "?";
}

void validate_task(const MetaTask& task, std::size_t batch_size) {
  if (task.support.empty() || task.query.empty()) throw std::invalid_argument("task has an empty support or query set");
  std::set<std::size_t> seen;
  for (auto i : task.support) {
    if (i >= batch_size) throw std::invalid_argument("support index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw std::invalid_argument("duplicate support index " + std::to_string(i));
  }
  for (auto i : task.query) {
    if (i >= batch_size) throw std::invalid_argument("query index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw std::invalid_argument("index " + std::to_string(i) + " in support and query");
  }
}

nlohmann::ordered_json to_json(const MetaTask& task) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(task.kind));
  j["source"] = task.source;
  j["support"] = task.support;
  j["query"] = task.query;
  return j;
}

std::size_t round_count(double value) { return static_cast<std::size_t>(std::floor(value + 0.5 + 1e-9)); }

void TaskConfig::validate() const {
  if (components < 1) throw std::invalid_argument("K must be at least 1");
  if (n_intra < 1) throw std::invalid_argument("n_intra must be at least 1");
  if (!(cc_ratio >= 0.0 && cc_ratio <= 1.0)) throw std::invalid_argument("cc_ratio must lie in [0, 1]");
  if (!(ht_ratio >= 0.0 && ht_ratio <= 1.0)) throw std::invalid_argument("ht_ratio must lie in [0, 1]");
  if (task_size < 2) throw std::invalid_argument("task_size must be at least 2");
  if (!(support_fraction > 0.0 && support_fraction < 1.0)) {
    throw std::invalid_argument("support_fraction must lie in (0, 1)");
  }
  if (gmm_max_iter < 1) throw std::invalid_argument("gmm_max_iter must be positive");
}

std::size_t TaskConfig::n_inter() const { return round_count(static_cast<double>(n_intra) * cc_ratio); }
std::size_t TaskConfig::n_hard() const { return round_count(static_cast<double>(n_intra) * ht_ratio); }

std::size_t TaskConfig::support_size() const {
  const auto s = static_cast<std::size_t>(std::ceil(static_cast<double>(task_size) * support_fraction - 1e-12));
  return std::clamp<std::size_t>(s, 1, task_size - 1);
}

ShortageError::ShortageError(std::size_t component, std::size_t requested, std::size_t available)
    : std::runtime_error("component " + std::to_string(component) + ": requested " + std::to_string(requested) +
                         " samples, only " + std::to_string(available) + " eligible"),
      component_(component),
      requested_(requested),
      available_(available) {}

std::vector<std::size_t> sample_by_responsibility(const gmm::Responsibilities& gamma, std::size_t k, std::size_t n,
                                                  std::uint64_t seed, const std::set<std::size_t>& exclude) {
  if (k >= static_cast<std::size_t>(gamma.cols())) {
    throw std::invalid_argument("component " + std::to_string(k) + " out of range");
  }
  std::mt19937_64 rng(seed);
  // Efraimidis-Spirakis: keep the n largest log(u) / w.
  std::vector<std::pair<double, std::size_t>> keys;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    const double w = gamma(i, static_cast<Eigen::Index>(k));
    const auto idx = static_cast<std::size_t>(i);
    if (!(w > 0.0) || exclude.count(idx)) continue;
    const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    keys.emplace_back(std::log(u) / w, idx);
  }
  if (n > keys.size()) throw ShortageError(k, n, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.push_back(keys[t].second);
  return out;
}

MetaTask build_intra(const gmm::Responsibilities& gamma, std::size_t k, const TaskConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  auto drawn = sample_by_responsibility(gamma, k, cfg.task_size, seed);
  const std::size_t ns = cfg.support_size();
  MetaTask task;
  task.kind = TaskKind::kIntra;
  task.source = {k};
  task.support.assign(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(ns));
  task.query.assign(drawn.begin() + static_cast<std::ptrdiff_t>(ns), drawn.end());
  return task;
}

MetaTask build_inter(const gmm::Responsibilities& gamma, std::size_t i, std::size_t j, const TaskConfig& cfg,
                     std::uint64_t seed, TaskKind kind) {
  cfg.validate();
  if (i == j) throw std::invalid_argument("inter-cluster task needs two distinct components, got " + std::to_string(i) + " twice");
  const std::size_t ns = cfg.support_size();
  MetaTask task;
  task.kind = kind;
  task.source = {i, j};
  task.support = sample_by_responsibility(gamma, i, ns, derive_seed(seed, {0}));
  const std::set<std::size_t> used(task.support.begin(), task.support.end());
  task.query = sample_by_responsibility(gamma, j, cfg.task_size - ns, derive_seed(seed, {1}), used);
  return task;
}

TaskBatch construct_tasks(const gmm::MixtureModel& model, const gmm::Responsibilities& gamma, const TaskConfig& cfg) {
  cfg.validate();
  const std::size_t k = model.size();
  if (static_cast<std::size_t>(gamma.cols()) != k) {
    throw std::invalid_argument("responsibilities have " + std::to_string(gamma.cols()) + " columns for " +
                                std::to_string(k) + " components");
  }
  TaskBatch batch;
  batch.requested = {cfg.n_intra, cfg.n_inter(), cfg.n_hard()};

  auto skip = [&](std::string_view what, std::size_t t, const std::exception& e) {
    batch.warnings.push_back(std::string(what) + " task " + std::to_string(t) + " skipped: " + e.what());
  };

  for (std::size_t t = 0; t < batch.requested.intra; ++t) {
    try {
      batch.tasks.push_back(build_intra(gamma, t % k, cfg, derive_seed(cfg.seed, {1, t})));
      ++batch.built.intra;
    } catch (const ShortageError& e) {
      skip("intra", t, e);
    }
  }

  if (k < 2) {
    if (batch.requested.inter + batch.requested.hard > 0) {
      batch.warnings.push_back("inter and hard tasks skipped: a single component has no pairs");
    }
  } else {
    for (std::size_t t = 0; t < batch.requested.inter; ++t) {
      std::mt19937_64 rng(derive_seed(cfg.seed, {2, t}));
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
      std::size_t j = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
      if (j >= i) ++j;
      try {
        batch.tasks.push_back(build_inter(gamma, i, j, cfg, derive_seed(cfg.seed, {3, t})));
        ++batch.built.inter;
      } catch (const ShortageError& e) {
        skip("inter", t, e);
      }
    }
    if (batch.requested.hard > 0) {
      const std::size_t m = cfg.hard_pairs ? cfg.hard_pairs : std::min(batch.requested.hard, k * (k - 1) / 2);
      batch.hard_pairs = gmm::most_dissimilar_pairs(model, m);
      for (std::size_t t = 0; t < batch.requested.hard; ++t) {
        const auto& p = batch.hard_pairs[t % m];
        try {
          batch.tasks.push_back(build_inter(gamma, p.first, p.second, cfg, derive_seed(cfg.seed, {4, t}), TaskKind::kHard));
          ++batch.built.hard;
        } catch (const ShortageError& e) {
          skip("hard", t, e);
        }
      }
    }
  }
  if (batch.tasks.empty()) {
    throw std::runtime_error("no meta-task could be constructed (" + std::to_string(batch.warnings.size()) +
                             " shortages)");
  }
  return batch;
}

TaskBatch construct_tasks(const Eigen::MatrixXd& embeddings, const TaskConfig& cfg) {
  cfg.validate();
  if (cfg.components > static_cast<std::size_t>(embeddings.rows())) {
    throw std::invalid_argument("K=" + std::to_string(cfg.components) + " exceeds batch size " +
                                std::to_string(embeddings.rows()));
  }
  const auto fitted = gmm::fit(embeddings, {cfg.components, cfg.gmm_tol, cfg.gmm_max_iter, derive_seed(cfg.seed, {0})});
  return construct_tasks(fitted.model, fitted.gamma, cfg);
}

TaskBatch baseline_random(std::size_t n, std::size_t k_tasks, std::uint64_t seed) {
  if (k_tasks < 1) throw std::invalid_argument("k_tasks must be at least 1");
  if (n < 2 * k_tasks) {
    throw std::invalid_argument("random tasks need at least " + std::to_string(2 * k_tasks) + " samples, got " +
                                std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  TaskBatch batch;
  for (std::size_t g = 0; g < k_tasks; ++g) {
    const std::size_t lo = g * n / k_tasks, hi = (g + 1) * n / k_tasks;
    const std::size_t ns = (hi - lo + 1) / 2;
    MetaTask task;
    task.kind = TaskKind::kRandom;
    task.source = {g};
    task.support.assign(perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(lo + ns));
    task.query.assign(perm.begin() + static_cast<std::ptrdiff_t>(lo + ns), perm.begin() + static_cast<std::ptrdiff_t>(hi));
    batch.tasks.push_back(std::move(task));
  }
  return batch;
}

}  // namespace zsmeta::taskgen
