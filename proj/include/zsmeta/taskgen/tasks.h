#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "zsmeta/gmm/divergence.h"
#include "zsmeta/gmm/mixture.h"

namespace zsmeta::taskgen {

// kRandom and kCluster are produced by the baseline constructors.
enum class TaskKind { kIntra, kInter, kHard, kRandom, kCluster };

std::string_view to_string(TaskKind kind);

struct MetaTask {
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
  TaskKind kind = TaskKind::kIntra;
  // Component k for intra / group index for baselines; (i, j) for inter and hard.
  std::vector<std::size_t> source;

  bool operator==(const MetaTask&) const = default;
};

// Throws std::invalid_argument unless support and query are non-empty,
// disjoint and inside [0, batch_size).
void validate_task(const MetaTask& task, std::size_t batch_size);

nlohmann::ordered_json to_json(const MetaTask& task);

struct TaskConfig {
  std::size_t components = 4;  // K
  std::size_t n_intra = 4;
  double cc_ratio = 0.7;
  double ht_ratio = 0.9;
  std::size_t task_size = 32;
  double support_fraction = 0.5;
  std::size_t hard_pairs = 0;  // m; 0 means min(n_hard, K(K-1)/2)
  double gmm_tol = 1e-6;
  int gmm_max_iter = 200;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t n_inter() const;
  std::size_t n_hard() const;
  // ceil(task_size * support_fraction), kept inside [1, task_size - 1]
  std::size_t support_size() const;
};

// Half-up rounding of a non-negative product.
std::size_t round_count(double value);

class ShortageError : public std::runtime_error {
 public:
  ShortageError(std::size_t component, std::size_t requested, std::size_t available);
  std::size_t component() const noexcept { return component_; }
  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t component_, requested_, available_;
};

// Weighted sampling without replacement, P(i) proportional to gamma(i, k),
// over rows with gamma(i, k) > 0 that are not excluded. Order is draw order.
std::vector<std::size_t> sample_by_responsibility(const gmm::Responsibilities& gamma, std::size_t k, std::size_t n,
                                                  std::uint64_t seed, const std::set<std::size_t>& exclude = {});

MetaTask build_intra(const gmm::Responsibilities& gamma, std::size_t k, const TaskConfig& cfg, std::uint64_t seed);
MetaTask build_inter(const gmm::Responsibilities& gamma, std::size_t i, std::size_t j, const TaskConfig& cfg,
                     std::uint64_t seed, TaskKind kind = TaskKind::kInter);

struct TaskCounts {
  std::size_t intra = 0, inter = 0, hard = 0;
  std::size_t total() const { return intra + inter + hard; }
  bool operator==(const TaskCounts&) const = default;
};

struct TaskBatch {
  std::vector<MetaTask> tasks;
  TaskCounts requested;
  TaskCounts built;
  std::vector<std::string> warnings;  // one per skipped task or fallback
  std::vector<gmm::ComponentPair> hard_pairs;
};

// Task construction from already-fitted mixture posteriors.
TaskBatch construct_tasks(const gmm::MixtureModel& model, const gmm::Responsibilities& gamma, const TaskConfig& cfg);

// Fits the mixture on embeddings (N x D) and constructs tasks.
TaskBatch construct_tasks(const Eigen::MatrixXd& embeddings, const TaskConfig& cfg);

// Seeded permutation cut into k near-equal groups, each split support/query.
TaskBatch baseline_random(std::size_t n, std::size_t k_tasks, std::uint64_t seed);

}  // namespace zsmeta::taskgen
