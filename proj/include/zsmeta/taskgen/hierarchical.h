#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "zsmeta/diffcore/tensor.h"
#include "zsmeta/taskgen/tasks.h"

namespace zsmeta::taskgen {

enum class Metric { kDtw, kEuclidean };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

// Unconstrained DTW between series of `width`-dimensional steps (row-major).
// Per-step cost is |a - b| for width 1 and the Euclidean norm otherwise.
double dtw_distance(std::span<const double> a, std::span<const double> b, std::size_t width = 1);

// Row-major N x N distances between the windows of an [N x L x d] batch.
std::vector<double> pairwise_distances(const diff::Tensor& batch, Metric metric);

// Average-linkage agglomerative clustering cut at k clusters. Returns a
// cluster label per row, labels numbered by first appearance.
std::vector<std::size_t> average_linkage(std::span<const double> distances, std::size_t n, std::size_t k);

// Baseline tasks from hierarchical clusters of the raw windows. Singleton
// clusters join their nearest cluster; all-zero distances fall back to
// baseline_random with a warning.
TaskBatch hierarchical_tasks(const diff::Tensor& batch, Metric metric, std::size_t k_tasks, std::uint64_t seed);

}  // namespace zsmeta::taskgen
