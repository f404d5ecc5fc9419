#include "zsmeta/taskgen/hierarchical.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "zsmeta/common/seed.h"

namespace zsmeta::taskgen {

std::string_view to_string(Metric metric) { return metric == Metric::kDtw ? "dtw" : "euclidean"; }

Metric parse_metric(std::string_view name) {
  if (name == "dtw") return Metric::kDtw;
  if (name == "euclidean") return Metric::kEuclidean;
  throw std::invalid_argument("unknown distance metric '" + std::string(name) + "' (expected dtw|euclidean)");
}

double dtw_distance(std::span<const double> a, std::span<const double> b, std::size_t width) {
  if (width == 0) throw std::invalid_argument("dtw_distance: width must be positive");
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw_distance: empty series");
  if (a.size() % width || b.size() % width) throw std::invalid_argument("dtw_distance: series length not a multiple of width");
  const std::size_t la = a.size() / width, lb = b.size() / width;
  auto cost = [&](std::size_t i, std::size_t j) {
    if (width == 1) return std::abs(a[i] - b[j]);
    double s = 0.0;
    for (std::size_t f = 0; f < width; ++f) {
      const double d = a[i * width + f] - b[j * width + f];
      s += d * d;
    }
    return std::sqrt(s);
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(lb + 1, inf), cur(lb + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= lb; ++j) {
      cur[j] = cost(i - 1, j - 1) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[lb];
}

std::vector<double> pairwise_distances(const diff::Tensor& batch, Metric metric) {
  if (batch.rank() != 3) throw diff::ShapeError("pairwise_distances expects an [N x L x d] batch");
  const std::size_t n = batch.dim(0), stride = batch.dim(1) * batch.dim(2), width = batch.dim(2);
  const auto data = batch.data();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = data.subspan(i * stride, stride);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = data.subspan(j * stride, stride);
      double v = 0.0;
      if (metric == Metric::kDtw) {
        v = dtw_distance(a, b, width);
      } else {
        for (std::size_t f = 0; f < stride; ++f) v += (a[f] - b[f]) * (a[f] - b[f]);
        v = std::sqrt(v);
      }
      d[i * n + j] = d[j * n + i] = v;
    }
  }
  return d;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

std::vector<std::size_t> relabel(const std::vector<std::size_t>& raw) {
  std::map<std::size_t, std::size_t> ids;
  std::vector<std::size_t> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = ids.try_emplace(raw[i], ids.size()).first->second;
  return out;
}

}  // namespace

// Nearest-neighbour chain; average linkage is reducible so the chain yields the
// same dendrogram as the naive O(n^3) closest-pair loop.
std::vector<std::size_t> average_linkage(std::span<const double> distances, std::size_t n, std::size_t k) {
  if (n == 0 || distances.size() != n * n) throw std::invalid_argument("average_linkage: distance matrix shape");
  if (k < 1 || k > n) throw std::invalid_argument("average_linkage: k outside [1, n]");
  std::vector<double> d(distances.begin(), distances.end());
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  struct Merge {
    double height;
    std::size_t a, b;
  };
  std::vector<Merge> merges;
  std::vector<std::size_t> chain;
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (active[i]) {
          chain.push_back(i);
          break;
        }
    }
    while (true) {
      const std::size_t a = chain.back();
      const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
      std::size_t best = n;
      double best_d = std::numeric_limits<double>::infinity();
      if (prev != n) {
        best = prev;
        best_d = d[a * n + prev];
      }
      for (std::size_t x = 0; x < n; ++x) {
        if (!active[x] || x == a) continue;
        if (d[a * n + x] < best_d) {
          best_d = d[a * n + x];
          best = x;
        }
      }
      if (best == prev) {
        chain.pop_back();
        chain.pop_back();
        const std::size_t keep = std::min(a, prev), drop = std::max(a, prev);
        merges.push_back({best_d, keep, drop});
        const double sk = static_cast<double>(size[keep]), sd = static_cast<double>(size[drop]);
        for (std::size_t x = 0; x < n; ++x) {
          if (!active[x] || x == keep || x == drop) continue;
          const double v = (sk * d[keep * n + x] + sd * d[drop * n + x]) / (sk + sd);
          d[keep * n + x] = d[x * n + keep] = v;
        }
        size[keep] += size[drop];
        active[drop] = false;
        --remaining;
        break;
      }
      chain.push_back(best);
    }
  }
  std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t m = 0; m < n - k; ++m) {
    const std::size_t ra = find_root(parent, merges[m].a), rb = find_root(parent, merges[m].b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::size_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = find_root(parent, i);
  return relabel(raw);
}

TaskBatch hierarchical_tasks(const diff::Tensor& batch, Metric metric, std::size_t k_tasks, std::uint64_t seed) {
  if (batch.rank() != 3) throw diff::ShapeError("hierarchical_tasks expects an [N x L x d] batch");
  const std::size_t n = batch.dim(0);
  if (k_tasks < 1) throw std::invalid_argument("k_tasks must be at least 1");
  if (n < 2 * k_tasks) {
    throw std::invalid_argument("hierarchical tasks need at least " + std::to_string(2 * k_tasks) + " samples, got " +
                                std::to_string(n));
  }
  const auto dist = pairwise_distances(batch, metric);
  if (*std::max_element(dist.begin(), dist.end()) == 0.0) {
    TaskBatch fallback = baseline_random(n, k_tasks, seed);
    fallback.warnings.push_back(std::string(to_string(metric)) +
                                " distances are all zero; fell back to random task assignment");
    return fallback;
  }
  auto labels = average_linkage(dist, n, k_tasks);
  const std::size_t clusters = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> members(clusters);
  for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);

  // Singletons join the cluster (possibly another singleton) with the smallest
  // average distance, in label order.
  for (std::size_t c = 0; c < clusters; ++c) {
    if (members[c].size() != 1) continue;
    const std::size_t row = members[c][0];
    std::size_t best = clusters;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < clusters; ++o) {
      if (o == c || members[o].empty()) continue;
      double s = 0.0;
      for (std::size_t j : members[o]) s += dist[row * n + j];
      s /= static_cast<double>(members[o].size());
      if (s < best_d) {
        best_d = s;
        best = o;
      }
    }
    members[best].push_back(row);
    members[c].clear();
  }

  TaskBatch out;
  std::size_t index = 0;
  for (auto& group : members) {
    if (group.empty()) continue;
    std::sort(group.begin(), group.end());
    std::mt19937_64 rng(derive_seed(seed, {index}));
    std::shuffle(group.begin(), group.end(), rng);
    const std::size_t ns = (group.size() + 1) / 2;
    MetaTask task;
    task.kind = TaskKind::kCluster;
    task.source = {index};
    task.support.assign(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(ns));
    task.query.assign(group.begin() + static_cast<std::ptrdiff_t>(ns), group.end());
    out.tasks.push_back(std::move(task));
    ++index;
  }
  if (out.tasks.size() < k_tasks) {
    out.warnings.push_back(std::to_string(k_tasks - out.tasks.size()) +
                           " singleton clusters merged into their nearest neighbours");
  }
  return out;
}

}  // namespace zsmeta::taskgen
