#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "zsmeta/taskgen/hierarchical.h"
#include "zsmeta/taskgen/tasks.h"

using namespace zsmeta;
using namespace zsmeta::taskgen;
using Eigen::MatrixXd;

namespace {

MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t k) {
  MatrixXd g = MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  return g;
}

MatrixXd soft(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  MatrixXd g(n, k);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = u(rng);
    g.row(i) /= g.row(i).sum();
  }
  return g;
}

TaskConfig small_cfg() {
  TaskConfig cfg;
  cfg.components = 3;
  cfg.n_intra = 3;
  cfg.task_size = 4;
  cfg.seed = 11;
  return cfg;
}

// Naive O(n^3) closest-pair average linkage; labels by first appearance.
std::vector<std::size_t> naive_average_linkage(const std::vector<double>& d, std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  auto link = [&](const auto& a, const auto& b) {
    double s = 0.0;
    for (auto i : a)
      for (auto j : b) s += d[i * n + j];
    return s / static_cast<double>(a.size() * b.size());
  };
  while (clusters.size() > k) {
    std::size_t bi = 0, bj = 1;
    double best = link(clusters[0], clusters[1]);
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double v = link(clusters[i], clusters[j]);
        if (v < best) best = v, bi = i, bj = j;
      }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::vector<std::size_t> raw(n);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (auto i : clusters[c]) raw[i] = *std::min_element(clusters[c].begin(), clusters[c].end());
  std::map<std::size_t, std::size_t> ids;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ids.try_emplace(raw[i], ids.size()).first->second;
  return out;
}

diff::Tensor blob_batch(std::size_t per_group, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<double> v;
  for (std::size_t i = 0; i < 2 * per_group; ++i) {
    const double base = i < per_group ? 0.0 : 5.0;
    for (int t = 0; t < 3; ++t) v.push_back(base + g(rng));
  }
  return diff::Tensor({2 * per_group, 3, 1}, v);
}

}  // namespace

TEST_CASE("task config arithmetic") {
  TaskConfig cfg;
  cfg.n_intra = 4;
  CHECK(cfg.n_inter() == 3);  // round(2.8)
  CHECK(cfg.n_hard() == 4);   // round(3.6)
  cfg.cc_ratio = 0.5;
  cfg.n_intra = 3;
  CHECK(cfg.n_inter() == 2);  // 1.5 rounds half-up
  cfg.task_size = 3;
  CHECK(cfg.support_size() == 2);
  cfg.task_size = 4;
  CHECK(cfg.support_size() == 2);
  cfg.task_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.task_size = 4;
  cfg.cc_ratio = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sample_by_responsibility") {
  SUBCASE("one-hot restricts draws") {
    const auto g = one_hot({0, 1, 0, 1, 0, 2}, 3);
    for (std::uint64_t s = 0; s < 50; ++s) {
      for (auto i : sample_by_responsibility(g, 0, 2, s)) CHECK((i == 0 || i == 2 || i == 4));
    }
  }
  SUBCASE("all eligible returns the eligible set") {
    const auto g = one_hot({0, 1, 0, 1, 0, 2}, 3);
    auto s = sample_by_responsibility(g, 0, 3, 7);
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<std::size_t>{0, 2, 4});
  }
  SUBCASE("exclusions and shortage") {
    const auto g = one_hot({0, 1, 0, 1, 0, 2}, 3);
    CHECK(sample_by_responsibility(g, 0, 2, 7, {0}) != std::vector<std::size_t>{});
    for (auto i : sample_by_responsibility(g, 0, 2, 7, {0})) CHECK(i != 0);
    try {
      sample_by_responsibility(g, 2, 2, 1);
      FAIL("expected shortage");
    } catch (const ShortageError& e) {
      CHECK(e.component() == 2);
      CHECK(e.requested() == 2);
      CHECK(e.available() == 1);
    }
  }
  SUBCASE("uniform pairs are uniform") {
    const MatrixXd g = MatrixXd::Constant(4, 1, 1.0);
    std::map<std::pair<std::size_t, std::size_t>, int> freq;
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
      auto d = sample_by_responsibility(g, 0, 2, static_cast<std::uint64_t>(s) * 7919 + 1);
      freq[{std::min(d[0], d[1]), std::max(d[0], d[1])}]++;
    }
    CHECK(freq.size() == 6);
    const double p = 1.0 / 6.0, sigma = std::sqrt(trials * p * (1 - p));
    for (const auto& [pair, count] : freq) CHECK(std::abs(count - trials * p) < 3.0 * sigma);
  }
  SUBCASE("deterministic per seed") {
    std::mt19937_64 rng(3);
    const auto g = soft(40, 3, rng);
    CHECK(sample_by_responsibility(g, 1, 10, 5) == sample_by_responsibility(g, 1, 10, 5));
    CHECK(sample_by_responsibility(g, 1, 10, 5) != sample_by_responsibility(g, 1, 10, 6));
  }
}

TEST_CASE("build_intra and build_inter") {
  const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1};
  const auto g = one_hot(labels, 3);
  auto cfg = small_cfg();

  const auto intra = build_intra(g, 1, cfg, 3);
  CHECK(intra.support.size() == 2);
  CHECK(intra.query.size() == 2);
  validate_task(intra, labels.size());
  for (auto i : intra.support) CHECK(labels[i] == 1);
  for (auto i : intra.query) CHECK(labels[i] == 1);
  CHECK(intra.kind == TaskKind::kIntra);

  cfg.task_size = 3;
  const auto odd = build_intra(g, 0, cfg, 3);
  CHECK(odd.support.size() == 2);
  CHECK(odd.query.size() == 1);

  cfg.task_size = 4;
  const auto inter = build_inter(g, 0, 2, cfg, 9);
  validate_task(inter, labels.size());
  for (auto i : inter.support) CHECK(labels[i] == 0);
  for (auto i : inter.query) CHECK(labels[i] == 2);
  CHECK(inter.source == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(build_inter(g, 1, 1, cfg, 9), std::invalid_argument);

  std::mt19937_64 rng(1);
  const auto sg = soft(30, 3, rng);
  CHECK(build_inter(sg, 0, 1, cfg, 4) == build_inter(sg, 0, 1, cfg, 4));
  validate_task(build_inter(sg, 0, 1, cfg, 4), 30);
}

TEST_CASE("construct_tasks counts and invariants") {
  std::mt19937_64 rng(2);
  TaskConfig cfg;
  cfg.components = 4;
  cfg.n_intra = 4;
  cfg.task_size = 8;
  cfg.seed = 21;
  const auto g = soft(128, 4, rng);
  gmm::MixtureModel model;
  for (int k = 0; k < 4; ++k) {
    model.components.push_back({0.25, Eigen::VectorXd::Constant(1, k * k), Eigen::MatrixXd::Identity(1, 1)});
  }
  const auto batch = construct_tasks(model, g, cfg);
  CHECK(batch.requested == TaskCounts{4, 3, 4});
  CHECK(batch.built == TaskCounts{4, 3, 4});
  CHECK(batch.tasks.size() == 11);
  CHECK(batch.warnings.empty());
  for (const auto& t : batch.tasks) validate_task(t, 128);

  // hard pairs are a prefix of the ranked list
  const auto ranked = gmm::most_dissimilar_pairs(model, 6);
  CHECK(batch.hard_pairs.size() == 4);
  for (std::size_t i = 0; i < batch.hard_pairs.size(); ++i) CHECK(batch.hard_pairs[i] == ranked[i]);
  std::size_t h = 0;
  for (const auto& t : batch.tasks) {
    if (t.kind != TaskKind::kHard) continue;
    const auto& p = batch.hard_pairs[h++ % batch.hard_pairs.size()];
    CHECK(t.source == std::vector<std::size_t>{p.first, p.second});
  }
  CHECK(construct_tasks(model, g, cfg).tasks == batch.tasks);

  cfg.cc_ratio = cfg.ht_ratio = 0.0;
  const auto only_intra = construct_tasks(model, g, cfg);
  CHECK(only_intra.tasks.size() == 4);
  for (const auto& t : only_intra.tasks) CHECK(t.kind == TaskKind::kIntra);
}

TEST_CASE("construct_tasks reports shortages instead of failing") {
  // component 2 owns only 3 points; task_size 4 cannot be met
  std::vector<std::size_t> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i < 3 ? 2 : i % 2);
  const auto g = one_hot(labels, 3);
  gmm::MixtureModel model;
  for (int k = 0; k < 3; ++k) model.components.push_back({1.0 / 3, Eigen::VectorXd::Constant(1, k), Eigen::MatrixXd::Identity(1, 1)});
  model.components[2].weight = 1.0 - 2.0 / 3;
  auto cfg = small_cfg();
  cfg.ht_ratio = 0.0;
  cfg.cc_ratio = 0.0;
  const auto batch = construct_tasks(model, g, cfg);
  CHECK(batch.built.intra == 2);
  CHECK(batch.warnings.size() == 1);

  const auto empty_g = one_hot(std::vector<std::size_t>(3, 2), 3);
  CHECK_THROWS_AS(construct_tasks(model, empty_g, cfg), std::runtime_error);
}

TEST_CASE("construct_tasks from embeddings") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  MatrixXd h(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) h(i, j) = n01(rng) + 4.0 * static_cast<double>(i % 4 == j);
  TaskConfig cfg;
  cfg.task_size = 16;
  cfg.seed = 3;
  const auto a = construct_tasks(h, cfg);
  const auto b = construct_tasks(h, cfg);
  CHECK(a.tasks == b.tasks);
  CHECK(a.built == TaskCounts{4, 3, 4});
  for (const auto& t : a.tasks) validate_task(t, 200);
  cfg.components = 300;
  CHECK_THROWS_AS(construct_tasks(h, cfg), std::invalid_argument);
}

TEST_CASE("baseline_random") {
  const auto b = baseline_random(8, 2, 5);
  REQUIRE(b.tasks.size() == 2);
  std::multiset<std::size_t> all;
  for (const auto& t : b.tasks) {
    CHECK(t.support.size() == 2);
    CHECK(t.query.size() == 2);
    validate_task(t, 8);
    all.insert(t.support.begin(), t.support.end());
    all.insert(t.query.begin(), t.query.end());
  }
  CHECK(all == std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(baseline_random(8, 2, 5).tasks == b.tasks);
  CHECK(baseline_random(8, 2, 6).tasks != b.tasks);
  CHECK_THROWS_AS(baseline_random(3, 2, 1), std::invalid_argument);
  const auto odd = baseline_random(11, 3, 1);
  std::size_t total = 0;
  for (const auto& t : odd.tasks) total += t.support.size() + t.query.size();
  CHECK(total == 11);
}

TEST_CASE("dtw_distance") {
  const std::vector<double> a{0, 0, 0}, b{1, 1, 1}, c{0, 1, 2, 3};
  CHECK(dtw_distance(a, a) == 0.0);
  CHECK(dtw_distance(a, b) == 3.0);
  CHECK(dtw_distance(a, c) == dtw_distance(c, a));
  // 0-0, 0-1, 0-2, 0-3 along the last row of a: 0 + 1 + 2 + 3
  CHECK(dtw_distance(a, c) == 6.0);
  // warping absorbs a repeated element
  CHECK(dtw_distance(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 2, 3}) == 0.0);
  // multivariate: per-step Euclidean
  CHECK(dtw_distance(std::vector<double>{0, 0}, std::vector<double>{3, 4}, 2) == 5.0);
  CHECK_THROWS_AS(dtw_distance(std::vector<double>{}, a), std::invalid_argument);
  CHECK_THROWS_AS(dtw_distance(std::vector<double>{1, 2, 3}, a, 2), std::invalid_argument);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(3 + t % 4), y(2 + t % 5);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    CHECK(dtw_distance(x, y) == dtw_distance(y, x));
    CHECK(dtw_distance(x, y) >= 0.0);
  }
}

TEST_CASE("average_linkage matches the naive closest-pair loop") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + trial % 20, k = 1 + trial % 5;
    std::vector<double> pts(n * 2);
    for (auto& v : pts) v = g(rng);
    std::vector<double> d(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::hypot(pts[2 * i] - pts[2 * j], pts[2 * i + 1] - pts[2 * j + 1]);
    CHECK(average_linkage(d, n, std::min(k, n)) == naive_average_linkage(d, n, std::min(k, n)));
  }
}

TEST_CASE("hierarchical_tasks") {
  std::mt19937_64 rng(7);
  SUBCASE("two obvious groups") {
    for (Metric metric : {Metric::kDtw, Metric::kEuclidean}) {
      const auto batch = blob_batch(10, rng);
      const auto tasks = hierarchical_tasks(batch, metric, 2, 3);
      REQUIRE(tasks.tasks.size() == 2);
      for (const auto& t : tasks.tasks) {
        validate_task(t, 20);
        std::set<bool> sides;
        for (auto i : t.support) sides.insert(i < 10);
        for (auto i : t.query) sides.insert(i < 10);
        CHECK(sides.size() == 1);
        CHECK(t.support.size() == 5);
      }
      CHECK(hierarchical_tasks(batch, metric, 2, 3).tasks == tasks.tasks);
    }
  }
  SUBCASE("k=1 covers the batch") {
    const auto batch = blob_batch(5, rng);
    const auto tasks = hierarchical_tasks(batch, Metric::kEuclidean, 1, 3);
    REQUIRE(tasks.tasks.size() == 1);
    CHECK(tasks.tasks[0].support.size() == 5);
    CHECK(tasks.tasks[0].query.size() == 5);
  }
  SUBCASE("identical points fall back to random") {
    const diff::Tensor same = diff::Tensor::full({6, 3, 1}, 1.0);
    const auto tasks = hierarchical_tasks(same, Metric::kEuclidean, 2, 3);
    CHECK(tasks.warnings.size() == 1);
    CHECK(tasks.tasks == baseline_random(6, 2, 3).tasks);
  }
  SUBCASE("singletons are merged") {
    std::vector<double> v{0, 0, 0, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2, 0.3, 0.3, 0.3, 50, 50, 50, 51, 51, 51};
    const auto tasks = hierarchical_tasks(diff::Tensor({6, 3, 1}, v), Metric::kEuclidean, 3, 1);
    for (const auto& t : tasks.tasks) validate_task(t, 6);
    CHECK(tasks.tasks.size() >= 2);
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(hierarchical_tasks(blob_batch(1, rng), Metric::kDtw, 2, 1), std::invalid_argument);
  }
}

TEST_CASE("task JSON dump") {
  MetaTask t{{1, 2}, {3}, TaskKind::kHard, {0, 2}};
  CHECK(to_json(t).dump() == R"({"kind":"hard","source":[0,2],"support":[1,2],"query":[3]})");
}
