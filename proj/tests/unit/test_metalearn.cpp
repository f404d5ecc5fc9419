#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "zsmeta/diffcore/ops.h"
#include "zsmeta/encoders/recurrent.h"
#include "zsmeta/metalearn/maml.h"
#include "zsmeta/metalearn/trainer.h"

using namespace zsmeta;
using metalearn::MetaConfig;
using taskgen::MetaTask;

namespace {

using Rows = std::span<const std::size_t>;

// Mean squared residual of a linear model y ~ X theta on the selected rows.
struct LinearToy {
  std::vector<std::array<double, 2>> x;
  std::vector<double> y;

  metalearn::SubsetLoss loss() const {
    return [this](diff::Tape& tape, std::span<const diff::Var> p, Rows rows) {
      std::vector<double> xs, ys;
      for (auto r : rows) {
        xs.insert(xs.end(), {x[r][0], x[r][1]});
        ys.push_back(y[r]);
      }
      const auto X = tape.constant(diff::Tensor({rows.size(), 2}, xs));
      const auto Y = tape.constant(diff::Tensor({rows.size(), 1}, ys));
      const auto r = diff::sub(diff::matmul(X, p[0]), Y);
      return diff::scale(diff::sum(diff::mul(r, r)), 1.0 / static_cast<double>(rows.size()));
    };
  }

  // Hand gradient of the same loss.
  std::array<double, 2> grad(std::array<double, 2> th, Rows rows) const {
    std::array<double, 2> g{0, 0};
    for (auto r : rows) {
      const double res = x[r][0] * th[0] + x[r][1] * th[1] - y[r];
      g[0] += 2 * res * x[r][0] / static_cast<double>(rows.size());
      g[1] += 2 * res * x[r][1] / static_cast<double>(rows.size());
    }
    return g;
  }
};

LinearToy make_toy(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  LinearToy t;
  for (std::size_t i = 0; i < n; ++i) {
    t.x.push_back({nd(rng), nd(rng)});
    t.y.push_back(0.7 * t.x.back()[0] - 1.3 * t.x.back()[1] + 0.1 * nd(rng));
  }
  return t;
}

std::vector<diff::Tensor> theta(double a, double b) { return {diff::Tensor({2, 1}, {a, b})}; }

MetaTask task(std::vector<std::size_t> s, std::vector<std::size_t> q) {
  MetaTask t;
  t.support = std::move(s);
  t.query = std::move(q);
  return t;
}

// Windows whose target is a linear map of the last step's features plus noise.
dataio::WindowSet linear_windows(std::size_t days, std::size_t tickers, double noise, std::uint64_t seed,
                                 double signal = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  dataio::WindowSet set{3, 2, 1, {}};
  for (std::size_t t = 0; t < days; ++t) {
    char date[16];
    std::snprintf(date, sizeof date, "d%04zu", t);
    for (std::size_t i = 0; i < tickers; ++i) {
      dataio::WindowSample s;
      s.ticker = "T" + std::to_string(i);
      s.start_date = s.end_date = s.target_date = date;
      for (int k = 0; k < 6; ++k) s.window.push_back(nd(rng));
      const double y = signal * (0.8 * s.window[4] - 0.5 * s.window[5]) + noise * nd(rng);
      s.target = {y};
      s.realized = y;
      set.samples.push_back(std::move(s));
    }
  }
  return set;
}

metalearn::TrainConfig small_config(metalearn::TaskSource source, std::uint64_t seed) {
  metalearn::TrainConfig cfg;
  cfg.source = source;
  cfg.seed = seed;
  cfg.embed_dim = 8;
  cfg.meta.batch_size = 256;
  cfg.meta.epochs = 5;
  cfg.tasks.task_size = 16;
  cfg.tasks.gmm_max_iter = 50;
  return cfg;
}

}  // namespace

TEST_CASE("inner_adapt takes plain gradient steps on a copy") {
  const std::vector<diff::Tensor> p{diff::Tensor({1}, {1.0})};
  const metalearn::SubsetLoss sq = [](diff::Tape&, std::span<const diff::Var> v, Rows) {
    return diff::sum(diff::mul(v[0], v[0]));
  };
  const std::vector<std::size_t> support{0};
  MetaConfig cfg;
  cfg.inner_lr = 0.1;
  const auto adapted = metalearn::inner_adapt(p, sq, support, cfg);
  CHECK(adapted[0].data()[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p[0].data()[0] == 1.0);

  cfg.inner_steps = 3;
  CHECK(metalearn::inner_adapt(p, sq, support, cfg)[0].data()[0] == doctest::Approx(0.512).epsilon(1e-14));

  cfg.inner_steps = 0;
  CHECK(metalearn::inner_adapt(p, sq, support, cfg)[0] == p[0]);

  // already at the minimum
  const std::vector<diff::Tensor> zero{diff::Tensor({1}, {0.0})};
  cfg.inner_steps = 2;
  CHECK(metalearn::inner_adapt(zero, sq, support, cfg)[0] == zero[0]);
}

TEST_CASE("inner_adapt on encoder parameters leaves the input untouched") {
  const enc::Dims dims{2, 4, 1};
  const auto params = enc::init_params(enc::Arch::kGru, dims, 3);
  const auto before = params.fingerprint();
  auto ws = linear_windows(4, 8, 0.1, 5);
  std::vector<std::size_t> all(ws.size());
  std::iota(all.begin(), all.end(), 0);
  const metalearn::Samples samples{ws.all_inputs(), ws.targets(all)};
  const std::vector<std::size_t> support{0, 1, 2, 3, 4, 5};
  MetaConfig cfg;
  cfg.inner_steps = 2;
  cfg.inner_lr = 0.5;
  const auto adapted = metalearn::inner_adapt(params, samples, support, cfg);
  CHECK(params.fingerprint() == before);
  CHECK_FALSE(adapted == params);
}

TEST_CASE("first-order meta step sums query gradients taken at the adapted parameters") {
  const auto toy = make_toy(40, 11);
  const auto loss = toy.loss();
  MetaConfig cfg;
  cfg.inner_lr = 0.05;
  cfg.outer_lr = 0.02;
  cfg.inner_steps = 2;
  const std::vector<MetaTask> tasks{task({0, 1, 2, 3}, {4, 5, 6, 7, 8}), task({10, 12, 14}, {11, 13}),
                                    task({20, 21, 22, 23, 24, 25}, {30, 31, 32, 33})};
  const std::array<double, 2> th0{0.3, -0.2};
  const auto res = metalearn::meta_step(theta(th0[0], th0[1]), tasks, loss, cfg);

  std::array<double, 2> total{0, 0};
  for (const auto& t : tasks) {
    auto th = th0;
    for (std::size_t s = 0; s < cfg.inner_steps; ++s) {
      const auto g = toy.grad(th, t.support);
      th = {th[0] - cfg.inner_lr * g[0], th[1] - cfg.inner_lr * g[1]};
    }
    const auto gq = toy.grad(th, t.query);
    total[0] += gq[0];
    total[1] += gq[1];
  }
  CHECK(res.tasks_used == 3);
  CHECK(res.tasks_aborted == 0);
  CHECK(res.params[0].data()[0] == doctest::Approx(th0[0] - cfg.outer_lr * total[0]).epsilon(1e-12));
  CHECK(res.params[0].data()[1] == doctest::Approx(th0[1] - cfg.outer_lr * total[1]).epsilon(1e-12));
}

TEST_CASE("meta step trivial cases") {
  const auto toy = make_toy(20, 2);
  const auto loss = toy.loss();
  MetaConfig cfg;
  const auto p = theta(0.5, 0.5);
  const std::vector<MetaTask> one{task({0, 1, 2}, {3, 4, 5})};

  SUBCASE("outer_lr 0 keeps the parameters and still reports the loss") {
    cfg.outer_lr = 0.0;
    const auto res = metalearn::meta_step(p, one, loss, cfg);
    CHECK(res.params[0] == p[0]);
    CHECK(res.mean_query_loss > 0.0);
  }
  SUBCASE("empty support and zero query loss") {
    LinearToy exact = toy;
    for (std::size_t i = 0; i < exact.y.size(); ++i) exact.y[i] = 0.5 * exact.x[i][0] + 0.5 * exact.x[i][1];
    const auto exact_loss = exact.loss();
    cfg.inner_steps = 0;
    const auto res = metalearn::meta_step(p, std::vector<MetaTask>{task({}, {0, 1, 2, 3})}, exact_loss, cfg);
    CHECK(res.params[0] == p[0]);
    CHECK(res.mean_query_loss == 0.0);
  }
  SUBCASE("two identical tasks at half the rate match one task") {
    cfg.outer_lr = 0.1;
    const auto single = metalearn::meta_step(p, one, loss, cfg);
    cfg.outer_lr = 0.05;
    const std::vector<MetaTask> twice{one[0], one[0]};
    const auto doubled = metalearn::meta_step(p, twice, loss, cfg);
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(doubled.params[0].data()[k] == doctest::Approx(single.params[0].data()[k]).epsilon(1e-14));
    CHECK(doubled.mean_query_loss == doctest::Approx(single.mean_query_loss).epsilon(1e-14));
  }
  SUBCASE("no tasks") {
    CHECK_THROWS_AS(metalearn::meta_step(p, std::vector<MetaTask>{}, loss, cfg), std::invalid_argument);
  }
}

TEST_CASE("aborted tasks contribute nothing") {
  const auto toy = make_toy(30, 4);
  const auto base = toy.loss();
  // any row 29 poisons the loss
  const metalearn::SubsetLoss poisoned = [&](diff::Tape& tape, std::span<const diff::Var> p, Rows rows) {
    auto l = base(tape, p, rows);
    for (auto r : rows)
      if (r == 29) return diff::add(l, std::numeric_limits<double>::quiet_NaN());
    return l;
  };
  MetaConfig cfg;
  cfg.outer_lr = 0.1;
  const auto p = theta(0.1, 0.2);
  const MetaTask good = task({0, 1, 2}, {3, 4, 5});
  const MetaTask bad_support = task({29, 7}, {8, 9});
  const MetaTask bad_query = task({10, 11}, {12, 29});

  const auto clean = metalearn::meta_step(p, std::vector<MetaTask>{good}, poisoned, cfg);
  const auto mixed = metalearn::meta_step(p, std::vector<MetaTask>{bad_support, good, bad_query}, poisoned, cfg);
  CHECK(mixed.params[0] == clean.params[0]);
  CHECK(mixed.mean_query_loss == clean.mean_query_loss);
  CHECK(mixed.tasks_used == 1);
  CHECK(mixed.tasks_aborted == 2);
  CHECK(mixed.diagnostics.size() == 2);

  CHECK_THROWS_AS(metalearn::meta_step(p, std::vector<MetaTask>{bad_query}, poisoned, cfg), metalearn::MetaError);
}

TEST_CASE("meta config validation") {
  MetaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.first_order = false;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("unsupported"), std::invalid_argument);
  cfg = MetaConfig{};
  cfg.inner_steps = 11;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MetaConfig{};
  cfg.outer_lr = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MetaConfig{};
  cfg.inner_lr = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("task source names round trip") {
  using metalearn::TaskSource;
  for (auto s : {TaskSource::kProposed, TaskSource::kRandom, TaskSource::kDtw, TaskSource::kEuclidean,
                 TaskSource::kPretrain})
    CHECK(metalearn::parse_task_source(metalearn::to_string(s)) == s);
  CHECK_THROWS_AS(metalearn::parse_task_source("nope"), std::invalid_argument);
}

TEST_CASE("training is a deterministic function of data, config and seed") {
  const auto train_set = linear_windows(32, 16, 0.3, 1);
  const auto val_set = linear_windows(8, 16, 0.3, 2);
  for (auto source : {metalearn::TaskSource::kProposed, metalearn::TaskSource::kRandom}) {
    auto cfg = small_config(source, 9);
    cfg.meta.epochs = 2;
    const auto a = metalearn::train(train_set, val_set, cfg);
    const auto b = metalearn::train(train_set, val_set, cfg);
    CHECK(metalearn::to_json(a.history).dump() == metalearn::to_json(b.history).dump());
    CHECK(a.params == b.params);
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) CHECK(a.history.epochs[e].epoch == e + 1);
    cfg.seed = 10;
    CHECK_FALSE(metalearn::train(train_set, val_set, cfg).params == a.params);
  }
}

TEST_CASE("patience 0 stops at the first epoch that does not improve") {
  // pure noise targets, so validation IC wanders
  const auto train_set = linear_windows(32, 16, 1.0, 3, 0.0);
  const auto val_set = linear_windows(8, 16, 1.0, 4, 0.0);
  auto cfg = small_config(metalearn::TaskSource::kRandom, 5);
  cfg.meta.epochs = 30;
  cfg.meta.patience = 0;
  cfg.meta.outer_lr = 0.05;
  const auto res = metalearn::train(train_set, val_set, cfg);
  const auto& ep = res.history.epochs;
  REQUIRE(res.history.stopped_early);
  REQUIRE(ep.size() >= 2);
  double best = -2;
  for (std::size_t e = 0; e + 1 < ep.size(); ++e) {
    CHECK(ep[e].val_ic.value() > best);
    best = ep[e].val_ic.value();
  }
  CHECK(ep.back().val_ic.value() <= best);
  CHECK(res.history.best_epoch == ep.size() - 1);
}

TEST_CASE("proposed training recovers a linear signal") {
  const auto train_set = linear_windows(64, 32, 0.05, 6);
  const auto val_set = linear_windows(16, 32, 0.05, 7);
  auto cfg = small_config(metalearn::TaskSource::kProposed, 8);
  cfg.meta.epochs = 15;
  cfg.meta.outer_lr = 0.02;
  const auto res = metalearn::train(train_set, val_set, cfg);
  REQUIRE(res.history.best_val_ic.has_value());
  CHECK(*res.history.best_val_ic > 0.5);
  CHECK(metalearn::validation_ic(res.params, val_set).value() == doctest::Approx(*res.history.best_val_ic));
}

TEST_CASE("pretraining baseline") {
  const auto train_set = linear_windows(32, 32, 0.0, 12);
  const auto val_set = linear_windows(8, 32, 0.0, 13);
  auto cfg = small_config(metalearn::TaskSource::kProposed, 14);
  cfg.meta.epochs = 10;
  cfg.meta.patience = 20;
  cfg.meta.outer_lr = 0.01;

  const auto pre = metalearn::pretrain_baseline(train_set, val_set, cfg);
  auto as_train = cfg;
  as_train.source = metalearn::TaskSource::kPretrain;
  as_train.meta.inner_steps = 0;
  const auto direct = metalearn::train(train_set, val_set, as_train);
  CHECK(pre.params == direct.params);
  CHECK(metalearn::to_json(pre.history).dump() == metalearn::to_json(direct.history).dump());
  CHECK(metalearn::to_json(metalearn::pretrain_baseline(train_set, val_set, cfg).history).dump() ==
        metalearn::to_json(pre.history).dump());

  const auto& ep = pre.history.epochs;
  REQUIRE(ep.size() == 10);
  for (std::size_t e = 1; e < ep.size(); ++e) CHECK(ep[e].meta_loss <= ep[e - 1].meta_loss);
  for (const auto& e : ep) CHECK(e.tasks_baseline + e.tasks_intra == e.batches);
}

TEST_CASE("predict_panel keys rows by the window end date") {
  const auto ws = linear_windows(3, 5, 0.1, 20);
  const auto params = enc::init_params(enc::Arch::kGru, {2, 4, 1}, 1);
  const auto panel = metalearn::predict_panel(params, ws, 4);
  REQUIRE(panel.rows.size() == ws.size());
  const auto all = enc::forecast(params, ws.all_inputs());
  for (std::size_t k = 0; k < ws.size(); ++k) {
    CHECK(panel.rows[k].date == ws.samples[k].end_date);
    CHECK(panel.rows[k].ticker == ws.samples[k].ticker);
    CHECK(panel.rows[k].realized == ws.samples[k].realized);
    CHECK(panel.rows[k].pred == doctest::Approx(all.data()[k]).epsilon(1e-14));
  }
}
