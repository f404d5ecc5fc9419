#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "zsmeta/dataio/features.h"
#include "zsmeta/dataio/split.h"
#include "zsmeta/dataio/synthetic.h"
#include "zsmeta/dataio/windows.h"

using namespace zsmeta::dataio;

namespace {

std::vector<PriceRow> series_rows(const std::vector<std::string>& tickers, std::size_t days,
                                  double (*price)(std::size_t day, std::size_t ticker)) {
  const auto dates = business_dates("2021-03-01", days);
  std::vector<PriceRow> rows;
  for (std::size_t t = 0; t < days; ++t)
    for (std::size_t i = 0; i < tickers.size(); ++i) {
      const double p = price(t, i);
      rows.push_back({dates[t], tickers[i], p, p, p, p, 1000.0 + static_cast<double>(t)});
    }
  return rows;
}

// Hand-built feature panel with one feature equal to the date index.
TimePanel toy_panel(std::size_t days, std::size_t tickers) {
  TimePanel p;
  p.dates = business_dates("2022-01-03", days);
  for (std::size_t i = 0; i < tickers; ++i) p.tickers.push_back("X" + std::to_string(i));
  p.feature_names = {"f"};
  p.features.resize(days * tickers);
  for (std::size_t t = 0; t < days; ++t)
    for (std::size_t i = 0; i < tickers; ++i) p.features[t * tickers + i] = static_cast<double>(t);
  p.target.assign(days * tickers, 0.5);
  p.returns.assign(days * tickers, 0.01);
  p.mask.assign(days * tickers, 1);
  return p;
}

std::size_t naive_window_count(const TimePanel& p, std::size_t l, std::size_t h) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.n_tickers(); ++i)
    for (std::size_t e = 0; e < p.n_dates(); ++e) {
      if (e + 1 < l || e + h >= p.n_dates()) continue;
      bool ok = true;
      for (std::size_t u = e + 1 - l; u <= e + h; ++u) ok = ok && p.mask[p.cell(u, i)];
      count += ok;
    }
  return count;
}

}  // namespace

TEST_CASE("price CSV parsing") {
  SUBCASE("valid file gives aligned panel") {
    std::istringstream in(
        "date,ticker,open,high,low,close,volume\n"
        "2020-01-02,AAA,1,1,1,10,100\n2020-01-02,BBB,1,1,1,20,100\n"
        "2020-01-03,AAA,1,1,1,11,100\n2020-01-03,BBB,1,1,1,21,100\n"
        "2020-01-06,AAA,1,1,1,12,100\n2020-01-06,BBB,1,1,1,22,100\n");
    const auto panel = make_features(build_panel(parse_price_csv(in, "mem")));
    CHECK(panel.n_dates() == 3);
    CHECK(panel.n_tickers() == 2);
    CHECK(panel.n_features() == 13);
    CHECK(panel.features.size() == 3 * 2 * 13);
  }
  SUBCASE("duplicate row names the line") {
    std::istringstream in(
        "date,ticker,open,high,low,close,volume\n2020-01-02,AAA,1,1,1,10,100\n2020-01-02,AAA,1,1,1,10,100\n");
    try {
      parse_price_csv(in, "mem");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("mem:3") != std::string::npos);
      CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
  }
  SUBCASE("malformed rows") {
    auto fails = [](const std::string& body) {
      std::istringstream in("date,ticker,open,high,low,close,volume\n" + body);
      CHECK_THROWS_AS(parse_price_csv(in, "mem"), DataError);
    };
    fails("2020-01-02,AAA,1,1,1,0,100\n");
    fails("2020-01-02,AAA,1,1,1,-3,100\n");
    fails("2020-01-02,AAA,1,1,1,abc,100\n");
    fails("2020-01-02,AAA,1,1,1,1\n");
    fails("20200102,AAA,1,1,1,1,1\n");
    fails("2020-01-02,AAA,1,1,1,1,-1\n");
    std::istringstream bad_header("date,ticker,close\n");
    CHECK_THROWS_AS(parse_price_csv(bad_header, "mem"), DataError);
  }
  SUBCASE("write / parse round trip") {
    SyntheticConfig cfg;
    cfg.n_tickers = 5;
    cfg.n_days = 100;
    const auto data = gen_synthetic(cfg);
    std::stringstream buf;
    write_price_csv(buf, data.rows);
    const auto back = parse_price_csv(buf, "mem");
    REQUIRE(back.size() == data.rows.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
      CHECK(back[k].close == data.rows[k].close);
      CHECK(back[k].volume == data.rows[k].volume);
      CHECK(back[k].date == data.rows[k].date);
    }
  }
}

TEST_CASE("make_features examples") {
  SUBCASE("constant prices") {
    const auto p = make_features(build_panel(series_rows({"A", "B"}, 30, [](std::size_t, std::size_t) { return 7.0; })));
    for (std::size_t t = 0; t < 20; ++t) CHECK(p.mask[p.cell(t, 0)] == 0);
    for (std::size_t t = 20; t < 29; ++t) {
      REQUIRE(p.mask[p.cell(t, 0)] == 1);
      for (std::size_t f = 0; f < 6; ++f) CHECK(p.feature(t, 0, f) == 1.0);
      CHECK(p.feature(t, 0, 12) == 0.0);
      CHECK(p.target[p.cell(t, 1)] == 0.0);
    }
    CHECK(p.mask[p.cell(29, 0)] == 1);
    CHECK_FALSE(p.target_defined(29, 0));
  }
  SUBCASE("price doubling each day") {
    const auto p =
        make_features(build_panel(series_rows({"A"}, 25, [](std::size_t t, std::size_t) { return std::ldexp(1.0, static_cast<int>(t)); })));
    CHECK(p.feature(21, 0, 0) == 0.5);
    CHECK(p.feature(21, 0, 1) == 0.25);
    CHECK(p.feature(21, 0, 12) == 0.0);  // every return is exactly 1
    CHECK(p.target[p.cell(21, 0)] == 1.0);
  }
  SUBCASE("volume ratio and zero volume") {
    auto rows = series_rows({"A"}, 25, [](std::size_t, std::size_t) { return 3.0; });
    const auto p = make_features(build_panel(rows));
    CHECK(p.feature(22, 0, 6) == doctest::Approx(1021.0 / 1022.0));
    rows[22].volume = 0.0;
    const auto z = make_features(build_panel(rows));
    CHECK(z.mask[z.cell(22, 0)] == 0);
    CHECK(z.mask[z.cell(21, 0)] == 1);
  }
  SUBCASE("missing history masks dependent dates") {
    auto rows = series_rows({"A", "B"}, 40, [](std::size_t t, std::size_t i) { return 10.0 + static_cast<double>(t + i); });
    rows.erase(rows.begin() + 2 * 25);  // drop (day 25, A)
    const auto p = make_features(build_panel(rows));
    CHECK_FALSE(p.target_defined(24, 0));
    for (std::size_t t = 25; t <= 38 && t <= 25 + 20; ++t) CHECK(p.mask[p.cell(t, 0)] == 0);
    CHECK(p.mask[p.cell(30, 1)] == 1);
  }
  SUBCASE("realized volatility against direct computation") {
    const auto p = make_features(build_panel(series_rows({"A"}, 30, [](std::size_t t, std::size_t) {
      return 10.0 + std::sin(static_cast<double>(t)) + 0.1 * static_cast<double>(t);
    })));
    auto close = [](std::size_t t) { return 10.0 + std::sin(static_cast<double>(t)) + 0.1 * static_cast<double>(t); };
    std::vector<double> r;
    for (std::size_t s = 6; s <= 25; ++s) r.push_back(close(s) / close(s - 1) - 1.0);
    double m = 0;
    for (double v : r) m += v;
    m /= 20;
    double var = 0;
    for (double v : r) var += (v - m) * (v - m);
    CHECK(p.feature(25, 0, 12) == doctest::Approx(std::sqrt(var / 19)).epsilon(1e-12));
  }
}

TEST_CASE("crosssec_normalize") {
  TimePanel p = toy_panel(3, 2);
  p.features = {1, 3, 5, 5, 0, 2};
  p.target = {0.1, 0.3, 0.2, 0.2, 1, 2};
  const auto n = crosssec_normalize(p);
  CHECK(n.features[0] == -1.0);
  CHECK(n.features[1] == 1.0);
  CHECK(n.features[2] == 0.0);  // all-equal slice
  CHECK(n.features[3] == 0.0);
  CHECK(n.target[0] == doctest::Approx(-1.0));
  CHECK(n.returns == p.returns);
  CHECK(n.normalized);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(3.0, 2.0);
  TimePanel big = toy_panel(20, 15);
  big.feature_names = {"a", "b"};
  big.features.resize(20 * 15 * 2);
  for (auto& v : big.features) v = g(rng);
  for (auto& v : big.target) v = g(rng);
  big.mask[big.cell(3, 4)] = 0;
  const auto once = crosssec_normalize(big);
  const auto twice = crosssec_normalize(once);
  for (std::size_t k = 0; k < once.features.size(); ++k) CHECK(std::abs(once.features[k] - twice.features[k]) <= 1e-12);
  for (std::size_t k = 0; k < once.target.size(); ++k) CHECK(std::abs(once.target[k] - twice.target[k]) <= 1e-12);
  for (std::size_t t = 0; t < 20; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 15; ++i)
      if (once.mask[once.cell(t, i)]) mean += once.feature(t, i, 1);
    CHECK(std::abs(mean) <= 1e-12);
  }
}

TEST_CASE("sliding_windows") {
  SUBCASE("count formula") {
    const auto w = sliding_windows(toy_panel(10, 2), 3, 1);
    CHECK(w.size() == 14);
    CHECK(w.samples[0].window == std::vector<double>{0, 1, 2});
    CHECK(w.samples[0].start_date == toy_panel(10, 2).dates[0]);
    CHECK(w.samples[0].end_date == toy_panel(10, 2).dates[2]);
    CHECK(w.samples[0].target_date == toy_panel(10, 2).dates[3]);
    CHECK(sliding_windows(toy_panel(4, 1), 3, 1).size() == 1);
    CHECK(sliding_windows(toy_panel(3, 1), 3, 1).size() == 0);
    CHECK(sliding_windows(toy_panel(3, 1), 2, 2).size() == 0);  // T = L + h - 1
    CHECK(sliding_windows(toy_panel(10, 1), 3, 2).size() == 6);
  }
  SUBCASE("windows never straddle a gap") {
    auto p = toy_panel(10, 1);
    p.mask[5] = 0;
    const auto w = sliding_windows(p, 3, 1);
    CHECK(w.size() == 2 + 1);  // runs of 5 and 4
    for (const auto& s : w.samples)
      for (double v : s.window) CHECK(v != 5.0);
  }
  SUBCASE("count formula on random masks") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      auto p = toy_panel(30, 3);
      for (auto& m : p.mask) m = (rng() % 7) != 0;
      const std::size_t l = 1 + trial % 4, h = 1 + trial % 3;
      CHECK(sliding_windows(p, l, h).size() == naive_window_count(p, l, h));
    }
  }
  SUBCASE("batch tensors") {
    const auto w = sliding_windows(toy_panel(6, 2), 2, 1);
    const std::vector<std::size_t> idx{1, 0};
    const auto x = w.inputs(idx);
    CHECK(x.shape() == zsmeta::diff::Shape{2, 2, 1});
    CHECK(x[0] == 1.0);
    CHECK(w.targets(idx).shape() == zsmeta::diff::Shape{2, 1});
    CHECK_THROWS_AS(sliding_windows(toy_panel(6, 2), 0, 1), std::invalid_argument);
  }
}

TEST_CASE("rolling_volatility") {
  const std::vector<double> idx{100, 101, 99, 102, 102, 98};
  const auto v = rolling_volatility(idx, 3);
  std::vector<double> r;
  for (std::size_t t = 1; t < idx.size(); ++t) r.push_back(idx[t] / idx[t - 1] - 1);
  auto sd = [](std::vector<double> xs) {
    double m = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
  };
  CHECK(v[1] == 0.0);
  CHECK(v[2] == doctest::Approx(sd({r[0], r[1]})));
  CHECK(v[3] == doctest::Approx(sd({r[0], r[1], r[2]})));
  CHECK(v[5] == doctest::Approx(sd({r[2], r[3], r[4]})));
  CHECK(v[0] == v[1]);
}

TEST_CASE("split_spec") {
  SyntheticConfig cfg;
  cfg.n_tickers = 10;
  cfg.n_days = 150;
  cfg.seed = 3;
  const auto data = gen_synthetic(cfg);
  const auto raw = build_panel(data.rows);
  const auto spec = split_spec(raw, data.index, {0.6, 0.2, 0.2}, 180, 5);
  CHECK(spec.tickers_of(SplitPart::kTrain).size() == 6);
  CHECK(spec.tickers_of(SplitPart::kVal).size() == 2);
  CHECK(spec.tickers_of(SplitPart::kTest).size() == 2);
  std::set<std::string> all;
  for (const auto& names : spec.tickers) all.insert(names.begin(), names.end());
  CHECK(all.size() == 10);
  validate_split(spec, raw);
  CHECK(spec.segment_of(SplitPart::kTrain).mean_volatility <= spec.segment_of(SplitPart::kVal).mean_volatility);
  CHECK(spec.segment_of(SplitPart::kVal).mean_volatility <= spec.segment_of(SplitPart::kTest).mean_volatility);
  CHECK(spec.segment_of(SplitPart::kTrain).regime == "low");
  CHECK(spec.segment_of(SplitPart::kTest).regime == "high");
  for (const auto& g : spec.segments) CHECK(g.end - g.begin == 50);
  CHECK(split_spec(raw, data.index, {0.6, 0.2, 0.2}, 180, 5).tickers == spec.tickers);
  CHECK(split_spec(raw, data.index, {0.6, 0.2, 0.2}, 180, 6).tickers != spec.tickers);

  const auto round = split_from_json(nlohmann::json::parse(to_json(spec).dump()));
  CHECK(round.tickers == spec.tickers);
  CHECK(round.segment_of(SplitPart::kTest).first_date == spec.segment_of(SplitPart::kTest).first_date);
  CHECK(to_json(round).dump() == to_json(spec).dump());

  SUBCASE("constant index ties") {
    const std::vector<double> flat(raw.n_dates(), 100.0);
    const auto tied = split_spec(raw, flat, {0.6, 0.2, 0.2}, 180, 1);
    CHECK(tied.warnings.size() == 1);
    CHECK(tied.segment_of(SplitPart::kTrain).begin == 0);
    CHECK(tied.segment_of(SplitPart::kVal).begin == 50);
    CHECK(tied.segment_of(SplitPart::kTest).begin == 100);
  }
  SUBCASE("corrupted splits are rejected") {
    auto overlap = spec;
    overlap.tickers[1].push_back(overlap.tickers[0][0]);
    CHECK_THROWS_AS(validate_split(overlap, raw), LeakageError);
    auto dates = spec;
    dates.segments[1].begin = dates.segments[0].begin;
    dates.segments[1].end = dates.segments[0].end;
    dates.segments[1].first_date = dates.segments[0].first_date;
    dates.segments[1].last_date = dates.segments[0].last_date;
    CHECK_THROWS_AS(validate_split(dates, raw), LeakageError);
    auto missing = spec;
    missing.tickers[2].pop_back();
    CHECK_THROWS_AS(validate_split(missing, raw), LeakageError);
    CHECK_THROWS_AS(split_from_json(nlohmann::json::parse(R"({"seed":1})")), DataError);
  }
  SUBCASE("too few dates") {
    CHECK_THROWS_AS(split_spec(subpanel(raw, raw.tickers, 0, 5), std::vector<double>(5, 1.0)), DataError);
  }
}

TEST_CASE("leakage check over windows") {
  SyntheticConfig cfg;
  cfg.n_tickers = 10;
  cfg.n_days = 200;
  const auto data = gen_synthetic(cfg);
  const auto raw = build_panel(data.rows);
  const auto spec = split_spec(raw, data.index, {0.6, 0.2, 0.2}, 180, 2);
  std::array<WindowSet, 3> sets;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto part = static_cast<SplitPart>(k);
    sets[k] = sliding_windows(crosssec_normalize(make_features(split_panel(raw, spec, part))), 3, 1);
    CHECK(sets[k].size() > 0);
  }
  check_leakage(spec, {&sets[0], &sets[1], &sets[2]});

  auto foreign = sets[0];
  foreign.samples[0].ticker = spec.tickers_of(SplitPart::kTest)[0];
  CHECK_THROWS_AS(check_leakage(spec, {&foreign, &sets[1], &sets[2]}), LeakageError);
  auto late = sets[1];
  late.samples.back().target_date = "2999-01-01";
  CHECK_THROWS_AS(check_leakage(spec, {&sets[0], &late, &sets[2]}), LeakageError);
}

TEST_CASE("gen_synthetic") {
  SyntheticConfig cfg;
  cfg.n_tickers = 20;
  cfg.n_days = 300;
  cfg.seed = 9;
  const auto a = gen_synthetic(cfg);
  CHECK(a.rows.size() == 20 * 300);
  CHECK(a.regimes.size() == 300);
  CHECK(a.index.size() == 300);
  CHECK(a.tickers.front() == "T000");
  const auto b = gen_synthetic(cfg);
  std::stringstream sa, sb;
  write_price_csv(sa, a.rows);
  write_price_csv(sb, b.rows);
  CHECK(sa.str() == sb.str());
  cfg.seed = 10;
  std::stringstream sc;
  write_price_csv(sc, gen_synthetic(cfg).rows);
  CHECK(sc.str() != sa.str());

  SUBCASE("high-volatility regime has at least twice the dispersion") {
    SyntheticConfig big;
    big.n_tickers = 100;
    big.n_days = 500;
    big.seed = 4;
    const auto d = gen_synthetic(big);
    const auto raw = build_panel(d.rows);
    std::vector<double> by_regime(3, 0.0);
    std::vector<int> days(3, 0);
    for (std::size_t t = 1; t < raw.n_dates(); ++t) {
      double m = 0, s = 0;
      std::vector<double> r;
      for (std::size_t i = 0; i < raw.n_tickers(); ++i) r.push_back(raw.close[raw.cell(t, i)] / raw.close[raw.cell(t - 1, i)] - 1);
      for (double v : r) m += v;
      m /= static_cast<double>(r.size());
      for (double v : r) s += (v - m) * (v - m);
      by_regime[d.regimes[t]] += std::sqrt(s / static_cast<double>(r.size()));
      days[d.regimes[t]]++;
    }
    REQUIRE(days[0] > 0);
    REQUIRE(days[2] > 0);
    CHECK(by_regime[2] / days[2] >= 2.0 * by_regime[0] / days[0]);
  }
  SUBCASE("invalid sizes") {
    SyntheticConfig bad;
    bad.n_tickers = 4;
    CHECK_THROWS_AS(gen_synthetic(bad), std::invalid_argument);
    bad.n_tickers = 10;
    bad.n_days = 50;
    CHECK_THROWS_AS(gen_synthetic(bad), std::invalid_argument);
  }
}

TEST_CASE("business_dates skips weekends") {
  const auto d = business_dates("2020-01-02", 4);
  CHECK(d == std::vector<std::string>{"2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07"});
  const auto leap = business_dates("2020-02-27", 3);
  CHECK(leap == std::vector<std::string>{"2020-02-27", "2020-02-28", "2020-03-02"});
}
