#include "zsmeta/dataio/split.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace zsmeta::dataio {

const char* to_string(SplitPart part) {
  switch (part) {
    case SplitPart::kTrain: return "train";
    case SplitPart::kVal: return "val";
    case SplitPart::kTest: return "test";
  }
  return "?";
}

namespace {

constexpr std::array<SplitPart, 3> kParts{SplitPart::kTrain, SplitPart::kVal, SplitPart::kTest};
constexpr std::array<const char*, 3> kRegimes{"low", "med", "high"};

void check_disjoint(const SplitSpec& spec) {
  std::set<std::string> seen;
  for (auto part : kParts) {
    for (const auto& t : spec.tickers_of(part)) {
      if (!seen.insert(t).second) {
        throw LeakageError(std::string("ticker '") + t + "' appears in more than one split (found again in " +
                           to_string(part) + ")");
      }
    }
  }
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      const auto& x = spec.segments[a];
      const auto& y = spec.segments[b];
      if (x.begin < y.end && y.begin < x.end) {
        throw LeakageError(std::string("date segments of ") + to_string(kParts[a]) + " and " + to_string(kParts[b]) +
                           " overlap");
      }
      if (!(x.last_date < y.first_date || y.last_date < x.first_date)) {
        throw LeakageError(std::string("date ranges of ") + to_string(kParts[a]) + " and " + to_string(kParts[b]) +
                           " overlap");
      }
    }
}

}  // namespace

std::vector<double> rolling_volatility(const std::vector<double>& index, std::size_t vol_window) {
  if (vol_window < 2) throw DataError("volatility window must be at least 2");
  const std::size_t n = index.size();
  std::vector<double> ret(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 1; t < n; ++t) ret[t] = index[t] / index[t - 1] - 1.0;
  std::vector<double> vol(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    const std::size_t lo = t + 1 > vol_window ? t + 1 - vol_window : 1;
    double mean = 0.0;
    std::size_t m = 0;
    for (std::size_t s = lo; s <= t; ++s)
      if (std::isfinite(ret[s])) mean += ret[s], ++m;
    if (m < 2) continue;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t s = lo; s <= t; ++s)
      if (std::isfinite(ret[s])) var += (ret[s] - mean) * (ret[s] - mean);
    vol[t] = std::sqrt(var / static_cast<double>(m - 1));
  }
  if (n >= 2) vol[0] = vol[1];
  return vol;
}

SplitSpec split_spec(const RawPanel& raw, const std::vector<double>& index, std::array<double, 3> ratios,
                     std::size_t vol_window, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0)) throw DataError("split ratios must lie in (0, 1)");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("split ratios must sum to 1");
  if (index.size() != raw.n_dates()) throw DataError("index series length does not match the panel dates");
  const std::size_t seg = raw.n_dates() / 3;
  if (seg < 2) {
    throw DataError("too few dates for three segments: " + std::to_string(raw.n_dates()));
  }

  SplitSpec spec;
  spec.ratios = ratios;
  spec.vol_window = vol_window;
  spec.seed = seed;

  const auto vol = rolling_volatility(index, vol_window);
  std::array<double, 3> means{};
  for (std::size_t s = 0; s < 3; ++s) {
    means[s] = std::accumulate(vol.begin() + static_cast<std::ptrdiff_t>(s * seg),
                               vol.begin() + static_cast<std::ptrdiff_t>((s + 1) * seg), 0.0) /
               static_cast<double>(seg);
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });
  if (means[0] == means[1] || means[1] == means[2] || means[0] == means[2]) {
    spec.warnings.push_back("tied segment volatility; ties resolved by date order");
  }
  for (std::size_t rank = 0; rank < 3; ++rank) {
    const std::size_t s = order[rank];
    Segment& g = spec.segments[rank];
    g.regime = kRegimes[rank];
    g.begin = s * seg;
    g.end = (s + 1) * seg;
    g.first_date = raw.dates[g.begin];
    g.last_date = raw.dates[g.end - 1];
    g.mean_volatility = means[s];
  }

  const std::size_t n = raw.n_tickers();
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[1] + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[2] + 1e-9));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
    throw DataError("too few tickers (" + std::to_string(n) + ") for a train/val/test split");
  }
  std::vector<std::string> shuffled = raw.tickers;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t n_train = n - n_val - n_test;
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::string> out(shuffled.begin() + static_cast<std::ptrdiff_t>(from),
                                 shuffled.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(out.begin(), out.end());
    return out;
  };
  spec.tickers[0] = take(0, n_train);
  spec.tickers[1] = take(n_train, n_val);
  spec.tickers[2] = take(n_train + n_val, n_test);
  return spec;
}

RawPanel split_panel(const RawPanel& raw, const SplitSpec& spec, SplitPart part) {
  const auto& g = spec.segment_of(part);
  return subpanel(raw, spec.tickers_of(part), g.begin, g.end);
}

void validate_split(const SplitSpec& spec, const RawPanel& raw) {
  check_disjoint(spec);
  std::set<std::string> all;
  for (auto part : kParts) {
    if (spec.tickers_of(part).empty()) throw LeakageError(std::string(to_string(part)) + " split has no tickers");
    for (const auto& t : spec.tickers_of(part)) {
      if (!std::binary_search(raw.tickers.begin(), raw.tickers.end(), t)) {
        throw LeakageError(std::string(to_string(part)) + " split names unknown ticker '" + t + "'");
      }
      all.insert(t);
    }
    const auto& g = spec.segment_of(part);
    if (g.begin >= g.end || g.end > raw.n_dates()) {
      throw LeakageError(std::string(to_string(part)) + " segment is outside the panel dates");
    }
    if (raw.dates[g.begin] != g.first_date || raw.dates[g.end - 1] != g.last_date) {
      throw LeakageError(std::string(to_string(part)) + " segment dates do not match the panel");
    }
  }
  if (all.size() != raw.n_tickers()) throw LeakageError("split does not cover every ticker");
}

void check_leakage(const SplitSpec& spec, const std::array<const WindowSet*, 3>& windows) {
  check_disjoint(spec);
  for (auto part : kParts) {
    const WindowSet* set = windows[static_cast<std::size_t>(part)];
    if (!set) continue;
    const auto& names = spec.tickers_of(part);
    const auto& g = spec.segment_of(part);
    for (const auto& s : set->samples) {
      if (!std::binary_search(names.begin(), names.end(), s.ticker)) {
        throw LeakageError(std::string(to_string(part)) + " window uses ticker '" + s.ticker + "' outside its split");
      }
      if (s.start_date < g.first_date || s.target_date > g.last_date) {
        throw LeakageError(std::string(to_string(part)) + " window " + s.ticker + " [" + s.start_date + ", " +
                           s.target_date + "] leaves segment [" + g.first_date + ", " + g.last_date + "]");
      }
    }
  }
}

nlohmann::ordered_json to_json(const SplitSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["vol_window"] = spec.vol_window;
  j["ratios"] = spec.ratios;
  nlohmann::ordered_json parts = nlohmann::ordered_json::object();
  for (auto part : kParts) {
    const auto& g = spec.segment_of(part);
    parts[to_string(part)] = {{"regime", g.regime},         {"begin", g.begin},
                              {"end", g.end},               {"first_date", g.first_date},
                              {"last_date", g.last_date},   {"mean_volatility", g.mean_volatility},
                              {"tickers", spec.tickers_of(part)}};
  }
  j["splits"] = std::move(parts);
  j["warnings"] = spec.warnings;
  return j;
}

SplitSpec split_from_json(const nlohmann::json& j) {
  try {
    SplitSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.vol_window = j.at("vol_window").get<std::size_t>();
    spec.ratios = j.at("ratios").get<std::array<double, 3>>();
    for (auto part : kParts) {
      const auto& p = j.at("splits").at(to_string(part));
      auto& g = spec.segments[static_cast<std::size_t>(part)];
      g.regime = p.at("regime").get<std::string>();
      g.begin = p.at("begin").get<std::size_t>();
      g.end = p.at("end").get<std::size_t>();
      g.first_date = p.at("first_date").get<std::string>();
      g.last_date = p.at("last_date").get<std::string>();
      g.mean_volatility = p.at("mean_volatility").get<double>();
      spec.tickers[static_cast<std::size_t>(part)] = p.at("tickers").get<std::vector<std::string>>();
      auto& names = spec.tickers[static_cast<std::size_t>(part)];
      std::sort(names.begin(), names.end());
    }
    if (j.contains("warnings")) spec.warnings = j.at("warnings").get<std::vector<std::string>>();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

}  // namespace zsmeta::dataio
