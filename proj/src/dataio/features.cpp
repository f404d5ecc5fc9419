#include "zsmeta/dataio/features.h"

#include <algorithm>
#include <cmath>

namespace zsmeta::dataio {

TimePanel make_features(const RawPanel& raw, const std::vector<std::size_t>& lags, std::size_t vol_window) {
  if (lags.empty()) throw DataError("make_features: no lags");
  if (std::find(lags.begin(), lags.end(), std::size_t{0}) != lags.end()) throw DataError("make_features: lag 0");
  if (vol_window < 2) throw DataError("make_features: volatility window must be at least 2");
  TimePanel p;
  p.dates = raw.dates;
  p.tickers = raw.tickers;
  for (auto k : lags) p.feature_names.push_back("close_lag" + std::to_string(k));
  for (auto k : lags) p.feature_names.push_back("volume_lag" + std::to_string(k));
  p.feature_names.push_back("volatility" + std::to_string(vol_window));
  const std::size_t d = p.feature_names.size(), nt = raw.n_dates(), ni = raw.n_tickers();
  p.features.assign(nt * ni * d, 0.0);
  p.target.assign(nt * ni, 0.0);
  p.returns.assign(nt * ni, 0.0);
  p.mask.assign(nt * ni, 0);

  auto ok = [&](std::size_t t, std::size_t i) { return raw.present[raw.cell(t, i)] != 0; };
  auto close = [&](std::size_t t, std::size_t i) { return raw.close[raw.cell(t, i)]; };
  auto volume = [&](std::size_t t, std::size_t i) { return raw.volume[raw.cell(t, i)]; };
  const std::size_t max_lag = std::max(*std::max_element(lags.begin(), lags.end()), vol_window);

  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t i = 0; i < ni; ++i) {
      if (!ok(t, i) || t < max_lag) continue;
      if (!(volume(t, i) > 0.0)) continue;
      bool history = true;
      for (std::size_t s = t - max_lag; s < t && history; ++s) history = ok(s, i);
      if (!history) continue;

      double* out = &p.features[p.cell(t, i) * d];
      for (std::size_t l = 0; l < lags.size(); ++l) {
        out[l] = close(t - lags[l], i) / close(t, i);
        out[lags.size() + l] = volume(t - lags[l], i) / volume(t, i);
      }
      double mean = 0.0;
      for (std::size_t s = t + 1 - vol_window; s <= t; ++s) mean += close(s, i) / close(s - 1, i) - 1.0;
      mean /= static_cast<double>(vol_window);
      double var = 0.0;
      for (std::size_t s = t + 1 - vol_window; s <= t; ++s) {
        const double r = close(s, i) / close(s - 1, i) - 1.0 - mean;
        var += r * r;
      }
      out[d - 1] = std::sqrt(var / static_cast<double>(vol_window - 1));

      p.mask[p.cell(t, i)] = 1;
      if (t + 1 < nt && ok(t + 1, i)) {
        const double ret = close(t + 1, i) / close(t, i) - 1.0;
        p.target[p.cell(t, i)] = ret;
        p.returns[p.cell(t, i)] = ret;
      }
    }
  }
  return p;
}

TimePanel load_csv(const std::string& path) { return make_features(build_panel(read_price_csv(path))); }

namespace {

// z-scores values[idx] in place over the listed positions.
void zscore(std::vector<double>& values, const std::vector<std::size_t>& idx) {
  if (idx.size() < 2) {
    for (auto k : idx) values[k] = 0.0;
    return;
  }
  double mean = 0.0;
  for (auto k : idx) mean += values[k];
  mean /= static_cast<double>(idx.size());
  double var = 0.0;
  for (auto k : idx) var += (values[k] - mean) * (values[k] - mean);
  const double sd = std::sqrt(var / static_cast<double>(idx.size()));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    for (auto k : idx) values[k] = 0.0;
    return;
  }
  for (auto k : idx) values[k] = (values[k] - mean) / sd;
}

}  // namespace

TimePanel crosssec_normalize(const TimePanel& panel) {
  TimePanel p = panel;
  const std::size_t d = p.n_features(), ni = p.n_tickers();
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < p.n_dates(); ++t) {
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < ni; ++i)
      if (p.mask[p.cell(t, i)]) usable.push_back(i);
    for (std::size_t f = 0; f < d; ++f) {
      idx.clear();
      for (auto i : usable) idx.push_back(p.cell(t, i) * d + f);
      zscore(p.features, idx);
    }
    idx.clear();
    for (auto i : usable)
      if (p.target_defined(t, i)) idx.push_back(p.cell(t, i));
    zscore(p.target, idx);
  }
  p.normalized = true;
  return p;
}

}  // namespace zsmeta::dataio
