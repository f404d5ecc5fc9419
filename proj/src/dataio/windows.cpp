#include "zsmeta/dataio/windows.h"

#include <numeric>

namespace zsmeta::dataio {

diff::Tensor WindowSet::inputs(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("WindowSet::inputs: no samples selected");
  std::vector<double> v;
  v.reserve(indices.size() * length * features);
  for (auto k : indices) {
    const auto& w = samples.at(k).window;
    v.insert(v.end(), w.begin(), w.end());
  }
  return diff::Tensor({indices.size(), length, features}, std::move(v));
}

diff::Tensor WindowSet::targets(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("WindowSet::targets: no samples selected");
  std::vector<double> v;
  v.reserve(indices.size() * horizon);
  for (auto k : indices) {
    const auto& y = samples.at(k).target;
    v.insert(v.end(), y.begin(), y.end());
  }
  return diff::Tensor({indices.size(), horizon}, std::move(v));
}

diff::Tensor WindowSet::all_inputs() const {
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  return inputs(all);
}

WindowSet sliding_windows(const TimePanel& panel, std::size_t length, std::size_t horizon) {
  if (length < 1 || horizon < 1) throw std::invalid_argument("sliding_windows: L and h must be at least 1");
  WindowSet set{length, panel.n_features(), horizon, {}};
  const std::size_t nt = panel.n_dates(), d = panel.n_features();
  for (std::size_t i = 0; i < panel.n_tickers(); ++i) {
    std::size_t t = 0;
    while (t < nt) {
      if (!panel.mask[panel.cell(t, i)]) {
        ++t;
        continue;
      }
      std::size_t run_end = t;  // exclusive
      while (run_end < nt && panel.mask[panel.cell(run_end, i)]) ++run_end;
      // window [e-L+1, e]; its targets are realized on e+1 .. e+h, all inside [t, run_end)
      for (std::size_t e = t + length - 1; e + horizon < run_end; ++e) {
        WindowSample s;
        s.ticker = panel.tickers[i];
        s.start_date = panel.dates[e + 1 - length];
        s.end_date = panel.dates[e];
        s.target_date = panel.dates[e + horizon];
        s.window.reserve(length * d);
        for (std::size_t u = e + 1 - length; u <= e; ++u) {
          const double* row = &panel.features[panel.cell(u, i) * d];
          s.window.insert(s.window.end(), row, row + d);
        }
        for (std::size_t u = e; u < e + horizon; ++u) s.target.push_back(panel.target[panel.cell(u, i)]);
        s.realized = panel.returns[panel.cell(e, i)];
        set.samples.push_back(std::move(s));
      }
      t = run_end;
    }
  }
  return set;
}

}  // namespace zsmeta::dataio
