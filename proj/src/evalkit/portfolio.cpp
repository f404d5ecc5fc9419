#include "zsmeta/evalkit/portfolio.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zsmeta::evalkit {

PortfolioResult portfolio_sim(const PredictionPanel& panel, std::size_t top_n) {
  if (top_n == 0) throw EvalError("portfolio_sim: top_n must be positive");
  const auto days = panel.days();
  PortfolioResult out;
  std::vector<double> picked;
  for (const auto& day : days) {
    // day rows are in ticker order, so a stable sort on prediction keeps the tie rule
    std::vector<std::size_t> order(day.pred.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return day.pred[a] > day.pred[b]; });
    const std::size_t n = std::min(top_n, order.size());
    picked.clear();
    for (std::size_t k = 0; k < n; ++k) picked.push_back(day.realized[order[k]]);
    out.dates.push_back(day.date);
    // holding the whole universe is the benchmark itself
    out.excess.push_back(n == order.size() ? 0.0 : stable_mean(picked) - stable_mean(day.realized));
  }
  const double m = stable_mean(out.excess);
  out.ar = m * kTradingDays;
  const auto ratio = icir(out.excess);
  if (ratio) out.ir = *ratio * std::sqrt(kTradingDays);
  return out;
}

}  // namespace zsmeta::evalkit
