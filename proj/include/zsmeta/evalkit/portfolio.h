#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "zsmeta/evalkit/metrics.h"

namespace zsmeta::evalkit {

inline constexpr double kTradingDays = 252.0;

struct PortfolioResult {
  std::vector<std::string> dates;
  std::vector<double> excess;  // top-n mean minus equal-weight universe mean
  double ar = 0.0;             // mean(excess) * 252
  std::optional<double> ir;    // mean / std * sqrt(252); nullopt if undefined
};

// Daily rebalanced, equal-weight long-only top-n by prediction. Ties on the
// prediction go to the lexicographically smaller ticker. No costs.
PortfolioResult portfolio_sim(const PredictionPanel& panel, std::size_t top_n = 20);

}  // namespace zsmeta::evalkit
