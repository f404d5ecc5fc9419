#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsmeta/evalkit/metrics.h"
#include "zsmeta/evalkit/portfolio.h"

namespace zsmeta::evalkit {

struct DailyRow {
  std::string date;
  std::optional<double> ic, rank_ic, excess;

  bool operator==(const DailyRow&) const = default;
};

struct EvalReport {
  std::optional<double> ic, icir, rank_ic, rank_icir;
  double ar = 0.0;
  std::optional<double> ir;
  std::size_t days_used = 0, days_skipped = 0;
  std::size_t top_n = 20;
  std::optional<double> mmd;  // train vs test features, when measured
  std::vector<DailyRow> daily;

  bool operator==(const EvalReport&) const = default;
};

EvalReport evaluate(const PredictionPanel& panel, std::size_t top_n = 20);

// Conventions (benchmark, annualization) are written under "metadata".
nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

void write_daily_csv(std::ostream& out, const EvalReport& report);

}  // namespace zsmeta::evalkit
