#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsmeta/dataio/panel.h"

namespace zsmeta::dataio {

// Regime-switching market. Regime r has volatility base_vol * vol_step^r, a
// factor autocorrelation and an idiosyncratic reversal strength interpolated
// linearly from the low to the high regime, and its own loading vector.
struct SyntheticConfig {
  std::size_t n_tickers = 100;
  std::size_t n_days = 500;
  std::size_t n_regimes = 3;
  std::uint64_t seed = 0;
  std::string start_date = "2020-01-02";
  double stay_probability = 0.98;
  double base_vol = 0.01;
  double vol_step = 2.0;
  double reversal_low = 0.3;
  double reversal_high = 0.1;
  double factor_ar_low = 0.1;
  double factor_ar_high = -0.2;
  double loading_spread = 0.5;

  void validate() const;
  double volatility(std::size_t regime) const;
  double reversal(std::size_t regime) const;
  double factor_ar(std::size_t regime) const;
};

struct SyntheticData {
  std::vector<PriceRow> rows;  // date-major, tickers sorted; values rounded as written to CSV
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  std::vector<std::size_t> regimes;  // per date
  std::vector<double> index;         // per date, equal-weight average close
};

SyntheticData gen_synthetic(const SyntheticConfig& cfg);

// Weekdays from start (inclusive if it is a weekday).
std::vector<std::string> business_dates(const std::string& start, std::size_t count);

nlohmann::ordered_json to_json(const SyntheticConfig& cfg);

}  // namespace zsmeta::dataio
