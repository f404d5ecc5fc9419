#include "zsmeta/dataio/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

namespace zsmeta::dataio {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y, m, d);
  return buf;
}

// Rounds to the precision written in the CSV so in-memory and on-disk paths agree.
double as_written(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return std::strtod(buf, nullptr);
}

double lerp(double lo, double hi, std::size_t r, std::size_t n) {
  return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(n - 1);
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_tickers < 5) throw std::invalid_argument("synthetic data needs at least 5 tickers, got " + std::to_string(n_tickers));
  if (n_days < 100) throw std::invalid_argument("synthetic data needs at least 100 days, got " + std::to_string(n_days));
  if (n_regimes < 1) throw std::invalid_argument("synthetic data needs at least 1 regime");
  if (!is_iso_date(start_date)) throw std::invalid_argument("malformed start date '" + start_date + "'");
  if (!(stay_probability >= 0.0 && stay_probability <= 1.0)) throw std::invalid_argument("stay_probability outside [0, 1]");
  if (!(base_vol > 0.0) || !(vol_step >= 1.0)) throw std::invalid_argument("volatility parameters must be positive");
  if (std::abs(factor_ar_low) >= 1.0 || std::abs(factor_ar_high) >= 1.0) {
    throw std::invalid_argument("factor autocorrelation must lie in (-1, 1)");
  }
}

double SyntheticConfig::volatility(std::size_t r) const { return base_vol * std::pow(vol_step, static_cast<double>(r)); }
double SyntheticConfig::reversal(std::size_t r) const { return lerp(reversal_low, reversal_high, r, n_regimes); }
double SyntheticConfig::factor_ar(std::size_t r) const { return lerp(factor_ar_low, factor_ar_high, r, n_regimes); }

std::vector<std::string> business_dates(const std::string& start, std::size_t count) {
  if (!is_iso_date(start)) throw std::invalid_argument("malformed start date '" + start + "'");
  long day = days_from_civil(std::stol(start.substr(0, 4)), static_cast<unsigned>(std::stoul(start.substr(5, 2))),
                             static_cast<unsigned>(std::stoul(start.substr(8, 2))));
  std::vector<std::string> out;
  while (out.size() < count) {
    const long weekday = ((day % 7) + 10) % 7;  // 0 = Monday; 1970-01-01 was a Thursday
    if (weekday < 5) out.push_back(civil_from_days(day));
    ++day;
  }
  return out;
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = cfg.n_tickers, days = cfg.n_days, nr = cfg.n_regimes;

  SyntheticData out;
  out.dates = business_dates(cfg.start_date, days);
  const int width = static_cast<int>(std::to_string(n - 1).size());
  for (std::size_t i = 0; i < n; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "T%0*zu", std::min(std::max(width, 3), 20), i);
    out.tickers.emplace_back(buf);
  }

  std::vector<std::vector<double>> loading(nr, std::vector<double>(n));
  for (auto& row : loading)
    for (auto& b : row) b = 1.0 + cfg.loading_spread * gauss(rng);
  std::vector<double> base_price(n), base_volume(n);
  for (std::size_t i = 0; i < n; ++i) {
    base_price[i] = 50.0 * std::exp(0.3 * gauss(rng));
    base_volume[i] = 1e6 * std::exp(0.5 * gauss(rng));
  }

  out.regimes.resize(days);
  std::size_t regime = 0;
  for (std::size_t t = 0; t < days; ++t) {
    if (t > 0 && nr > 1 && unit(rng) >= cfg.stay_probability) {
      std::size_t next = std::uniform_int_distribution<std::size_t>(0, nr - 2)(rng);
      regime = next >= regime ? next + 1 : next;
    }
    out.regimes[t] = regime;
  }

  std::vector<double> close(base_price), shock(n, 0.0);
  double factor = 0.0;
  out.rows.reserve(n * days);
  for (std::size_t t = 0; t < days; ++t) {
    const std::size_t r = out.regimes[t];
    const double sigma = cfg.volatility(r), phi = cfg.factor_ar(r), kappa = cfg.reversal(r);
    factor = phi * factor + sigma * std::sqrt(1.0 - phi * phi) * gauss(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = sigma * gauss(rng);
      double ret = t == 0 ? 0.0 : loading[r][i] * factor + e - kappa * shock[i];
      ret = std::clamp(ret, -0.5, 0.5);
      shock[i] = e;
      const double prev = close[i];
      close[i] = as_written(prev * (1.0 + ret), "%.6f");
      if (close[i] <= 0.0) close[i] = 1e-6;

      PriceRow row;
      row.date = out.dates[t];
      row.ticker = out.tickers[i];
      row.close = close[i];
      row.open = as_written(std::max(1e-6, prev * (1.0 + 0.2 * sigma * gauss(rng))), "%.6f");
      const double hi_noise = std::abs(0.5 * sigma * gauss(rng)), lo_noise = std::abs(0.5 * sigma * gauss(rng));
      row.high = as_written(std::max(row.open, row.close) * (1.0 + hi_noise), "%.6f");
      row.low = as_written(std::max(1e-6, std::min(row.open, row.close) * (1.0 - std::min(lo_noise, 0.5))), "%.6f");
      row.volume = as_written(std::max(1.0, base_volume[i] * std::exp(0.5 * std::abs(e) / sigma + 0.2 * gauss(rng))), "%.0f");
      out.rows.push_back(std::move(row));
    }
  }
  out.index = index_series(build_panel(out.rows));
  return out;
}

nlohmann::ordered_json to_json(const SyntheticConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_tickers"] = cfg.n_tickers;
  j["n_days"] = cfg.n_days;
  j["n_regimes"] = cfg.n_regimes;
  j["seed"] = cfg.seed;
  j["start_date"] = cfg.start_date;
  j["stay_probability"] = cfg.stay_probability;
  j["base_vol"] = cfg.base_vol;
  j["vol_step"] = cfg.vol_step;
  j["reversal_low"] = cfg.reversal_low;
  j["reversal_high"] = cfg.reversal_high;
  j["factor_ar_low"] = cfg.factor_ar_low;
  j["factor_ar_high"] = cfg.factor_ar_high;
  j["loading_spread"] = cfg.loading_spread;
  return j;
}

}  // namespace zsmeta::dataio
