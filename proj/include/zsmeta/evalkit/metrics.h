#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zsmeta::evalkit {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PredictionRow {
  std::string date;
  std::string ticker;
  double pred = 0.0;
  double realized = 0.0;
};

// Rows of one date, sorted by ticker.
struct Day {
  std::string date;
  std::vector<double> pred;
  std::vector<double> realized;
  std::vector<std::string> tickers;
};

struct PredictionPanel {
  std::vector<PredictionRow> rows;

  // (date, ticker) unique, values finite. Throws EvalError.
  void validate() const;
  // Sorted by date; validates first.
  std::vector<Day> days() const;
};

inline constexpr const char* kPredictionHeader = "date,ticker,pred,ret";

PredictionPanel parse_prediction_csv(std::istream& in, const std::string& source);
PredictionPanel read_prediction_csv(const std::string& path);
void write_prediction_csv(std::ostream& out, const PredictionPanel& panel);

// Mean computed around the first element, so constant inputs come back exactly.
double stable_mean(std::span<const double> x);
// Sample standard deviation (n - 1).
double sample_std(std::span<const double> x);

// 1-based average ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

// Pearson correlation; nullopt for n < 2 or a constant side.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct ICSeries {
  std::vector<std::string> dates;
  std::vector<double> values;
  std::size_t days_skipped = 0;

  std::size_t days_used() const { return values.size(); }
};

// Per-day cross-sectional correlation of prediction and realized return.
// rank = true gives the Spearman version. Degenerate days are skipped.
ICSeries ic_series(const PredictionPanel& panel, bool rank);

// mean / sample std. nullopt when fewer than two values or zero spread.
std::optional<double> icir(std::span<const double> series);

}  // namespace zsmeta::evalkit
