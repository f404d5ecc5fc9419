#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace zsmeta::dataio {

// Malformed input data (bad CSV rows, duplicate keys, inconsistent splits).
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PriceRow {
  std::string date;  // ISO yyyy-mm-dd
  std::string ticker;
  double open = 0, high = 0, low = 0, close = 0, volume = 0;
};

// Date x ticker grid of closes and volumes; absent cells have present == 0.
struct RawPanel {
  std::vector<std::string> dates;    // strictly increasing
  std::vector<std::string> tickers;  // sorted
  std::vector<double> close;         // [date][ticker]
  std::vector<double> volume;
  std::vector<std::uint8_t> present;

  std::size_t n_dates() const { return dates.size(); }
  std::size_t n_tickers() const { return tickers.size(); }
  std::size_t cell(std::size_t t, std::size_t i) const { return t * tickers.size() + i; }
};

inline constexpr const char* kPriceHeader = "date,ticker,open,high,low,close,volume";

// Both paths reject malformed rows with the 1-based line number.
std::vector<PriceRow> parse_price_csv(std::istream& in, const std::string& source);
std::vector<PriceRow> read_price_csv(const std::string& path);
void write_price_csv(std::ostream& out, const std::vector<PriceRow>& rows);

// Aligns rows into a grid. Duplicate (date, ticker) keys are rejected.
RawPanel build_panel(const std::vector<PriceRow>& rows);

// Restriction to a ticker subset and the date index range [begin, end).
RawPanel subpanel(const RawPanel& raw, const std::vector<std::string>& tickers, std::size_t begin, std::size_t end);

// Equal-weight average close over the tickers present on each date.
std::vector<double> index_series(const RawPanel& raw);

bool is_iso_date(const std::string& s);

}  // namespace zsmeta::dataio
