#include "zsmeta/dataio/panel.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace zsmeta::dataio {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, const std::string& where, const char* name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw DataError(where + ": field '" + name + "' is not a number: '" + field + "'");
  }
  if (!std::isfinite(v)) throw DataError(where + ": field '" + name + "' is not finite");
  return v;
}

}  // namespace

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = std::stoi(s.substr(5, 2)), day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::vector<PriceRow> parse_price_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) throw DataError(source + ": empty file");
  if (line != kPriceHeader) {
    throw DataError(source + ":1: expected header '" + std::string(kPriceHeader) + "', got '" + line + "'");
  }
  std::vector<PriceRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  while (next_line()) {
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto f = split_fields(line);
    if (f.size() != 7) throw DataError(where + ": expected 7 fields, got " + std::to_string(f.size()));
    PriceRow r;
    r.date = f[0];
    r.ticker = f[1];
    if (!is_iso_date(r.date)) throw DataError(where + ": malformed date '" + r.date + "'");
    if (r.ticker.empty()) throw DataError(where + ": empty ticker");
    r.open = parse_number(f[2], where, "open");
    r.high = parse_number(f[3], where, "high");
    r.low = parse_number(f[4], where, "low");
    r.close = parse_number(f[5], where, "close");
    r.volume = parse_number(f[6], where, "volume");
    if (r.open <= 0 || r.high <= 0 || r.low <= 0 || r.close <= 0) {
      throw DataError(where + ": prices must be positive");
    }
    if (r.volume < 0) throw DataError(where + ": volume must be non-negative");
    const auto [it, inserted] = seen.try_emplace({r.date, r.ticker}, line_no);
    if (!inserted) {
      throw DataError(where + ": duplicate row for (" + r.date + ", " + r.ticker + "), first seen on line " +
                      std::to_string(it->second));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError(source + ": no data rows");
  return rows;
}

std::vector<PriceRow> read_price_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_price_csv(in, path);
}

void write_price_csv(std::ostream& out, const std::vector<PriceRow>& rows) {
  out << kPriceHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.0f", r.open, r.high, r.low, r.close, r.volume);
    out << r.date << ',' << r.ticker << ',' << buf << '\n';
  }
}

RawPanel build_panel(const std::vector<PriceRow>& rows) {
  std::set<std::string> dates, tickers;
  for (const auto& r : rows) {
    dates.insert(r.date);
    tickers.insert(r.ticker);
  }
  RawPanel p;
  p.dates.assign(dates.begin(), dates.end());
  p.tickers.assign(tickers.begin(), tickers.end());
  const std::size_t cells = p.dates.size() * p.tickers.size();
  p.close.assign(cells, std::numeric_limits<double>::quiet_NaN());
  p.volume.assign(cells, std::numeric_limits<double>::quiet_NaN());
  p.present.assign(cells, 0);
  std::map<std::string, std::size_t> di, ti;
  for (std::size_t t = 0; t < p.dates.size(); ++t) di[p.dates[t]] = t;
  for (std::size_t i = 0; i < p.tickers.size(); ++i) ti[p.tickers[i]] = i;
  for (const auto& r : rows) {
    const std::size_t c = p.cell(di[r.date], ti[r.ticker]);
    if (p.present[c]) throw DataError("duplicate row for (" + r.date + ", " + r.ticker + ")");
    p.close[c] = r.close;
    p.volume[c] = r.volume;
    p.present[c] = 1;
  }
  return p;
}

RawPanel subpanel(const RawPanel& raw, const std::vector<std::string>& tickers, std::size_t begin, std::size_t end) {
  if (begin >= end || end > raw.n_dates()) throw DataError("subpanel: invalid date range");
  std::vector<std::size_t> cols;
  std::vector<std::string> sorted = tickers;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& t : sorted) {
    const auto it = std::lower_bound(raw.tickers.begin(), raw.tickers.end(), t);
    if (it == raw.tickers.end() || *it != t) throw DataError("subpanel: unknown ticker '" + t + "'");
    cols.push_back(static_cast<std::size_t>(it - raw.tickers.begin()));
  }
  RawPanel p;
  p.dates.assign(raw.dates.begin() + static_cast<std::ptrdiff_t>(begin), raw.dates.begin() + static_cast<std::ptrdiff_t>(end));
  p.tickers = sorted;
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t c : cols) {
      p.close.push_back(raw.close[raw.cell(t, c)]);
      p.volume.push_back(raw.volume[raw.cell(t, c)]);
      p.present.push_back(raw.present[raw.cell(t, c)]);
    }
  }
  return p;
}

std::vector<double> index_series(const RawPanel& raw) {
  std::vector<double> out(raw.n_dates(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 0; t < raw.n_dates(); ++t) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < raw.n_tickers(); ++i) {
      if (!raw.present[raw.cell(t, i)]) continue;
      s += raw.close[raw.cell(t, i)];
      ++n;
    }
    if (n) out[t] = s / static_cast<double>(n);
  }
  return out;
}

}  // namespace zsmeta::dataio
