#include "zsmeta/evalkit/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace zsmeta::evalkit {

namespace {

double parse_field(const std::string& field, const std::string& where, const char* name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw EvalError(where + ": field '" + name + "' is not a number: '" + field + "'");
  }
  if (!std::isfinite(v)) throw EvalError(where + ": field '" + name + "' is not finite");
  return v;
}

bool all_equal(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

void PredictionPanel::validate() const {
  if (rows.empty()) throw EvalError("prediction panel is empty");
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (const auto& r : rows) {
    if (!std::isfinite(r.pred) || !std::isfinite(r.realized)) {
      throw EvalError("non-finite value for (" + r.date + ", " + r.ticker + ")");
    }
    if (!seen.emplace(r.date, r.ticker).second) {
      throw EvalError("duplicate prediction for (" + r.date + ", " + r.ticker + ")");
    }
  }
}

std::vector<Day> PredictionPanel::days() const {
  validate();
  std::map<std::string, std::vector<const PredictionRow*>> by_date;
  for (const auto& r : rows) by_date[r.date].push_back(&r);
  std::vector<Day> out;
  out.reserve(by_date.size());
  for (auto& [date, list] : by_date) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->ticker < b->ticker; });
    Day d;
    d.date = date;
    for (const auto* r : list) {
      d.tickers.push_back(r->ticker);
      d.pred.push_back(r->pred);
      d.realized.push_back(r->realized);
    }
    out.push_back(std::move(d));
  }
  return out;
}

PredictionPanel parse_prediction_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line != kPredictionHeader) {
    throw EvalError(source + ":1: expected header '" + std::string(kPredictionHeader) + "'");
  }
  PredictionPanel panel;
  while (next_line()) {
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    std::vector<std::string> f(1);
    for (char c : line) {
      if (c == ',') f.emplace_back();
      else f.back().push_back(c);
    }
    if (f.size() != 4) throw EvalError(where + ": expected 4 fields, got " + std::to_string(f.size()));
    panel.rows.push_back({f[0], f[1], parse_field(f[2], where, "pred"), parse_field(f[3], where, "ret")});
  }
  panel.validate();
  return panel;
}

PredictionPanel read_prediction_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_prediction_csv(in, path);
}

void write_prediction_csv(std::ostream& out, const PredictionPanel& panel) {
  out << kPredictionHeader << '\n';
  char buf[80];
  for (const auto& r : panel.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.pred, r.realized);
    out << r.date << ',' << r.ticker << ',' << buf << '\n';
  }
}

double stable_mean(std::span<const double> x) {
  if (x.empty()) throw EvalError("mean of empty series");
  const double pivot = x.front();
  double s = 0.0;
  for (double v : x) s += v - pivot;
  return pivot + s / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = stable_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw EvalError("pearson: length mismatch");
  if (x.size() < 2 || all_equal(x) || all_equal(y)) return std::nullopt;
  const double mx = stable_mean(x), my = stable_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ICSeries ic_series(const PredictionPanel& panel, bool rank) {
  ICSeries out;
  for (const auto& day : panel.days()) {
    std::optional<double> c;
    if (rank) {
      const auto rp = average_ranks(day.pred), rr = average_ranks(day.realized);
      c = pearson(rp, rr);
    } else {
      c = pearson(day.pred, day.realized);
    }
    if (!c) {
      ++out.days_skipped;
      continue;
    }
    out.dates.push_back(day.date);
    out.values.push_back(*c);
  }
  return out;
}

std::optional<double> icir(std::span<const double> series) {
  if (series.size() < 2 || all_equal(series)) return std::nullopt;
  const double sd = sample_std(series);
  if (!(sd > 0.0)) return std::nullopt;
  return stable_mean(series) / sd;
}

}  // namespace zsmeta::evalkit
