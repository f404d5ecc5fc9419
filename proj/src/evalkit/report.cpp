#include "zsmeta/evalkit/report.h"

#include <cstdio>
#include <map>
#include <ostream>

namespace zsmeta::evalkit {

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nullptr; }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

EvalReport evaluate(const PredictionPanel& panel, std::size_t top_n) {
  const ICSeries ic = ic_series(panel, false);
  const ICSeries ric = ic_series(panel, true);
  const PortfolioResult port = portfolio_sim(panel, top_n);

  EvalReport r;
  if (!ic.values.empty()) r.ic = stable_mean(ic.values);
  if (!ric.values.empty()) r.rank_ic = stable_mean(ric.values);
  r.icir = icir(ic.values);
  r.rank_icir = icir(ric.values);
  r.ar = port.ar;
  r.ir = port.ir;
  r.days_used = ic.days_used();
  r.days_skipped = ic.days_skipped;
  r.top_n = top_n;

  std::map<std::string, DailyRow> rows;
  for (std::size_t k = 0; k < port.dates.size(); ++k) rows[port.dates[k]] = {port.dates[k], {}, {}, port.excess[k]};
  for (std::size_t k = 0; k < ic.dates.size(); ++k) rows[ic.dates[k]].ic = ic.values[k];
  for (std::size_t k = 0; k < ric.dates.size(); ++k) rows[ric.dates[k]].rank_ic = ric.values[k];
  for (auto& [date, row] : rows) r.daily.push_back(row);
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["ic"] = opt(r.ic);
  j["icir"] = opt(r.icir);
  j["rank_ic"] = opt(r.rank_ic);
  j["rank_icir"] = opt(r.rank_icir);
  j["ar"] = r.ar;
  j["ir"] = opt(r.ir);
  j["days_used"] = r.days_used;
  j["days_skipped"] = r.days_skipped;
  j["top_n"] = r.top_n;
  j["mmd"] = opt(r.mmd);
  j["metadata"] = {{"benchmark", "equal_weight_universe"},
                   {"annualization_days", kTradingDays},
                   {"ir_annualized", true},
                   {"rank_ties", "average"},
                   {"icir_std", "sample"},
                   {"mmd", "biased_rbf_median_bandwidth"}};
  auto& daily = j["daily"] = nlohmann::ordered_json::array();
  for (const auto& d : r.daily)
    daily.push_back({{"date", d.date}, {"ic", opt(d.ic)}, {"rank_ic", opt(d.rank_ic)}, {"excess", opt(d.excess)}});
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.ic = opt_from(j, "ic");
  r.icir = opt_from(j, "icir");
  r.rank_ic = opt_from(j, "rank_ic");
  r.rank_icir = opt_from(j, "rank_icir");
  r.ar = j.at("ar").get<double>();
  r.ir = opt_from(j, "ir");
  r.days_used = j.at("days_used").get<std::size_t>();
  r.days_skipped = j.at("days_skipped").get<std::size_t>();
  r.top_n = j.at("top_n").get<std::size_t>();
  r.mmd = opt_from(j, "mmd");
  for (const auto& d : j.at("daily"))
    r.daily.push_back({d.at("date").get<std::string>(), opt_from(d, "ic"), opt_from(d, "rank_ic"), opt_from(d, "excess")});
  return r;
}

void write_daily_csv(std::ostream& out, const EvalReport& r) {
  out << "date,ic,rank_ic,excess\n";
  for (const auto& d : r.daily) out << d.date << ',' << fmt(d.ic) << ',' << fmt(d.rank_ic) << ',' << fmt(d.excess) << '\n';
}

}  // namespace zsmeta::evalkit
