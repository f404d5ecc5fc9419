#include "zsmeta/cli/pipeline.h"

namespace zsmeta::cli {

using dataio::SplitPart;

PreparedData prepare_data(const dataio::RawPanel& raw, const DataOptions& opts,
                          const std::optional<dataio::SplitSpec>& given) {
  PreparedData out;
  if (given) {
    dataio::validate_split(*given, raw);
    out.split = *given;
  } else {
    out.split = dataio::split_spec(raw, dataio::index_series(raw), opts.ratios, opts.split_vol_window, opts.split_seed);
    dataio::validate_split(out.split, raw);
  }
  for (auto part : {SplitPart::kTrain, SplitPart::kVal, SplitPart::kTest}) {
    const auto k = static_cast<std::size_t>(part);
    // features see only this part's tickers and dates
    out.panels[k] = dataio::crosssec_normalize(dataio::make_features(dataio::split_panel(raw, out.split, part)));
    out.windows[k] = dataio::sliding_windows(out.panels[k], opts.window, opts.horizon);
    if (out.windows[k].size() == 0) {
      throw dataio::DataError(std::string("no usable windows in the ") + dataio::to_string(part) + " split");
    }
  }
  dataio::check_leakage(out.split, {&out.windows[0], &out.windows[1], &out.windows[2]});
  return out;
}

}  // namespace zsmeta::cli
