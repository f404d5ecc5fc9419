#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "zsmeta/dataio/panel.h"

namespace zsmeta::dataio {

inline const std::vector<std::size_t> kDefaultLags{1, 2, 3, 5, 10, 20};
inline constexpr std::size_t kVolatilityWindow = 20;

// Feature panel. mask == 1 marks cells whose features are all defined. The
// return stored at date t is realized on t + 1 and is meaningful when that
// cell is also usable.
struct TimePanel {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  std::vector<std::string> feature_names;
  std::vector<double> features;  // [date][ticker][feature]
  std::vector<double> target;    // [date][ticker]; z-scored after normalization
  std::vector<double> returns;   // [date][ticker]; raw next-period return, never rescaled
  std::vector<std::uint8_t> mask;
  bool normalized = false;

  std::size_t n_dates() const { return dates.size(); }
  std::size_t n_tickers() const { return tickers.size(); }
  std::size_t n_features() const { return feature_names.size(); }
  std::size_t cell(std::size_t t, std::size_t i) const { return t * tickers.size() + i; }
  bool target_defined(std::size_t t, std::size_t i) const {
    return mask[cell(t, i)] && t + 1 < dates.size() && mask[cell(t + 1, i)];
  }
  double feature(std::size_t t, std::size_t i, std::size_t f) const {
    return features[cell(t, i) * feature_names.size() + f];
  }
};

// Per lag k: close(t-k)/close(t) and volume(t-k)/volume(t); then the sample
// std of the last `vol_window` one-day returns. Zero volume(t) masks the cell.
TimePanel make_features(const RawPanel& raw, const std::vector<std::size_t>& lags = kDefaultLags,
                        std::size_t vol_window = kVolatilityWindow);

// read_price_csv + build_panel + make_features
TimePanel load_csv(const std::string& path);

// Per date and feature: z-score over usable tickers with population std.
// Slices with fewer than two usable tickers or no spread become 0. Targets
// are scaled the same way over cells where they are defined; raw returns
// are kept.
TimePanel crosssec_normalize(const TimePanel& panel);

}  // namespace zsmeta::dataio
