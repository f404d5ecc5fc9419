#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zsmeta/dataio/features.h"
#include "zsmeta/dataio/panel.h"
#include "zsmeta/dataio/split.h"
#include "zsmeta/dataio/windows.h"

namespace zsmeta::cli {

struct DataOptions {
  std::size_t window = 3;   // L
  std::size_t horizon = 1;  // h
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::size_t split_vol_window = 180;
  std::uint64_t split_seed = 0;
};

struct PreparedData {
  dataio::SplitSpec split;
  std::array<dataio::TimePanel, 3> panels;  // normalized, by SplitPart
  std::array<dataio::WindowSet, 3> windows;

  const dataio::WindowSet& windows_of(dataio::SplitPart p) const { return windows[static_cast<std::size_t>(p)]; }
};

// Split (or validate the given split), then per part: restrict the panel,
// compute features, normalize cross-sectionally, cut windows. The leakage
// check runs last and throws dataio::LeakageError.
PreparedData prepare_data(const dataio::RawPanel& raw, const DataOptions& opts,
                          const std::optional<dataio::SplitSpec>& given = std::nullopt);

}  // namespace zsmeta::cli
