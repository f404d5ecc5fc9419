#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsmeta/dataio/panel.h"
#include "zsmeta/dataio/windows.h"

namespace zsmeta::dataio {

// A failed leakage or consistency check on a split.
class LeakageError : public DataError {
 public:
  using DataError::DataError;
};

enum class SplitPart { kTrain = 0, kVal = 1, kTest = 2 };
const char* to_string(SplitPart part);

struct Segment {
  std::string regime;      // low | med | high
  std::size_t begin = 0;   // date index, inclusive
  std::size_t end = 0;     // date index, exclusive
  std::string first_date;
  std::string last_date;
  double mean_volatility = 0.0;
};

struct SplitSpec {
  std::array<std::vector<std::string>, 3> tickers;  // by SplitPart, each sorted
  std::array<Segment, 3> segments;                  // by SplitPart
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::size_t vol_window = 180;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  const std::vector<std::string>& tickers_of(SplitPart p) const { return tickers[static_cast<std::size_t>(p)]; }
  const Segment& segment_of(SplitPart p) const { return segments[static_cast<std::size_t>(p)]; }
};

// Rolling sample std of one-period index returns; the window expands over the
// first vol_window dates. Entry 0 copies entry 1.
std::vector<double> rolling_volatility(const std::vector<double>& index, std::size_t vol_window);

// Three equal contiguous date segments (remainder dropped at the end), ranked
// by mean volatility and assigned low->train, med->val, high->test. Tickers are
// shuffled by seed; val and test get floor(n * ratio), train the rest.
SplitSpec split_spec(const RawPanel& raw, const std::vector<double>& index, std::array<double, 3> ratios = {0.6, 0.2, 0.2},
                     std::size_t vol_window = 180, std::uint64_t seed = 0);

RawPanel split_panel(const RawPanel& raw, const SplitSpec& spec, SplitPart part);

// Structural checks against the panel: known tickers, pairwise disjoint and
// exhaustive ticker sets, in-range non-overlapping segments whose dates match.
void validate_split(const SplitSpec& spec, const RawPanel& raw);

// Every window belongs to a ticker of its split and its full span
// (start_date .. target_date) lies inside the split's segment.
void check_leakage(const SplitSpec& spec, const std::array<const WindowSet*, 3>& windows);

nlohmann::ordered_json to_json(const SplitSpec& spec);
SplitSpec split_from_json(const nlohmann::json& j);

}  // namespace zsmeta::dataio
