#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "zsmeta/dataio/features.h"
#include "zsmeta/diffcore/tensor.h"

namespace zsmeta::dataio {

struct WindowSample {
  std::string ticker;
  std::string start_date;   // first date in the window
  std::string end_date;     // last date in the window (the prediction date)
  std::string target_date;  // date on which the last target return is realized
  std::vector<double> window;  // L x d, row-major
  std::vector<double> target;  // h values, from the panel's target field
  double realized = 0.0;       // raw next-period return after end_date
};

struct WindowSet {
  std::size_t length = 0;   // L
  std::size_t features = 0; // d
  std::size_t horizon = 0;  // h
  std::vector<WindowSample> samples;

  std::size_t size() const { return samples.size(); }
  // [n x L x d] and [n x h] for the selected samples, in the given order.
  diff::Tensor inputs(std::span<const std::size_t> indices) const;
  diff::Tensor targets(std::span<const std::size_t> indices) const;
  diff::Tensor all_inputs() const;
};

// Per ticker, each maximal run of T consecutive usable dates yields
// max(0, T - L - h + 1) windows: L input dates followed by h target dates.
// Windows never straddle a masked date.
WindowSet sliding_windows(const TimePanel& panel, std::size_t length, std::size_t horizon);

}  // namespace zsmeta::dataio
