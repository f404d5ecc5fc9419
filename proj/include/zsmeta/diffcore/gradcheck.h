#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "zsmeta/diffcore/tape.h"

namespace zsmeta::diff {

// Builds a scalar loss on `tape` from leaf Vars bound to the parameters, in
// the order the parameters were given.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares backward() against central differences coordinate by coordinate.
// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
// eps must lie in [1e-7, 1e-3].
GradCheckResult finite_diff_check(const LossBuilder& f, const std::vector<Tensor>& params, double eps);

// Evaluates f at `params` and returns (loss, gradient per parameter).
std::pair<double, std::vector<Tensor>> value_and_grad(const LossBuilder& f, const std::vector<Tensor>& params);

}  // namespace zsmeta::diff
