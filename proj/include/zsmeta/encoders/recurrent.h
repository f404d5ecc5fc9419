#pragma once

#include <span>
#include <vector>

#include "zsmeta/diffcore/ops.h"
#include "zsmeta/encoders/params.h"

namespace zsmeta::enc {

// Parameters as leaf Vars on a tape, in ParamSet canonical order.
struct BoundParams {
  Arch arch = Arch::kGru;
  Dims dims;
  std::vector<diff::Var> vars;
};

BoundParams bind(diff::Tape& tape, const ParamSet& params);
BoundParams bind_vars(Arch arch, Dims dims, std::span<const diff::Var> vars);

// batch is [N x L x d]; returns the final hidden state [N x D]. Hidden (and
// LSTM cell) state starts at zero. GRU step:
//   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br)
//   c = tanh(x Wh + (r*h) Uh + bh),  h' = (1 - z)*h + z*c
diff::Var encode(const BoundParams& params, const Tensor& batch);

// [N x D] -> [N x h]
diff::Var predict(const BoundParams& params, const diff::Var& embeddings);

// Tape-free conveniences ("inference mode"): nothing is retained for
// differentiation beyond the call.
Tensor embed(const ParamSet& params, const Tensor& batch);
Tensor forecast(const ParamSet& params, const Tensor& batch);
Tensor predict_values(const HeadParams& head, const Tensor& embeddings);

}  // namespace zsmeta::enc
