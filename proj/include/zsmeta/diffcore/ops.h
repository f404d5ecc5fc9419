#pragma once

#include <string_view>
#include <variant>

#include "zsmeta/diffcore/tape.h"

namespace zsmeta::diff {

// All ops require identical shapes for binary inputs; the only implicit
// broadcast is against a plain scalar. Row-broadcast of a bias vector goes
// through broadcast_rows explicitly.

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add(const Var& a, double c);
Var scale(const Var& a, double c);
Var sigmoid(const Var& a);
Var tanh(const Var& a);

// [n] -> [rows x n]; backward sums over rows.
Var broadcast_rows(const Var& v, std::size_t rows);
// Sum of all elements, shape {1}.
Var sum(const Var& a);

// Mean Pseudo-Huber loss over all elements of `pred` against a constant target:
// (1/n) * sum delta^2 (sqrt(1 + ((y - yhat)/delta)^2) - 1).
Var pseudo_huber_loss(const Var& pred, const Tensor& target, double delta);

enum class ElementwiseKind { kAdd, kSub, kMul, kSigmoid, kTanh, kScale };

ElementwiseKind parse_elementwise_kind(std::string_view name);

using Operand = std::variant<std::monostate, Var, double>;

// Dispatcher over the pointwise kinds. Binary kinds take a Var of identical
// shape or (add/sub/mul/scale) a scalar; unary kinds take no operand.
Var elementwise(ElementwiseKind kind, const Var& a, const Operand& b = std::monostate{});

// Plain (tape-free) helpers shared with the backward rules.
Tensor matmul_values(const Tensor& a, const Tensor& b);
Tensor transpose_values(const Tensor& a);

}  // namespace zsmeta::diff
