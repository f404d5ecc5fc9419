#include "zsmeta/encoders/recurrent.h"

#include <string>

namespace zsmeta::enc {

using diff::ShapeError;
using diff::Tape;
using diff::Var;

namespace {

Tensor time_step(const Tensor& batch, std::size_t t) {
  const std::size_t n = batch.dim(0), len = batch.dim(1), d = batch.dim(2);
  std::vector<double> out(n * d);
  const auto src = batch.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) out[i * d + f] = src[(i * len + t) * d + f];
  return Tensor({n, d}, std::move(out));
}

// x W + h U + b
Var gate_input(const Var& x, const Var& w, const Var& h, const Var& u, const Var& b, std::size_t rows) {
  return add(add(matmul(x, w), matmul(h, u)), broadcast_rows(b, rows));
}

Var gru_encode(Tape& tape, std::span<const Var> p, const Tensor& batch, const Dims& dims) {
  const std::size_t n = batch.dim(0);
  const Var &w_z = p[0], &w_r = p[1], &w_h = p[2];
  const Var &u_z = p[3], &u_r = p[4], &u_h = p[5];
  const Var &b_z = p[6], &b_r = p[7], &b_h = p[8];
  Var h = tape.constant(Tensor::zeros({n, dims.embed}));
  for (std::size_t t = 0; t < batch.dim(1); ++t) {
    const Var x = tape.constant(time_step(batch, t));
    const Var z = sigmoid(gate_input(x, w_z, h, u_z, b_z, n));
    const Var r = sigmoid(gate_input(x, w_r, h, u_r, b_r, n));
    const Var cand = tanh(gate_input(x, w_h, mul(r, h), u_h, b_h, n));
    // (1 - z) * h + z * cand
    h = add(mul(add(scale(z, -1.0), 1.0), h), mul(z, cand));
  }
  return h;
}

Var lstm_encode(Tape& tape, std::span<const Var> p, const Tensor& batch, const Dims& dims) {
  const std::size_t n = batch.dim(0);
  const Var &w_i = p[0], &w_f = p[1], &w_o = p[2], &w_g = p[3];
  const Var &u_i = p[4], &u_f = p[5], &u_o = p[6], &u_g = p[7];
  const Var &b_i = p[8], &b_f = p[9], &b_o = p[10], &b_g = p[11];
  Var h = tape.constant(Tensor::zeros({n, dims.embed}));
  Var c = h;
  for (std::size_t t = 0; t < batch.dim(1); ++t) {
    const Var x = tape.constant(time_step(batch, t));
    const Var i = sigmoid(gate_input(x, w_i, h, u_i, b_i, n));
    const Var f = sigmoid(gate_input(x, w_f, h, u_f, b_f, n));
    const Var o = sigmoid(gate_input(x, w_o, h, u_o, b_o, n));
    const Var g = tanh(gate_input(x, w_g, h, u_g, b_g, n));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
  }
  return h;
}

}  // namespace

BoundParams bind(Tape& tape, const ParamSet& params) {
  BoundParams b{params.arch(), params.dims(), {}};
  for (Tensor& t : params.tensors()) b.vars.push_back(tape.leaf(std::move(t)));
  return b;
}

BoundParams bind_vars(Arch arch, Dims dims, std::span<const Var> vars) {
  const std::size_t want = ParamSet::names(arch).size();
  if (vars.size() != want) {
    throw std::invalid_argument("expected " + std::to_string(want) + " parameter Vars, got " +
                                std::to_string(vars.size()));
  }
  return BoundParams{arch, dims, std::vector<Var>(vars.begin(), vars.end())};
}

Var encode(const BoundParams& params, const Tensor& batch) {
  if (batch.rank() != 3) {
    throw ShapeError("encode expects a [N x L x d] batch, got " + diff::shape_to_string(batch.shape()));
  }
  if (batch.dim(2) != params.dims.input) {
    throw ShapeError("encode: batch feature width " + std::to_string(batch.dim(2)) + " does not match encoder input " +
                     std::to_string(params.dims.input));
  }
  Tape& tape = *params.vars.front().tape();
  std::span<const Var> p(params.vars);
  return params.arch == Arch::kGru ? gru_encode(tape, p, batch, params.dims) : lstm_encode(tape, p, batch, params.dims);
}

Var predict(const BoundParams& params, const Var& embeddings) {
  const Tensor& h = embeddings.value();
  if (h.rank() != 2 || h.dim(1) != params.dims.embed) {
    throw ShapeError("predict: embeddings " + diff::shape_to_string(h.shape()) + " do not match head width " +
                     std::to_string(params.dims.embed));
  }
  const Var& weight = params.vars[params.vars.size() - 2];
  const Var& bias = params.vars.back();
  return add(matmul(embeddings, transpose(weight)), broadcast_rows(bias, h.dim(0)));
}

Tensor embed(const ParamSet& params, const Tensor& batch) {
  Tape scratch;
  return encode(bind(scratch, params), batch).value();
}

Tensor forecast(const ParamSet& params, const Tensor& batch) {
  Tape scratch;
  const BoundParams bound = bind(scratch, params);
  return predict(bound, encode(bound, batch)).value();
}

Tensor predict_values(const HeadParams& head, const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.dim(1) != head.weight.dim(1)) {
    throw ShapeError("predict: embeddings " + diff::shape_to_string(embeddings.shape()) + " do not match head " +
                     diff::shape_to_string(head.weight.shape()));
  }
  Tape scratch;
  const Var h = scratch.constant(embeddings);
  const Var w = scratch.constant(head.weight);
  const Var b = scratch.constant(head.bias);
  return add(matmul(h, transpose(w)), broadcast_rows(b, embeddings.dim(0))).value();
}

}  // namespace zsmeta::enc
