#include "zsmeta/diffcore/ops.h"

#include <cmath>
#include <string>

namespace zsmeta::diff {

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw TapeError("op applied to a detached Var");
  return *a.tape();
}

void require_same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape() || !a.valid()) throw TapeError("op inputs live on different tapes");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(a.shape()));
  }
}

template <class Fn>
Tensor unary_values(const Tensor& a, Fn fn) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[i]);
  return Tensor(a.shape(), std::move(out));
}

template <class Fn>
Tensor binary_values(const Tensor& a, const Tensor& b, Fn fn) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[i], b[i]);
  return Tensor(a.shape(), std::move(out));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " * " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return Tensor({m, n}, std::move(out));
}

Tensor transpose_values(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  return Tensor({c, r}, std::move(out));
}

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  return tape_of(a).record(OpKind::kMatmul, {a, b}, matmul_values(a.value(), b.value()));
}

Var transpose(const Var& a) {
  return tape_of(a).record(OpKind::kTranspose, {a}, transpose_values(a.value()));
}

Var add(const Var& a, const Var& b) {
  require_same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  return tape_of(a).record(OpKind::kAdd, {a, b},
                           binary_values(a.value(), b.value(), [](double x, double y) { return x + y; }));
}

Var sub(const Var& a, const Var& b) {
  require_same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  return tape_of(a).record(OpKind::kSub, {a, b},
                           binary_values(a.value(), b.value(), [](double x, double y) { return x - y; }));
}

Var mul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  return tape_of(a).record(OpKind::kMul, {a, b},
                           binary_values(a.value(), b.value(), [](double x, double y) { return x * y; }));
}

Var add(const Var& a, double c) {
  return tape_of(a).record(OpKind::kAddScalar, {a}, unary_values(a.value(), [c](double x) { return x + c; }),
                           std::nullopt, c);
}

Var scale(const Var& a, double c) {
  return tape_of(a).record(OpKind::kScale, {a}, unary_values(a.value(), [c](double x) { return x * c; }),
                           std::nullopt, c);
}

Var sigmoid(const Var& a) {
  return tape_of(a).record(OpKind::kSigmoid, {a}, unary_values(a.value(), stable_sigmoid));
}

Var tanh(const Var& a) {
  return tape_of(a).record(OpKind::kTanh, {a}, unary_values(a.value(), [](double x) { return std::tanh(x); }));
}

Var broadcast_rows(const Var& v, std::size_t rows) {
  const Tensor& val = v.value();
  if (val.rank() != 1) throw ShapeError("broadcast_rows: expected a vector, got " + shape_to_string(val.shape()));
  if (rows == 0) throw ShapeError("broadcast_rows: row count must be positive");
  const std::size_t cols = val.dim(0);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = val[c];
  return tape_of(v).record(OpKind::kBroadcastRows, {v}, Tensor({rows, cols}, std::move(out)));
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (double x : a.value().data()) acc += x;
  return tape_of(a).record(OpKind::kSum, {a}, Tensor::scalar(acc));
}

Var pseudo_huber_loss(const Var& pred, const Tensor& target, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("pseudo_huber_loss: delta must be positive");
  const Tensor& p = pred.value();
  if (p.size() != target.size()) {
    throw ShapeError("pseudo_huber_loss: prediction " + shape_to_string(p.shape()) + " vs target " +
                     shape_to_string(target.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double u = (target[i] - p[i]) / delta;
    const double x = u * u;
    // sqrt(1+x)-1 written without cancellation for small residuals
    acc += delta * delta * x / (std::sqrt(1.0 + x) + 1.0);
  }
  return tape_of(pred).record(OpKind::kPseudoHuber, {pred}, Tensor::scalar(acc / static_cast<double>(p.size())),
                              target, delta);
}

ElementwiseKind parse_elementwise_kind(std::string_view name) {
  if (name == "add") return ElementwiseKind::kAdd;
  if (name == "sub") return ElementwiseKind::kSub;
  if (name == "mul") return ElementwiseKind::kMul;
  if (name == "sigmoid") return ElementwiseKind::kSigmoid;
  if (name == "tanh") return ElementwiseKind::kTanh;
  if (name == "scale") return ElementwiseKind::kScale;
  throw std::invalid_argument("unknown elementwise kind '" + std::string(name) + "'");
}

Var elementwise(ElementwiseKind kind, const Var& a, const Operand& b) {
  const Var* bv = std::get_if<Var>(&b);
  const double* bs = std::get_if<double>(&b);
  auto need_operand = [&](const char* op) {
    if (!bv && !bs) throw std::invalid_argument(std::string(op) + " needs a second operand");
  };
  auto no_operand = [&](const char* op) {
    if (bv || bs) throw std::invalid_argument(std::string(op) + " takes no second operand");
  };
  switch (kind) {
    case ElementwiseKind::kAdd:
      need_operand("add");
      return bv ? add(a, *bv) : add(a, *bs);
    case ElementwiseKind::kSub:
      need_operand("sub");
      return bv ? sub(a, *bv) : add(a, -*bs);
    case ElementwiseKind::kMul:
      need_operand("mul");
      return bv ? mul(a, *bv) : scale(a, *bs);
    case ElementwiseKind::kScale:
      if (!bs) throw std::invalid_argument("scale needs a scalar operand");
      return scale(a, *bs);
    case ElementwiseKind::kSigmoid:
      no_operand("sigmoid");
      return sigmoid(a);
    case ElementwiseKind::kTanh:
      no_operand("tanh");
      return tanh(a);
  }
  throw std::invalid_argument("unknown elementwise kind " + std::to_string(static_cast<int>(kind)));
}

}  // namespace zsmeta::diff
