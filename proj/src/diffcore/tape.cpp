#include "zsmeta/diffcore/tape.h"

#include <cmath>
#include <string>

#include "zsmeta/diffcore/ops.h"

namespace zsmeta::diff {

namespace {

// C = A * B^T for A [m x n], B [k x n].
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), n = a.dim(1), k = b.dim(0);
  std::vector<double> out(m * k, 0.0);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) acc += ad[i * n + p] * bd[j * n + p];
      out[i * k + j] = acc;
    }
  }
  return Tensor({m, k}, std::move(out));
}

// C = A^T * B for A [n x m], B [n x k].
Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.dim(0), m = a.dim(1), k = b.dim(1);
  std::vector<double> out(m * k, 0.0);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const double av = ad[p * m + i];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) out[i * k + j] += av * bd[p * k + j];
    }
  }
  return Tensor({m, k}, std::move(out));
}

Tensor map_with(const Tensor& g, const Tensor& y, double (*fn)(double, double)) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(g[i], y[i]);
  return Tensor(g.shape(), std::move(out));
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw TapeError("value() on a detached Var");
  return tape_->node(id_).value;
}

const Tensor* GradMap::find(NodeId id) const {
  auto it = grads_.find(id);
  return it == grads_.end() ? nullptr : &it->second;
}

Tensor GradMap::get(const Var& v) const {
  if (const Tensor* g = find(v)) return *g;
  return Tensor::zeros(v.shape());
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this) throw TapeError("node belongs to a different tape (or is detached)");
  if (v.id() >= nodes_.size()) throw TapeError("node id " + std::to_string(v.id()) + " not on tape");
}

Var Tape::record(OpKind kind, std::initializer_list<Var> inputs, Tensor value,
                 std::optional<Tensor> saved, double scalar) {
  if (inputs.size() > 2) throw TapeError("ops take at most two tape inputs");
  Node n;
  n.kind = kind;
  for (const Var& in : inputs) {
    check_owned(in);
    n.inputs[n.arity++] = in.id();
  }
  n.value = std::move(value);
  n.saved = std::move(saved);
  n.scalar = scalar;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Node& Tape::node(NodeId id) const {
  if (id >= nodes_.size()) throw TapeError("node id " + std::to_string(id) + " not on tape");
  return nodes_[id];
}

GradMap Tape::backward(const Var& loss) const {
  check_owned(loss);
  if (loss.value().size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_to_string(loss.shape()));
  }

  // A node needs a gradient only if some leaf lies upstream of it.
  std::vector<char> needs(loss.id() + 1, 0);
  for (NodeId id = 0; id <= loss.id(); ++id) {
    const Node& n = nodes_[id];
    if (n.kind == OpKind::kLeaf) {
      needs[id] = 1;
      continue;
    }
    for (std::uint8_t k = 0; k < n.arity; ++k) needs[id] |= needs[n.inputs[k]];
  }

  std::vector<std::optional<Tensor>> grads(loss.id() + 1);
  grads[loss.id()] = Tensor::full(loss.shape(), 1.0);

  auto accumulate = [&](NodeId id, Tensor g) {
    if (!needs[id]) return;
    auto& slot = grads[id];
    if (!slot) {
      slot = std::move(g);
      return;
    }
    auto dst = slot->mutable_data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };

  for (NodeId id = loss.id() + 1; id-- > 0;) {
    if (!grads[id] || !needs[id]) continue;
    const Node& n = nodes_[id];
    const Tensor& g = *grads[id];
    const NodeId a = n.inputs[0];
    const NodeId b = n.inputs[1];

    switch (n.kind) {
      case OpKind::kLeaf:
      case OpKind::kConstant:
        break;
      case OpKind::kMatmul:
        if (needs[a]) accumulate(a, matmul_nt(g, nodes_[b].value));
        if (needs[b]) accumulate(b, matmul_tn(nodes_[a].value, g));
        break;
      case OpKind::kAdd:
        accumulate(a, g);
        accumulate(b, g);
        break;
      case OpKind::kSub: {
        accumulate(a, g);
        if (needs[b]) accumulate(b, map_with(g, g, [](double gv, double) { return -gv; }));
        break;
      }
      case OpKind::kMul:
        if (needs[a]) accumulate(a, map_with(g, nodes_[b].value, [](double gv, double bv) { return gv * bv; }));
        if (needs[b]) accumulate(b, map_with(g, nodes_[a].value, [](double gv, double av) { return gv * av; }));
        break;
      case OpKind::kSigmoid:
        accumulate(a, map_with(g, n.value, [](double gv, double y) { return gv * y * (1.0 - y); }));
        break;
      case OpKind::kTanh:
        accumulate(a, map_with(g, n.value, [](double gv, double y) { return gv * (1.0 - y * y); }));
        break;
      case OpKind::kScale: {
        std::vector<double> out(g.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * n.scalar;
        accumulate(a, Tensor(g.shape(), std::move(out)));
        break;
      }
      case OpKind::kAddScalar:
        accumulate(a, g);
        break;
      case OpKind::kTranspose:
        accumulate(a, transpose_values(g));
        break;
      case OpKind::kBroadcastRows: {
        const std::size_t rows = g.dim(0), cols = g.dim(1);
        std::vector<double> out(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) out[c] += g[r * cols + c];
        accumulate(a, Tensor({cols}, std::move(out)));
        break;
      }
      case OpKind::kSum:
        accumulate(a, Tensor::full(nodes_[a].value.shape(), g.item()));
        break;
      case OpKind::kPseudoHuber: {
        const Tensor& pred = nodes_[a].value;
        const Tensor& target = *n.saved;
        const double delta = n.scalar;
        const double scale = g.item() / static_cast<double>(pred.size());
        std::vector<double> out(pred.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
          const double r = target[i] - pred[i];
          const double u = r / delta;
          out[i] = -scale * r / std::sqrt(1.0 + u * u);
        }
        accumulate(a, Tensor(pred.shape(), std::move(out)));
        break;
      }
    }
  }

  GradMap result;
  for (NodeId id = 0; id <= loss.id(); ++id) {
    if (nodes_[id].kind == OpKind::kLeaf && grads[id]) result.grads_.emplace(id, std::move(*grads[id]));
  }
  return result;
}

}  // namespace zsmeta::diff
