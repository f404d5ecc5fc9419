#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zsmeta/diffcore/tensor.h"

namespace zsmeta::diff {

using NodeId = std::size_t;

enum class OpKind : std::uint8_t {
  kLeaf,
  kConstant,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kSigmoid,
  kTanh,
  kScale,
  kAddScalar,
  kTranspose,
  kBroadcastRows,
  kSum,
  kPseudoHuber,
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  NodeId id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

struct Node {
  OpKind kind = OpKind::kLeaf;
  std::array<NodeId, 2> inputs{};
  std::uint8_t arity = 0;
  Tensor value;
  std::optional<Tensor> saved;  // extra primal needed by the backward rule
  double scalar = 0.0;
};

// Gradients of one backward pass, keyed by leaf node id. A missing entry
// means the loss does not depend on that leaf (zero gradient).
class GradMap {
 public:
  const Tensor* find(NodeId id) const;
  const Tensor* find(const Var& v) const { return find(v.id()); }
  bool contains(const Var& v) const { return find(v) != nullptr; }
  Tensor get(const Var& v) const;  // zeros of the primal shape when absent
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape;
  std::map<NodeId, Tensor> grads_;
};

// Append-only record of primal values and op kinds. Nodes are appended in
// evaluation order, so the vector itself is a topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);

  Var record(OpKind kind, std::initializer_list<Var> inputs, Tensor value,
             std::optional<Tensor> saved = std::nullopt, double scalar = 0.0);

  GradMap backward(const Var& loss) const;

  const Node& node(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Throws TapeError unless `v` is a live node of this tape.
  void check_owned(const Var& v) const;

 private:
  std::vector<Node> nodes_;
};

}  // namespace zsmeta::diff
