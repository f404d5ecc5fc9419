#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "zsmeta/diffcore/tensor.h"

namespace zsmeta::enc {

using diff::Tensor;

// Transformer is intentionally absent; a new architecture is a new enumerator
// plus a cell in recurrent.cpp.
enum class Arch { kGru, kLstm };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view name);

struct Dims {
  std::size_t input = 0;    // d, features per time step
  std::size_t embed = 0;    // D, hidden state / embedding width
  std::size_t horizon = 1;  // h, forecast steps

  bool operator==(const Dims&) const = default;
};

// Input weights are d x D and recurrences D x D so a step is x*W + h*U + b.
struct GruParams {
  Tensor w_z, w_r, w_h;
  Tensor u_z, u_r, u_h;
  Tensor b_z, b_r, b_h;
};

struct LstmParams {
  Tensor w_i, w_f, w_o, w_g;
  Tensor u_i, u_f, u_o, u_g;
  Tensor b_i, b_f, b_o, b_g;
};

// y = W h + b with W [h x D].
struct HeadParams {
  Tensor weight;
  Tensor bias;
};

class ParamSet {
 public:
  ParamSet(Dims dims, GruParams encoder, HeadParams head);
  ParamSet(Dims dims, LstmParams encoder, HeadParams head);

  // Rebuilds from tensors in canonical order (see names()).
  static ParamSet from_tensors(Arch arch, Dims dims, std::vector<Tensor> tensors);
  static ParamSet unflatten(Arch arch, Dims dims, std::span<const double> flat);

  Arch arch() const noexcept;
  const Dims& dims() const noexcept { return dims_; }
  const GruParams& gru() const;
  const LstmParams& lstm() const;
  const HeadParams& head() const noexcept { return head_; }

  // Canonical tensor names, encoder gates first, then head.weight, head.bias.
  static std::vector<std::string> names(Arch arch);
  std::vector<Tensor> tensors() const;
  std::vector<double> flatten() const;
  std::size_t parameter_count() const;

  // FNV-1a over the raw bytes of every value; used for purity checks.
  std::uint64_t fingerprint() const;

  bool operator==(const ParamSet& other) const;

 private:
  void validate() const;

  Dims dims_;
  std::variant<GruParams, LstmParams> encoder_;
  HeadParams head_;
};

// Weights ~ U(-sqrt(1/D), sqrt(1/D)) per matrix, biases zero.
ParamSet init_params(Arch arch, Dims dims, std::uint64_t seed);

nlohmann::ordered_json to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& j);

}  // namespace zsmeta::enc
