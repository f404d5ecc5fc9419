#include "zsmeta/encoders/params.h"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

namespace zsmeta::enc {

namespace {

using diff::Shape;
using diff::ShapeError;

// Canonical order lives here and nowhere else.
template <class Self, class Fn>
void visit_gru(Self& p, Fn&& fn) {
  fn("w_z", p.w_z); fn("w_r", p.w_r); fn("w_h", p.w_h);
  fn("u_z", p.u_z); fn("u_r", p.u_r); fn("u_h", p.u_h);
  fn("b_z", p.b_z); fn("b_r", p.b_r); fn("b_h", p.b_h);
}

template <class Self, class Fn>
void visit_lstm(Self& p, Fn&& fn) {
  fn("w_i", p.w_i); fn("w_f", p.w_f); fn("w_o", p.w_o); fn("w_g", p.w_g);
  fn("u_i", p.u_i); fn("u_f", p.u_f); fn("u_o", p.u_o); fn("u_g", p.u_g);
  fn("b_i", p.b_i); fn("b_f", p.b_f); fn("b_o", p.b_o); fn("b_g", p.b_g);
}

template <class Self, class Fn>
void visit_head(Self& h, Fn&& fn) {
  fn("head.weight", h.weight);
  fn("head.bias", h.bias);
}

Shape expected_shape(std::string_view name, const Dims& d) {
  if (name == "head.weight") return {d.horizon, d.embed};
  if (name == "head.bias") return {d.horizon};
  switch (name[0]) {
    case 'w': return {d.input, d.embed};
    case 'u': return {d.embed, d.embed};
    default: return {d.embed};
  }
}

void check_dims(const Dims& d) {
  if (d.input == 0 || d.embed == 0 || d.horizon == 0) {
    throw std::invalid_argument("encoder dims must be positive (d=" + std::to_string(d.input) +
                                ", D=" + std::to_string(d.embed) + ", h=" + std::to_string(d.horizon) + ")");
  }
}

}  // namespace

std::string_view to_string(Arch arch) { return arch == Arch::kGru ? "gru" : "lstm"; }

Arch parse_arch(std::string_view name) {
  if (name == "gru") return Arch::kGru;
  if (name == "lstm") return Arch::kLstm;
  throw std::invalid_argument("unknown encoder architecture '" + std::string(name) + "' (expected gru|lstm)");
}

ParamSet::ParamSet(Dims dims, GruParams encoder, HeadParams head)
    : dims_(dims), encoder_(std::move(encoder)), head_(std::move(head)) {
  validate();
}

ParamSet::ParamSet(Dims dims, LstmParams encoder, HeadParams head)
    : dims_(dims), encoder_(std::move(encoder)), head_(std::move(head)) {
  validate();
}

void ParamSet::validate() const {
  check_dims(dims_);
  auto check = [&](std::string_view name, const Tensor& t) {
    const Shape want = expected_shape(name, dims_);
    if (t.shape() != want) {
      throw ShapeError("parameter " + std::string(name) + " has shape " + diff::shape_to_string(t.shape()) +
                       ", expected " + diff::shape_to_string(want));
    }
  };
  std::visit([&](const auto& enc) {
    if constexpr (std::is_same_v<std::decay_t<decltype(enc)>, GruParams>) visit_gru(enc, check);
    else visit_lstm(enc, check);
  }, encoder_);
  visit_head(head_, check);
}

Arch ParamSet::arch() const noexcept {
  return std::holds_alternative<GruParams>(encoder_) ? Arch::kGru : Arch::kLstm;
}

const GruParams& ParamSet::gru() const {
  if (const auto* p = std::get_if<GruParams>(&encoder_)) return *p;
  throw std::logic_error("ParamSet holds LSTM parameters, not GRU");
}

const LstmParams& ParamSet::lstm() const {
  if (const auto* p = std::get_if<LstmParams>(&encoder_)) return *p;
  throw std::logic_error("ParamSet holds GRU parameters, not LSTM");
}

std::vector<std::string> ParamSet::names(Arch arch) {
  std::vector<std::string> out;
  auto push = [&](std::string_view n, const Tensor&) { out.emplace_back(n); };
  GruParams gru;
  LstmParams lstm;
  HeadParams head;
  if (arch == Arch::kGru) visit_gru(gru, push);
  else visit_lstm(lstm, push);
  visit_head(head, push);
  return out;
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  auto push = [&](std::string_view, const Tensor& t) { out.push_back(t); };
  std::visit([&](const auto& enc) {
    if constexpr (std::is_same_v<std::decay_t<decltype(enc)>, GruParams>) visit_gru(enc, push);
    else visit_lstm(enc, push);
  }, encoder_);
  visit_head(head_, push);
  return out;
}

ParamSet ParamSet::from_tensors(Arch arch, Dims dims, std::vector<Tensor> tensors) {
  const std::size_t want = names(arch).size();
  if (tensors.size() != want) {
    throw std::invalid_argument("expected " + std::to_string(want) + " parameter tensors, got " +
                                std::to_string(tensors.size()));
  }
  std::size_t next = 0;
  auto take = [&](std::string_view, Tensor& t) { t = std::move(tensors[next++]); };
  HeadParams head;
  if (arch == Arch::kGru) {
    GruParams g;
    visit_gru(g, take);
    visit_head(head, take);
    return ParamSet(dims, std::move(g), std::move(head));
  }
  LstmParams l;
  visit_lstm(l, take);
  visit_head(head, take);
  return ParamSet(dims, std::move(l), std::move(head));
}

ParamSet ParamSet::unflatten(Arch arch, Dims dims, std::span<const double> flat) {
  check_dims(dims);
  std::vector<Tensor> tensors;
  std::size_t offset = 0;
  for (const std::string& name : names(arch)) {
    Shape shape = expected_shape(name, dims);
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    if (offset + n > flat.size()) throw std::invalid_argument("flat parameter vector too short");
    tensors.emplace_back(std::move(shape), std::vector<double>(flat.begin() + offset, flat.begin() + offset + n));
    offset += n;
  }
  if (offset != flat.size()) throw std::invalid_argument("flat parameter vector too long");
  return from_tensors(arch, dims, std::move(tensors));
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const Tensor& t : tensors()) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors()) n += t.size();
  return n;
}

std::uint64_t ParamSet::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : flatten()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

bool ParamSet::operator==(const ParamSet& other) const {
  return arch() == other.arch() && dims_ == other.dims_ && tensors() == other.tensors();
}

ParamSet init_params(Arch arch, Dims dims, std::uint64_t seed) {
  check_dims(dims);
  std::mt19937_64 rng(seed);
  const double bound = std::sqrt(1.0 / static_cast<double>(dims.embed));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  std::vector<Tensor> tensors;
  for (const std::string& name : ParamSet::names(arch)) {
    Shape shape = expected_shape(name, dims);
    Tensor t = Tensor::zeros(shape);
    if (shape.size() == 2) {
      for (double& v : t.mutable_data()) v = uniform(rng);
    }
    tensors.push_back(std::move(t));
  }
  return ParamSet::from_tensors(arch, dims, std::move(tensors));
}

nlohmann::ordered_json to_json(const ParamSet& params) {
  nlohmann::ordered_json j;
  j["arch"] = std::string(to_string(params.arch()));
  j["dims"] = {{"input", params.dims().input}, {"embed", params.dims().embed}, {"horizon", params.dims().horizon}};
  nlohmann::ordered_json named = nlohmann::ordered_json::object();
  const auto names = ParamSet::names(params.arch());
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < names.size(); ++i) {
    named[names[i]] = std::vector<double>(tensors[i].data().begin(), tensors[i].data().end());
  }
  j["params"] = std::move(named);
  return j;
}

ParamSet params_from_json(const nlohmann::json& j) {
  try {
    const Arch arch = parse_arch(j.at("arch").get<std::string>());
    const Dims dims{j.at("dims").at("input").get<std::size_t>(), j.at("dims").at("embed").get<std::size_t>(),
                    j.at("dims").at("horizon").get<std::size_t>()};
    check_dims(dims);
    std::vector<Tensor> tensors;
    for (const std::string& name : ParamSet::names(arch)) {
      auto values = j.at("params").at(name).get<std::vector<double>>();
      tensors.emplace_back(expected_shape(name, dims), std::move(values));
    }
    return ParamSet::from_tensors(arch, dims, std::move(tensors));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed parameter JSON: ") + e.what());
  }
}

}  // namespace zsmeta::enc
