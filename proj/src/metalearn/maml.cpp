#include "zsmeta/metalearn/maml.h"

#include <cmath>

#include "zsmeta/diffcore/ops.h"
#include "zsmeta/encoders/recurrent.h"

namespace zsmeta::metalearn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("meta config: " + what);
}

bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

// Loss and gradient at `params`; throws NonFiniteError on a non-finite result.
std::pair<double, std::vector<Tensor>> loss_and_grad(const std::vector<Tensor>& params, const SubsetLoss& loss,
                                                     std::span<const std::size_t> rows) {
  diff::Tape tape;
  std::vector<diff::Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p));
  const diff::Var l = loss(tape, vars, rows);
  const double value = l.value().item();
  if (!std::isfinite(value)) throw diff::NonFiniteError("loss is not finite");
  const diff::GradMap grads = tape.backward(l);
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const auto& v : vars) {
    out.push_back(grads.get(v));
    if (!all_finite(out.back())) throw diff::NonFiniteError("gradient is not finite");
  }
  return {value, std::move(out)};
}

// p -= lr * g, rejecting results that overflow.
void descend(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].mutable_data();
    const auto g = grads[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr * g[i];
      if (!std::isfinite(p[i])) throw diff::NonFiniteError("parameter update overflowed");
    }
  }
}

Tensor gather(const Tensor& t, std::span<const std::size_t> rows) {
  const std::size_t stride = t.size() / t.dim(0);
  std::vector<double> v;
  v.reserve(rows.size() * stride);
  for (auto r : rows) {
    if (r >= t.dim(0)) throw std::out_of_range("sample row " + std::to_string(r) + " out of range");
    const auto src = t.data().subspan(r * stride, stride);
    v.insert(v.end(), src.begin(), src.end());
  }
  diff::Shape shape = t.shape();
  shape[0] = rows.size();
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

void MetaConfig::validate() const {
  require(std::isfinite(inner_lr) && inner_lr > 0, "inner_lr must be positive");
  require(std::isfinite(outer_lr) && outer_lr > 0, "outer_lr must be positive");
  require(inner_steps <= 10, "inner_steps must be at most 10");
  require(std::isfinite(delta) && delta > 0, "delta must be positive");
  require(first_order, "first_order=false (second-order MAML) is unsupported");
  require(epochs >= 1, "epochs must be at least 1");
  require(batch_size >= 2, "batch_size must be at least 2");
}

nlohmann::ordered_json to_json(const MetaConfig& c) {
  return {{"inner_lr", c.inner_lr},   {"outer_lr", c.outer_lr},     {"inner_steps", c.inner_steps},
          {"delta", c.delta},         {"first_order", c.first_order}, {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"patience", c.patience},   {"seed", c.seed}};
}

std::vector<Tensor> inner_adapt(const std::vector<Tensor>& params, const SubsetLoss& loss,
                                std::span<const std::size_t> support, const MetaConfig& cfg) {
  if (cfg.inner_steps > 0 && support.empty()) throw std::invalid_argument("inner_adapt: empty support set");
  std::vector<Tensor> theta = params;
  for (std::size_t s = 0; s < cfg.inner_steps; ++s) {
    const auto grads = loss_and_grad(theta, loss, support).second;
    descend(theta, grads, cfg.inner_lr);
  }
  return theta;
}

MetaStepResult meta_step(const std::vector<Tensor>& params, std::span<const taskgen::MetaTask> tasks,
                         const SubsetLoss& loss, const MetaConfig& cfg) {
  if (tasks.empty()) throw std::invalid_argument("meta_step: no tasks");
  if (!(cfg.outer_lr >= 0) || !(cfg.inner_lr >= 0)) throw std::invalid_argument("meta_step: negative learning rate");
  MetaStepResult out;
  std::vector<Tensor> total;
  total.reserve(params.size());
  for (const auto& p : params) total.push_back(Tensor::zeros(p.shape()));
  double loss_sum = 0.0;

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    if (task.query.empty()) throw std::invalid_argument("meta_step: task " + std::to_string(t) + " has no query set");
    try {
      const auto adapted = inner_adapt(params, loss, task.support, cfg);
      auto [value, grads] = loss_and_grad(adapted, loss, task.query);
      for (std::size_t k = 0; k < total.size(); ++k) {
        auto acc = total[k].mutable_data();
        const auto g = grads[k].data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
      }
      loss_sum += value;
      ++out.tasks_used;
    } catch (const diff::NonFiniteError& e) {
      ++out.tasks_aborted;
      out.diagnostics.push_back("task " + std::to_string(t) + " (" + std::string(taskgen::to_string(task.kind)) +
                                ") aborted: " + e.what());
    }
  }
  if (out.tasks_used == 0) {
    throw MetaError("meta_step: all " + std::to_string(tasks.size()) + " tasks aborted; first: " + out.diagnostics.front());
  }
  out.params = params;
  descend(out.params, total, cfg.outer_lr);
  out.mean_query_loss = loss_sum / static_cast<double>(out.tasks_used);
  return out;
}

SubsetLoss forecast_loss(const Samples& samples, enc::Arch arch, enc::Dims dims, double delta) {
  if (samples.inputs.rank() != 3 || samples.targets.rank() != 2 || samples.targets.dim(0) != samples.inputs.dim(0)) {
    throw diff::ShapeError("forecast_loss: expected inputs [N x L x d] and targets [N x h]");
  }
  return [&samples, arch, dims, delta](diff::Tape&, std::span<const diff::Var> params, std::span<const std::size_t> rows) {
    const auto bound = enc::bind_vars(arch, dims, params);
    const diff::Var pred = enc::predict(bound, enc::encode(bound, gather(samples.inputs, rows)));
    return diff::pseudo_huber_loss(pred, gather(samples.targets, rows), delta);
  };
}

enc::ParamSet inner_adapt(const enc::ParamSet& params, const Samples& samples, std::span<const std::size_t> support,
                          const MetaConfig& cfg) {
  const auto loss = forecast_loss(samples, params.arch(), params.dims(), cfg.delta);
  return enc::ParamSet::from_tensors(params.arch(), params.dims(), inner_adapt(params.tensors(), loss, support, cfg));
}

EncoderStep meta_step(const enc::ParamSet& params, std::span<const taskgen::MetaTask> tasks, const Samples& samples,
                      const MetaConfig& cfg) {
  const auto loss = forecast_loss(samples, params.arch(), params.dims(), cfg.delta);
  MetaStepResult stats = meta_step(params.tensors(), tasks, loss, cfg);
  enc::ParamSet next = enc::ParamSet::from_tensors(params.arch(), params.dims(), std::move(stats.params));
  stats.params.clear();
  return {std::move(next), std::move(stats)};
}

}  // namespace zsmeta::metalearn
