#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsmeta/diffcore/tape.h"
#include "zsmeta/encoders/params.h"
#include "zsmeta/taskgen/tasks.h"

namespace zsmeta::metalearn {

using diff::Tensor;

struct MetaConfig {
  double inner_lr = 0.01;
  double outer_lr = 0.001;
  std::size_t inner_steps = 1;
  double delta = 1.0;  // Pseudo-Huber scale
  bool first_order = true;  // false is rejected: only first-order updates are implemented
  std::size_t epochs = 30;
  std::size_t batch_size = 512;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  void validate() const;  // std::invalid_argument naming the field
};

nlohmann::ordered_json to_json(const MetaConfig& cfg);

// Every task in a meta step was aborted, or training cannot proceed.
class MetaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scalar loss of the parameters on the given sample rows, built on `tape`.
using SubsetLoss =
    std::function<diff::Var(diff::Tape& tape, std::span<const diff::Var> params, std::span<const std::size_t> rows)>;

// theta' = theta - inner_lr * grad L_support(theta), inner_steps times, on a
// copy. Throws diff::NonFiniteError if a loss or gradient stops being finite.
std::vector<Tensor> inner_adapt(const std::vector<Tensor>& params, const SubsetLoss& loss,
                                std::span<const std::size_t> support, const MetaConfig& cfg);

struct MetaStepResult {
  std::vector<Tensor> params;
  double mean_query_loss = 0.0;  // over surviving tasks
  std::size_t tasks_used = 0;
  std::size_t tasks_aborted = 0;
  std::vector<std::string> diagnostics;  // one per aborted task
};

// First-order step: the query gradient of every surviving task, taken at its
// adapted parameters, is summed in task order and applied once to theta.
// A task with an empty support set is scored at theta (requires inner_steps 0).
MetaStepResult meta_step(const std::vector<Tensor>& params, std::span<const taskgen::MetaTask> tasks,
                         const SubsetLoss& loss, const MetaConfig& cfg);

// Samples for the encoder losses: inputs [N x L x d], targets [N x h].
struct Samples {
  Tensor inputs;
  Tensor targets;

  std::size_t size() const { return inputs.dim(0); }
};

// Mean Pseudo-Huber loss of encoder + head on the selected rows. Keeps a
// reference to `samples`, which must outlive the returned function.
SubsetLoss forecast_loss(const Samples& samples, enc::Arch arch, enc::Dims dims, double delta);

enc::ParamSet inner_adapt(const enc::ParamSet& params, const Samples& samples, std::span<const std::size_t> support,
                          const MetaConfig& cfg);

struct EncoderStep {
  enc::ParamSet params;
  MetaStepResult stats;  // stats.params is left empty
};

EncoderStep meta_step(const enc::ParamSet& params, std::span<const taskgen::MetaTask> tasks, const Samples& samples,
                      const MetaConfig& cfg);

}  // namespace zsmeta::metalearn
