#include "zsmeta/diffcore/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace zsmeta::diff {

namespace {

double evaluate(const LossBuilder& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.leaf(p));
  try {
    const Var loss = f(tape, vars);
    const double v = loss.value().item();
    if (!std::isfinite(v)) throw NonFiniteError("loss is not finite");
    return v;
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(std::string("finite_diff_check: non-finite evaluation: ") + e.what());
  }
}

}  // namespace

std::pair<double, std::vector<Tensor>> value_and_grad(const LossBuilder& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.leaf(p));
  const Var loss = f(tape, vars);
  const GradMap grads = tape.backward(loss);
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(grads.get(v));
  return {loss.value().item(), std::move(out)};
}

GradCheckResult finite_diff_check(const LossBuilder& f, const std::vector<Tensor>& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw std::invalid_argument("finite_diff_check: eps must lie in [1e-7, 1e-3], got " + std::to_string(eps));
  }
  const auto [loss, analytic] = value_and_grad(f, params);
  (void)loss;

  GradCheckResult result;
  bool first = true;
  std::vector<Tensor> probe = params;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    auto values = probe[p].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + eps;
      const double up = evaluate(f, probe);
      values[i] = original - eps;
      const double down = evaluate(f, probe);
      values[i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (first || rel > result.max_relative_error) {
        result = {rel, p, i, a, numeric};
        first = false;
      }
    }
  }
  return result;
}

}  // namespace zsmeta::diff
