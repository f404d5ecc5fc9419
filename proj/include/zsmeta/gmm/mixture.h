#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace zsmeta::gmm {

inline constexpr double kCovarianceFloor = 1e-6;
inline constexpr double kStarvedMass = 1e-8;

// Linear-algebra failure tied to a specific component.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::size_t component, const std::string& what)
      : std::runtime_error("component " + std::to_string(component) + ": " + what), component_(component) {}
  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct MixtureModel {
  std::vector<GaussianComponent> components;
  double loglik = 0.0;  // total over the fitted data
  int iterations = 0;
  std::vector<double> loglik_history;

  std::size_t size() const noexcept { return components.size(); }
  std::size_t dim() const { return components.empty() ? 0 : static_cast<std::size_t>(components[0].mean.size()); }
  // Throws std::invalid_argument on shape, weight or symmetry violations.
  void validate() const;
};

// N x K posteriors.
using Responsibilities = Eigen::MatrixXd;

struct EStepResult {
  Responsibilities gamma;
  double loglik = 0.0;
};

EStepResult e_step_with_loglik(const Eigen::MatrixXd& data, const MixtureModel& model);
Responsibilities e_step(const Eigen::MatrixXd& data, const MixtureModel& model);

// Starved columns are repaired by moving the least-claimed row onto them.
MixtureModel m_step(const Eigen::MatrixXd& data, const Responsibilities& gamma);

struct FitOptions {
  std::size_t components = 4;
  double tol = 1e-6;  // on mean per-sample log-likelihood
  int max_iter = 200;
  std::uint64_t seed = 0;
};

struct FitResult {
  MixtureModel model;
  Responsibilities gamma;
};

FitResult fit(const Eigen::MatrixXd& data, const FitOptions& options);

// Row-major flat buffer -> N x D matrix.
Eigen::MatrixXd rows_to_matrix(const double* values, std::size_t rows, std::size_t cols);

nlohmann::ordered_json to_json(const MixtureModel& model);

}  // namespace zsmeta::gmm
