#include "zsmeta/gmm/mixture.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace zsmeta::gmm {

void MixtureModel::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  const Eigen::Index d = components[0].mean.size();
  if (d == 0) throw std::invalid_argument("mixture components have zero dimension");
  double total = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    const std::string where = "component " + std::to_string(k) + ": ";
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
      throw std::invalid_argument(where + "inconsistent dimensions");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw std::invalid_argument(where + "weight must be positive");
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument(where + "covariance is not symmetric");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture weights do not sum to 1");
}

EStepResult e_step_with_loglik(const Eigen::MatrixXd& data, const MixtureModel& model) {
  model.validate();
  const Eigen::Index n = data.rows(), d = data.cols(), kk = static_cast<Eigen::Index>(model.size());
  if (n == 0) throw std::invalid_argument("e_step: no data rows");
  if (d != static_cast<Eigen::Index>(model.dim())) {
    throw std::invalid_argument("e_step: data width " + std::to_string(d) + " does not match model dimension " +
                                std::to_string(model.dim()));
  }
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Eigen::MatrixXd logp(n, kk);
  for (Eigen::Index k = 0; k < kk; ++k) {
    const auto& c = model.components[k];
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw NumericalError(k, "covariance is not positive definite");
    }
    const Eigen::MatrixXd centered = (data.rowwise() - c.mean.transpose()).transpose();
    const Eigen::MatrixXd white = llt.matrixL().solve(centered);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(logdet)) throw NumericalError(k, "covariance determinant is not finite");
    logp.col(k) = (std::log(c.weight) - 0.5 * (static_cast<double>(d) * log_2pi + logdet)) -
                  0.5 * white.colwise().squaredNorm().transpose().array();
  }
  EStepResult out{Responsibilities(n, kk), 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logp.row(i).maxCoeff();
    const double lse = mx + std::log((logp.row(i).array() - mx).exp().sum());
    out.gamma.row(i) = (logp.row(i).array() - lse).exp();
    out.loglik += lse;
  }
  return out;
}

Responsibilities e_step(const Eigen::MatrixXd& data, const MixtureModel& model) {
  return e_step_with_loglik(data, model).gamma;
}

namespace {

std::vector<Eigen::Index> starved_columns(const Responsibilities& g) {
  std::vector<Eigen::Index> out;
  const Eigen::RowVectorXd mass = g.colwise().sum();
  for (Eigen::Index k = 0; k < mass.size(); ++k)
    if (!(mass[k] >= kStarvedMass)) out.push_back(k);
  return out;
}

void reseed(Responsibilities& g, const std::vector<Eigen::Index>& starved) {
  std::vector<bool> taken(static_cast<std::size_t>(g.rows()), false);
  for (Eigen::Index k : starved) {
    Eigen::Index best = -1;
    double best_claim = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double claim = g.row(i).maxCoeff();
      if (claim < best_claim) {
        best_claim = claim;
        best = i;
      }
    }
    if (best < 0) throw NumericalError(k, "no row available to reseed starved component");
    taken[static_cast<std::size_t>(best)] = true;
    g.row(best).setZero();
    g(best, k) = 1.0;
  }
}

}  // namespace

MixtureModel m_step(const Eigen::MatrixXd& data, const Responsibilities& gamma) {
  const Eigen::Index n = data.rows(), d = data.cols(), kk = gamma.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("m_step: empty data");
  if (gamma.rows() != n) throw std::invalid_argument("m_step: responsibilities have wrong row count");
  if (kk == 0) throw std::invalid_argument("m_step: zero components");
  if (!gamma.allFinite() || gamma.minCoeff() < 0.0) {
    throw std::invalid_argument("m_step: responsibilities must be finite and non-negative");
  }

  Responsibilities g = gamma;
  if (auto starved = starved_columns(g); !starved.empty()) {
    reseed(g, starved);
    if (auto still = starved_columns(g); !still.empty()) {
      throw NumericalError(still.front(), "no responsibility mass after reseeding");
    }
  }

  const Eigen::RowVectorXd mass = g.colwise().sum();
  const double total = mass.sum();
  MixtureModel model;
  model.components.resize(static_cast<std::size_t>(kk));
  for (Eigen::Index k = 0; k < kk; ++k) {
    auto& c = model.components[k];
    const double nk = mass[k];
    c.weight = nk / total;
    c.mean = data.transpose() * g.col(k) / nk;
    const Eigen::MatrixXd centered = data.rowwise() - c.mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * (centered.array().colwise() * g.col(k).array()).matrix() / nk;
    c.covariance = 0.5 * (cov + cov.transpose());
    c.covariance.diagonal().array() += kCovarianceFloor;
  }
  return model;
}

namespace {

// k-means++ seeding over rows of data.
std::vector<Eigen::VectorXd> seed_means(const Eigen::MatrixXd& data, std::size_t k, std::mt19937_64& rng) {
  const Eigen::Index n = data.rows();
  std::vector<Eigen::VectorXd> means;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  means.push_back(data.row(pick(rng)).transpose());
  Eigen::VectorXd d2 = (data.rowwise() - means.back().transpose()).rowwise().squaredNorm();
  while (means.size() < k) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (!(total > 0.0)) {
      chosen = pick(rng);
    } else {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        if (u < d2[i]) {
          chosen = i;
          break;
        }
        u -= d2[i];
      }
    }
    means.push_back(data.row(chosen).transpose());
    d2 = d2.cwiseMin((data.rowwise() - means.back().transpose()).rowwise().squaredNorm());
  }
  return means;
}

}  // namespace

FitResult fit(const Eigen::MatrixXd& data, const FitOptions& options) {
  const auto n = static_cast<std::size_t>(data.rows());
  const Eigen::Index d = data.cols();
  if (options.components == 0) throw std::invalid_argument("fit: K must be at least 1");
  if (n < options.components) {
    throw std::invalid_argument("fit: need at least K=" + std::to_string(options.components) + " rows, got " +
                                std::to_string(n));
  }
  if (d == 0) throw std::invalid_argument("fit: zero-width data");
  if (!data.allFinite()) throw std::invalid_argument("fit: data contains non-finite values");
  if (options.max_iter < 1) throw std::invalid_argument("fit: max_iter must be positive");

  std::mt19937_64 rng(options.seed);
  const Eigen::VectorXd global_mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - global_mean.transpose();
  Eigen::MatrixXd global_cov = centered.transpose() * centered / static_cast<double>(n);
  global_cov = 0.5 * (global_cov + global_cov.transpose());
  global_cov.diagonal().array() += kCovarianceFloor;

  MixtureModel model;
  for (auto& mean : seed_means(data, options.components, rng)) {
    model.components.push_back({1.0 / static_cast<double>(options.components), std::move(mean), global_cov});
  }

  EStepResult current = e_step_with_loglik(data, model);
  model.loglik = current.loglik;
  model.loglik_history = {current.loglik};
  const double scale = 1.0 / static_cast<double>(n);
  for (int it = 1; it <= options.max_iter; ++it) {
    MixtureModel next = m_step(data, current.gamma);
    EStepResult refreshed = e_step_with_loglik(data, next);
    next.loglik_history = std::move(model.loglik_history);
    next.loglik_history.push_back(refreshed.loglik);
    next.loglik = refreshed.loglik;
    next.iterations = it;
    const double gain = (refreshed.loglik - current.loglik) * scale;
    model = std::move(next);
    current = std::move(refreshed);
    if (gain < options.tol) break;
  }
  return {std::move(model), std::move(current.gamma)};
}

Eigen::MatrixXd rows_to_matrix(const double* values, std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return m;
}

nlohmann::ordered_json to_json(const MixtureModel& model) {
  nlohmann::ordered_json j;
  j["K"] = model.size();
  auto weights = nlohmann::ordered_json::array();
  auto means = nlohmann::ordered_json::array();
  auto covs = nlohmann::ordered_json::array();
  for (const auto& c : model.components) {
    weights.push_back(c.weight);
    means.push_back(std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size()));
    std::vector<double> flat;
    for (Eigen::Index r = 0; r < c.covariance.rows(); ++r)
      for (Eigen::Index s = 0; s < c.covariance.cols(); ++s) flat.push_back(c.covariance(r, s));
    covs.push_back(std::move(flat));
  }
  j["weights"] = std::move(weights);
  j["means"] = std::move(means);
  j["covariances"] = std::move(covs);
  j["loglik"] = model.loglik;
  j["iterations"] = model.iterations;
  return j;
}

}  // namespace zsmeta::gmm
