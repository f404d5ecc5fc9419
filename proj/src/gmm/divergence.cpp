#include "zsmeta/gmm/divergence.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zsmeta::gmm {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const GaussianComponent& c, const char* who) {
  if (c.covariance.rows() != c.mean.size() || c.covariance.cols() != c.mean.size() || c.mean.size() == 0) {
    throw std::invalid_argument(std::string(who) + ": component dimensions disagree");
  }
  if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument(std::string(who) + ": covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": covariance is not positive definite");
  }
  return llt;
}

bool nearly_equal(const GaussianComponent& a, const GaussianComponent& b) {
  return (a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-12 &&
         (a.covariance - b.covariance).cwiseAbs().maxCoeff() <= 1e-12;
}

// || L_left^{-1} delta L_right^{-T} ||_F^2
double sandwich(const Eigen::LLT<Eigen::MatrixXd>& left, const Eigen::MatrixXd& delta,
                const Eigen::LLT<Eigen::MatrixXd>& right) {
  const Eigen::MatrixXd a = left.matrixL().solve(delta);
  const Eigen::MatrixXd b = right.matrixL().solve(a.transpose());
  return b.squaredNorm();
}

}  // namespace

double kl_divergence(const GaussianComponent& a, const GaussianComponent& b) {
  const auto la = factor(a, "kl_divergence");
  const auto lb = factor(b, "kl_divergence");
  if (a.mean.size() != b.mean.size()) throw std::invalid_argument("kl_divergence: dimension mismatch");
  const auto d = static_cast<double>(a.mean.size());
  // tr(Sb^-1 Sa) = || Lb^-1 La ||_F^2
  const Eigen::MatrixXd la_mat = la.matrixL();
  const double trace = lb.matrixL().solve(la_mat).squaredNorm();
  const double quad = lb.matrixL().solve(b.mean - a.mean).squaredNorm();
  const double logdet_a = 2.0 * la.matrixLLT().diagonal().array().log().sum();
  const double logdet_b = 2.0 * lb.matrixLLT().diagonal().array().log().sum();
  return std::max(0.0, 0.5 * (trace + quad - d + logdet_b - logdet_a));
}

// The log-determinants cancel in the symmetrised sum, and the two trace terms
// combine to tr(Sb^-1 (Sa - Sb) Sa^-1 (Sa - Sb)), a sum of squares.
double symmetric_kl(const GaussianComponent& a, const GaussianComponent& b) {
  const auto la = factor(a, "symmetric_kl");
  const auto lb = factor(b, "symmetric_kl");
  if (a.mean.size() != b.mean.size()) throw std::invalid_argument("symmetric_kl: dimension mismatch");
  if (nearly_equal(a, b)) return 0.0;
  const Eigen::MatrixXd delta = a.covariance - b.covariance;
  const double trace_ab = sandwich(lb, delta, la);
  const double trace_ba = sandwich(la, -delta, lb);
  const Eigen::VectorXd dm = a.mean - b.mean;
  const double qa = la.matrixL().solve(dm).squaredNorm();
  const double qb = lb.matrixL().solve(dm).squaredNorm();
  return 0.25 * (0.5 * (trace_ab + trace_ba) + (qa + qb));
}

std::vector<ComponentPair> most_dissimilar_pairs(const MixtureModel& model, std::size_t m) {
  const std::size_t k = model.size();
  if (k < 2) throw std::invalid_argument("most_dissimilar_pairs: need at least 2 components");
  const std::size_t total = k * (k - 1) / 2;
  if (m < 1 || m > total) {
    throw std::invalid_argument("most_dissimilar_pairs: m=" + std::to_string(m) + " outside [1, " +
                                std::to_string(total) + "]");
  }
  std::vector<ComponentPair> pairs;
  pairs.reserve(total);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      pairs.push_back({i, j, symmetric_kl(model.components[i], model.components[j])});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const ComponentPair& x, const ComponentPair& y) { return x.divergence > y.divergence; });
  pairs.resize(m);
  return pairs;
}

}  // namespace zsmeta::gmm
