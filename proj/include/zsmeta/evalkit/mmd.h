#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace zsmeta::evalkit {

// Median of all pairwise Euclidean distances between distinct rows of the
// pooled set X u Y. Exact; memory stays linear in the number of rows.
double median_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Square root of the biased squared MMD with k(a, b) = exp(-|a-b|^2 / (2 s^2)).
// Row order does not matter and the result is symmetric in (x, y).
double mmd_with_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double bandwidth);

// Median-heuristic bandwidth. Returns 0 when every pooled row is identical.
double mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Seeded selection of at most `cap` rows, kept in their original order.
Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& m, std::size_t cap, std::uint64_t seed);

}  // namespace zsmeta::evalkit
