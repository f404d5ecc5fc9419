#pragma once

#include <cstddef>
#include <vector>

#include "zsmeta/gmm/mixture.h"

namespace zsmeta::gmm {

// KL(a || b), closed form for Gaussians.
double kl_divergence(const GaussianComponent& a, const GaussianComponent& b);

// Mean of the two directed divergences. Exactly symmetric in its arguments and
// exactly zero when means and covariances agree within 1e-12.
double symmetric_kl(const GaussianComponent& a, const GaussianComponent& b);

struct ComponentPair {
  std::size_t first = 0;
  std::size_t second = 0;  // first < second
  double divergence = 0.0;

  bool operator==(const ComponentPair&) const = default;
};

// Top m unordered pairs by divergence, ties to the lexicographically smallest.
std::vector<ComponentPair> most_dissimilar_pairs(const MixtureModel& model, std::size_t m);

}  // namespace zsmeta::gmm
