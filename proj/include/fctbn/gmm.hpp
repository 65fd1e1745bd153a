#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fctbn {

struct GaussianComponent {
  double mean;
  double variance;
  double weight;
};

struct GmmFit {
  std::vector<GaussianComponent> components;  // sorted by mean
  double log_likelihood = 0.0;
  double bic = 0.0;
  std::size_t iterations = 0;
};

inline constexpr double kGmmVarianceFloor = 1e-12;

// One-dimensional Gaussian mixture by EM, k chosen from `k_candidates` by
// BIC. Means are seeded by k-means++ with a fixed seed; when the data has
// fewer distinct values than k the fit uses fewer components.
GmmFit fit_gmm(std::span<const double> values, std::span<const std::size_t> k_candidates = {},
               std::uint64_t seed = 0x5eed);

}  // namespace fctbn
