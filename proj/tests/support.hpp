#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fctbn/core.hpp"
#include "fctbn/simulation.hpp"

namespace fctbn::testing {

inline ModelSpec zero_spec(const Graph& g, std::size_t m, bool irreversible = true) {
  return ModelSpec(g, CoefficientTensor(g, m), irreversible);
}

// m - 1 covariates, each uniform on [-1, 1].
inline CovariateSampler uniform_sampler(std::size_t m, std::vector<double> prevalence = {}) {
  CovariateSampler s;
  for (std::size_t c = 1; c < m; ++c) {
    CovariateFactor f;
    f.name = "x" + std::to_string(c);
    f.kind = CovariateFactor::Kind::kUniform;
    f.low = -1.0;
    f.high = 1.0;
    s.factors.push_back(f);
  }
  s.baseline_prevalence = std::move(prevalence);
  return s;
}

// Each ordered pair is an edge with probability `density`; intercepts near
// `base`, other entries uniform in [-spread, spread].
inline ModelSpec random_spec(std::size_t d, std::size_t m, Rng& rng, double density, bool irreversible,
                             double base = -2.0, double spread = 0.5) {
  std::vector<std::vector<NodeId>> parents(d);
  for (NodeId i = 0; i < d; ++i) {
    for (NodeId j = 0; j < d; ++j) {
      if (i != j && rng.uniform() < density) parents[i].push_back(j);
    }
  }
  Graph g(parents);
  CoefficientTensor c(g, m);
  for (NodeId i = 0; i < d; ++i) {
    for (int s = 0; s < 2; ++s) {
      if (irreversible && s == 1) continue;
      for (std::size_t k = 0; k <= g.parents(i).size(); ++k) {
        for (std::size_t j = 0; j < m; ++j) {
          double v = spread * (2.0 * rng.uniform() - 1.0);
          if (k == 0 && j == 0) v += base;
          c.at(i, s, k, j) = v;
        }
      }
    }
  }
  return ModelSpec(g, c, irreversible);
}

inline CovariateVector random_z(std::size_t m, Rng& rng) {
  std::vector<double> z{1.0};
  for (std::size_t c = 1; c < m; ++c) z.push_back(2.0 * rng.uniform() - 1.0);
  return CovariateVector(z);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace fctbn::testing
