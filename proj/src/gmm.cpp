#include "fctbn/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fctbn/simulation.hpp"

namespace fctbn {

namespace {

std::vector<double> kmeans_pp(std::span<const double> x, std::size_t k, Rng& rng) {
  std::vector<double> centers;
  centers.push_back(x[static_cast<std::size_t>(rng.uniform() * static_cast<double>(x.size()))]);
  std::vector<double> dist(x.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (x[n] - c) * (x[n] - c));
      dist[n] = best;
      total += best;
    }
    if (total <= 0.0) break;  // fewer distinct values than k
    double u = rng.uniform() * total;
    std::size_t pick = x.size() - 1;
    for (std::size_t n = 0; n < x.size(); ++n) {
      u -= dist[n];
      if (u < 0.0 && dist[n] > 0.0) {
        pick = n;
        break;
      }
    }
    centers.push_back(x[pick]);
  }
  // Lloyd refinement.
  std::vector<std::size_t> label(x.size());
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t n = 0; n < x.size(); ++n) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < centers.size(); ++c) {
        if (std::abs(x[n] - centers[c]) < std::abs(x[n] - centers[best])) best = c;
      }
      label[n] = best;
    }
    std::vector<double> sum(centers.size(), 0.0);
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      sum[label[n]] += x[n];
      ++count[label[n]];
    }
    bool moved = false;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] == 0) continue;
      const double next = sum[c] / static_cast<double>(count[c]);
      if (next != centers[c]) moved = true;
      centers[c] = next;
    }
    if (!moved) break;
  }
  return centers;
}

double log_normal(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

GmmFit fit_em(std::span<const double> x, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<double> centers = kmeans_pp(x, k, rng);
  k = centers.size();
  const std::size_t n = x.size();

  std::vector<GaussianComponent> comp(k);
  {
    std::vector<double> sum_sq(k, 0.0);
    std::vector<double> count(k, 0.0);
    for (double v : x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (std::abs(v - centers[c]) < std::abs(v - centers[best])) best = c;
      }
      sum_sq[best] += (v - centers[best]) * (v - centers[best]);
      count[best] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      comp[c].mean = centers[c];
      comp[c].variance = std::max(count[c] > 0 ? sum_sq[c] / count[c] : 0.0, kGmmVarianceFloor);
      comp[c].weight = std::max(count[c], 1.0) / static_cast<double>(n);
    }
    double wsum = 0.0;
    for (auto& c : comp) wsum += c.weight;
    for (auto& c : comp) c.weight /= wsum;
  }

  std::vector<double> resp(n * k);
  double ll_prev = -std::numeric_limits<double>::infinity();
  GmmFit fit;
  for (std::size_t iter = 1; iter <= 2000; ++iter) {
    // E step.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double lp = std::log(comp[c].weight) + log_normal(x[i], comp[c].mean, comp[c].variance);
        resp[i * k + c] = lp;
        mx = std::max(mx, lp);
      }
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += std::exp(resp[i * k + c] - mx);
      const double lse = mx + std::log(s);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - lse);
    }
    fit.iterations = iter;
    fit.log_likelihood = ll;
    if (std::abs(ll - ll_prev) <= 1e-10 * (1.0 + std::abs(ll))) break;
    ll_prev = ll;
    // M step.
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      double sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + c];
        sx += resp[i * k + c] * x[i];
      }
      if (nk <= 0.0) {
        comp[c].weight = 0.0;
        continue;
      }
      const double mean = sx / nk;
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) sv += resp[i * k + c] * (x[i] - mean) * (x[i] - mean);
      comp[c].mean = mean;
      comp[c].variance = std::max(sv / nk, kGmmVarianceFloor);
      comp[c].weight = nk / static_cast<double>(n);
    }
    std::erase_if(comp, [](const GaussianComponent& c) { return c.weight <= 0.0; });
    if (comp.size() != k) {
      k = comp.size();
      resp.assign(n * k, 0.0);
      ll_prev = -std::numeric_limits<double>::infinity();
    }
  }
  std::sort(comp.begin(), comp.end(),
            [](const GaussianComponent& a, const GaussianComponent& b) { return a.mean < b.mean; });
  double wsum = 0.0;
  for (const auto& c : comp) wsum += c.weight;
  for (auto& c : comp) c.weight /= wsum;
  fit.components = std::move(comp);
  const double params = 3.0 * static_cast<double>(fit.components.size()) - 1.0;
  fit.bic = -2.0 * fit.log_likelihood + params * std::log(static_cast<double>(n));
  return fit;
}

}  // namespace

GmmFit fit_gmm(std::span<const double> values, std::span<const std::size_t> k_candidates,
               std::uint64_t seed) {
  if (values.size() < 10) {
    throw std::invalid_argument("fit_gmm needs at least 10 values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_gmm values must be finite");
  }
  static constexpr std::size_t kDefault[] = {2, 3};
  if (k_candidates.empty()) k_candidates = kDefault;

  GmmFit best;
  bool have = false;
  for (std::size_t k : k_candidates) {
    if (k < 1) throw std::invalid_argument("mixture size must be at least 1");
    GmmFit fit = fit_em(values, k, seed);
    if (!have || fit.bic < best.bic) {
      best = std::move(fit);
      have = true;
    }
  }
  return best;
}

}  // namespace fctbn
