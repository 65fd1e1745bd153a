#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fctbn/core.hpp"

namespace fctbn {

// Random stream used by every stochastic routine: std::mt19937_64 seeded
// through a splitmix64 scramble. Uniforms take the top 53 bits; exponentials
// are drawn by inversion, so draws are reproducible across standard libraries.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/splitmix64";

  explicit Rng(std::uint64_t seed);

  double uniform();  // [0, 1)
  double exponential(double rate);
  std::size_t categorical(const std::vector<double>& probs);
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
// Seed of the `stream`-th independent substream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Event {
  double time;
  NodeId node;
  std::uint8_t new_state;
  friend bool operator==(const Event&, const Event&) = default;
};

struct Trajectory {
  std::string subject_id;
  double t0 = 0.0;
  double t_end = 0.0;
  StateVector initial_state;
  std::vector<Event> events;

  // Throws std::invalid_argument naming the subject on any violated invariant.
  void validate(std::size_t d) const;
  StateVector state_at(double t) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Cohort {
  std::vector<Trajectory> trajectories;
  std::vector<CovariateVector> covariates;

  std::size_t size() const { return trajectories.size(); }
  std::size_t num_covariates() const;
  void validate(std::size_t d) const;
  Cohort subset(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Cohort&, const Cohort&) = default;
};

// One risk factor of the synthetic covariate sampler.
struct CovariateFactor {
  enum class Kind { kCategorical, kUniform };
  std::string name;
  Kind kind = Kind::kUniform;
  std::vector<std::string> levels;  // categorical
  std::vector<double> probs;        // categorical, sums to 1
  double low = 0.0;                 // uniform
  double high = 1.0;                // uniform

  // Encoded width: levels - 1 for categorical (first level dropped), 1 for uniform.
  std::size_t width() const;
};

struct CovariateSampler {
  std::vector<CovariateFactor> factors;
  // P(node ON at t = 0), per node; empty means all start OFF.
  std::vector<double> baseline_prevalence;

  void validate() const;
  // Intercept plus one-hot / numeric encoded width.
  std::size_t encoded_size() const;

  struct Draw {
    std::vector<std::string> raw;  // one entry per factor
    CovariateVector z;
  };
  Draw draw(Rng& rng) const;
  StateVector draw_initial(Rng& rng, std::size_t d) const;
};

Trajectory sample_trajectory(const ModelSpec& spec, const CovariateVector& z,
                             const StateVector& initial, double horizon, std::uint64_t seed);

// Same law as sample_trajectory, consuming draws from a caller-owned stream.
Trajectory sample_trajectory(const ModelSpec& spec, const CovariateVector& z,
                             const StateVector& initial, double horizon, Rng& rng);

struct SimulatedCohort {
  Cohort cohort;
  std::vector<std::vector<std::string>> raw_covariates;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::string rng = Rng::kAlgorithm;
};

// Subject p uses derive_seed(seed, 2p) for its trajectory and
// derive_seed(seed, 2p + 1) for covariates and baseline state.
SimulatedCohort simulate_cohort(const ModelSpec& spec, const CovariateSampler& sampler,
                                std::size_t n, double horizon, std::uint64_t seed);

// Monte-Carlo distribution over the 2^D joint states at time t. Entry index
// follows StateVector::to_index.
std::vector<double> empirical_state_distribution(const ModelSpec& spec, const CovariateVector& z,
                                                 const StateVector& initial, double t,
                                                 std::size_t n_samples, std::uint64_t seed);

}  // namespace fctbn
