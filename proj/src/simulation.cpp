#include "fctbn/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fctbn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
  double tau = 0.0;
  while (tau == 0.0) {
    tau = -std::log1p(-uniform()) / rate;
  }
  return tau;
}

std::size_t Rng::categorical(const std::vector<double>& probs) {
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

void Trajectory::validate(std::size_t d) const {
  const auto fail = [&](const std::string& what) {
    throw std::invalid_argument("subject '" + subject_id + "': " + what);
  };
  if (initial_state.size() != d) fail("initial state length does not match d");
  if (!(t_end > t0)) fail("observation window must satisfy t_end > t0");
  StateVector state = initial_state;
  double last = t0;
  for (const auto& e : events) {
    if (e.node >= d) fail("event references unknown node " + std::to_string(e.node));
    if (!(e.time > last)) fail("event times must be strictly increasing and after t0");
    if (e.time > t_end) fail("event after the observation horizon");
    if (e.new_state == state[e.node]) fail("event does not flip node " + std::to_string(e.node));
    state.flip(e.node);
    last = e.time;
  }
}

StateVector Trajectory::state_at(double t) const {
  StateVector state = initial_state;
  for (const auto& e : events) {
    if (e.time > t) break;
    state.set(e.node, e.new_state);
  }
  return state;
}

std::size_t Cohort::num_covariates() const {
  return covariates.empty() ? 0 : covariates.front().size();
}

void Cohort::validate(std::size_t d) const {
  if (trajectories.size() != covariates.size()) {
    throw std::invalid_argument("cohort needs exactly one covariate vector per trajectory");
  }
  const std::size_t m = num_covariates();
  for (std::size_t p = 0; p < trajectories.size(); ++p) {
    trajectories[p].validate(d);
    if (covariates[p].size() != m) {
      throw std::invalid_argument("subject '" + trajectories[p].subject_id +
                                  "': covariate length differs from the cohort's");
    }
  }
}

Cohort Cohort::subset(const std::vector<std::size_t>& indices) const {
  Cohort out;
  out.trajectories.reserve(indices.size());
  out.covariates.reserve(indices.size());
  for (auto p : indices) {
    out.trajectories.push_back(trajectories.at(p));
    out.covariates.push_back(covariates.at(p));
  }
  return out;
}

std::size_t CovariateFactor::width() const {
  return kind == Kind::kCategorical ? levels.size() - 1 : 1;
}

void CovariateSampler::validate() const {
  for (const auto& f : factors) {
    if (f.kind == CovariateFactor::Kind::kCategorical) {
      if (f.levels.size() < 2) {
        throw std::invalid_argument("categorical factor '" + f.name + "' needs >= 2 levels");
      }
      if (f.probs.size() != f.levels.size()) {
        throw std::invalid_argument("factor '" + f.name + "': probs and levels differ in length");
      }
      double total = 0.0;
      for (double p : f.probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("factor '" + f.name + "': negative probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("factor '" + f.name + "': probabilities must sum to 1");
      }
    } else if (!(f.high > f.low)) {
      throw std::invalid_argument("uniform factor '" + f.name + "' needs high > low");
    }
  }
  for (double p : baseline_prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("baseline prevalence must lie in [0, 1]");
    }
  }
}

std::size_t CovariateSampler::encoded_size() const {
  std::size_t m = 1;
  for (const auto& f : factors) m += f.width();
  return m;
}

CovariateSampler::Draw CovariateSampler::draw(Rng& rng) const {
  Draw out;
  std::vector<double> z{1.0};
  for (const auto& f : factors) {
    if (f.kind == CovariateFactor::Kind::kCategorical) {
      const std::size_t level = rng.categorical(f.probs);
      out.raw.push_back(f.levels[level]);
      for (std::size_t l = 1; l < f.levels.size(); ++l) z.push_back(l == level ? 1.0 : 0.0);
    } else {
      const double v = f.low + (f.high - f.low) * rng.uniform();
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out.raw.emplace_back(buf);
      z.push_back(v);
    }
  }
  out.z = CovariateVector(std::move(z));
  return out;
}

StateVector CovariateSampler::draw_initial(Rng& rng, std::size_t d) const {
  StateVector s(d);
  if (baseline_prevalence.empty()) return s;
  if (baseline_prevalence.size() != d) {
    throw std::invalid_argument("baseline prevalence length does not match d");
  }
  for (NodeId i = 0; i < d; ++i) {
    if (rng.uniform() < baseline_prevalence[i]) s.set(i, 1);
  }
  return s;
}

namespace {

void check_inputs(const ModelSpec& spec, const CovariateVector& z, const StateVector& initial) {
  if (initial.size() != spec.d) throw std::invalid_argument("initial state length does not match d");
  if (z.size() != spec.m) throw std::invalid_argument("covariate length does not match m");
}

// Advances `state` from `time` by competing exponentials until `horizon`.
// `on_event` is called for every flip.
template <class OnEvent>
void run_jumps(const ModelSpec& spec, const CovariateVector& z, StateVector& state,
               double horizon, Rng& rng, OnEvent&& on_event) {
  double time = 0.0;
  while (true) {
    double best = std::numeric_limits<double>::infinity();
    NodeId fired = spec.d;
    for (NodeId i = 0; i < spec.d; ++i) {
      const double rate = intensity(spec, i, state, z);
      if (rate <= 0.0) continue;
      const double tau = rng.exponential(rate);
      if (tau < best) {
        best = tau;
        fired = i;
      }
    }
    if (fired == spec.d || time + best > horizon) return;
    time += best;
    state.flip(fired);
    on_event(Event{time, fired, state[fired]});
  }
}

}  // namespace

Trajectory sample_trajectory(const ModelSpec& spec, const CovariateVector& z,
                             const StateVector& initial, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  check_inputs(spec, z, initial);
  Trajectory traj;
  traj.t0 = 0.0;
  traj.t_end = horizon;
  traj.initial_state = initial;
  StateVector state = initial;
  run_jumps(spec, z, state, horizon, rng, [&](const Event& e) { traj.events.push_back(e); });
  return traj;
}

Trajectory sample_trajectory(const ModelSpec& spec, const CovariateVector& z,
                             const StateVector& initial, double horizon, std::uint64_t seed) {
  Rng rng(seed);
  return sample_trajectory(spec, z, initial, horizon, rng);
}

SimulatedCohort simulate_cohort(const ModelSpec& spec, const CovariateSampler& sampler,
                                std::size_t n, double horizon, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("cohort size must be at least 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  sampler.validate();
  if (sampler.encoded_size() != spec.m) {
    throw std::invalid_argument("covariate sampler encodes " + std::to_string(sampler.encoded_size()) +
                                " columns but the model expects m = " + std::to_string(spec.m));
  }
  SimulatedCohort out;
  out.horizon = horizon;
  out.seed = seed;
  out.cohort.trajectories.reserve(n);
  out.cohort.covariates.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    Rng subject_rng(derive_seed(seed, 2 * p + 1));
    auto drawn = sampler.draw(subject_rng);
    StateVector initial = sampler.draw_initial(subject_rng, spec.d);
    Trajectory traj = sample_trajectory(spec, drawn.z, initial, horizon, derive_seed(seed, 2 * p));
    traj.subject_id = "s" + std::to_string(p);
    out.cohort.trajectories.push_back(std::move(traj));
    out.cohort.covariates.push_back(std::move(drawn.z));
    out.raw_covariates.push_back(std::move(drawn.raw));
  }
  return out;
}

std::vector<double> empirical_state_distribution(const ModelSpec& spec, const CovariateVector& z,
                                                 const StateVector& initial, double t,
                                                 std::size_t n_samples, std::uint64_t seed) {
  if (spec.d > 20) throw std::invalid_argument("joint-state table limited to d <= 20");
  if (t < 0.0) throw std::invalid_argument("t must be non-negative");
  if (n_samples == 0) throw std::invalid_argument("n_samples must be at least 1");
  check_inputs(spec, z, initial);
  std::vector<std::uint64_t> counts(std::size_t{1} << spec.d, 0);
  Rng rng(seed);
  for (std::size_t n = 0; n < n_samples; ++n) {
    StateVector state = initial;
    if (t > 0.0) run_jumps(spec, z, state, t, rng, [](const Event&) {});
    ++counts[state.to_index()];
  }
  std::vector<double> out(counts.size());
  for (std::size_t a = 0; a < counts.size(); ++a) {
    out[a] = static_cast<double>(counts[a]) / static_cast<double>(n_samples);
  }
  return out;
}

}  // namespace fctbn
