#include "star/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace star {

namespace {

// Runs one episode, invoking `record` with each step; returns the total
// return. Termination happens either on the environment's say-so or at the
// horizon cap, so every episode has between 1 and horizon() steps.
template <typename Record>
double run_episode(const Env& env, const Policy& policy, Rng& rng, Record&& record) {
  State state = env.reset(rng);
  double total = 0.0;
  const int cap = env.horizon();
  for (int t = 0; t < cap; ++t) {
    const int action = policy.sample(state, rng);
    const double bprob = policy.prob(state, action);
    StepResult result = env.step(state, action, rng);
    record(state, action, result.reward, bprob);
    total += result.reward;
    if (result.terminated) break;
    state = std::move(result.next);
  }
  return total;
}

}  // namespace

Dataset sample_trajectories(const Env& env, const Policy& behavior, int num_episodes,
                            uint64_t seed) {
  if (num_episodes < 1) {
    throw std::invalid_argument("sample_trajectories: num_episodes must be >= 1");
  }
  if (behavior.num_actions() != env.num_actions()) {
    throw std::invalid_argument("sample_trajectories: policy/env action count mismatch");
  }
  Dataset dataset;
  dataset.env_id = env.id();
  dataset.policy_id = behavior.id();
  dataset.seed = seed;
  dataset.episodes.reserve(static_cast<size_t>(num_episodes));
  for (int i = 0; i < num_episodes; ++i) {
    Rng rng(hash_combine(seed, static_cast<uint64_t>(i)));
    Episode episode;
    run_episode(env, behavior, rng,
                [&episode](const State& s, int a, double r, double b) {
                  episode.steps.push_back(StepRecord{s, a, r, b});
                });
    dataset.episodes.push_back(std::move(episode));
  }
  dataset.validate();
  return dataset;
}

McEstimate monte_carlo_return(const Env& env, const Policy& pi, long num_episodes,
                              uint64_t seed) {
  if (num_episodes < 1) {
    throw std::invalid_argument("monte_carlo_return: num_episodes must be >= 1");
  }
  if (pi.num_actions() != env.num_actions()) {
    throw std::invalid_argument("monte_carlo_return: policy/env action count mismatch");
  }
  // Welford's running mean and sum of squared deviations.
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < num_episodes; ++i) {
    Rng rng(hash_combine(seed, static_cast<uint64_t>(i)));
    const double g = run_episode(env, pi, rng, [](const State&, int, double, double) {});
    const double delta = g - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (g - mean);
  }
  McEstimate out;
  out.mean = mean;
  out.num_episodes = num_episodes;
  if (num_episodes > 1) {
    const double var = m2 / static_cast<double>(num_episodes - 1);
    out.std_error = std::sqrt(var / static_cast<double>(num_episodes));
  }
  return out;
}

}  // namespace star
