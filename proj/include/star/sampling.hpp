#pragma once

#include <cstdint>

#include "star/dataset.hpp"
#include "star/env.hpp"
#include "star/policy.hpp"

namespace star {

// Rolls out `num_episodes` episodes of `behavior` on `env`. Each step records
// the acted-in state, the action, the reward, and the behavior probability of
// the action. Episode i draws from its own generator seeded by
// hash_combine(seed, i), so datasets are reproducible and episodes are
// independent of how many others are sampled.
Dataset sample_trajectories(const Env& env, const Policy& behavior, int num_episodes,
                            uint64_t seed);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long num_episodes = 0;
};

// Monte Carlo estimate of the expected return of `pi` on `env`. Uses the same
// per-episode seeding scheme as sample_trajectories (so with equal seeds the
// mean equals the sampled dataset's mean return) but does not materialize
// trajectories, which keeps very large truth runs cheap.
McEstimate monte_carlo_return(const Env& env, const Policy& pi, long num_episodes, uint64_t seed);

}  // namespace star
