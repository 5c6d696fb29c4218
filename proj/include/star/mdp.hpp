#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "star/policy.hpp"

namespace star {

// Finite MDP with entry-based termination: after playing action a in state s
// the process moves to s' ~ transition[a](s, .), collects reward(s, a), and
// then terminates with probability term(s'). Episodes are additionally capped
// at `horizon` acted steps, so every episode has length in [1, horizon].
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Eigen::MatrixXd> transition;  // one row-stochastic S x S matrix per action
  Eigen::MatrixXd reward;                   // S x A
  Eigen::VectorXd initial;                  // distribution over start states
  Eigen::VectorXd term;                     // per-state termination probability on entry
  int horizon = 1;

  // Throws std::invalid_argument on shape mismatches, non-stochastic rows
  // (tolerance 1e-9), probabilities outside [0,1], or non-finite rewards.
  void validate() const;
};

// The two-state testbed: states {0, 1}, action 0 stays, action 1 switches
// (both deterministic), reward 1 in state 1 and 0 in state 0, start in state
// 0, no stochastic termination, horizon 2.
TabularMdp two_state_mdp();

// Random MDP with uniform-normalized transition rows, rewards in [0,1],
// normalized random initial distribution, and entry-termination probabilities
// in [0, max_term]. Deterministic in `seed`.
TabularMdp random_mdp(int num_states, int num_actions, int horizon, uint64_t seed,
                      double max_term = 0.2);

// Exact expected (undiscounted) return of `pi` on `mdp` by forward dynamic
// programming over the horizon: propagates the state distribution step by
// step, accounting for entry termination and the horizon cap.
double exact_return_dp(const TabularMdp& mdp, const Policy& pi);

}  // namespace star
