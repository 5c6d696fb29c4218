#pragma once

#include <vector>

#include "star/abstraction.hpp"
#include "star/arp.hpp"
#include "star/dataset.hpp"
#include "star/policy.hpp"

namespace star {

// Per-step importance weights for a dataset. With clip == 0 (unclipped),
// weights[i][t] is the cumulative likelihood ratio of episode i up to and
// including step t. With clip == c >= 1, it is the product over only the last
// c steps' ratios, which bounds the weight by max-ratio^c.
struct WeightTable {
  std::vector<std::vector<double>> weights;
  int clip = 0;
  double max_weight = 0.0;
  // Pooled effective sample size, (sum w)^2 / sum w^2 over all step weights.
  double effective_sample_size = 0.0;
};

// Throws SupportViolation (naming the episode and timestep) if a logged
// action has behavior probability below 1e-12 while the evaluation policy
// gives it positive probability. Evaluation probabilities outside [0,1] or
// non-finite throw std::invalid_argument.
WeightTable compute_weights(const Dataset& dataset, const Policy& pi_e, int clip);

// STAR estimator configuration: the abstraction to distill through, the
// clipping window (0 = unclipped), and the evaluation policy (null = treat the
// data as on-policy).
struct StarConfig {
  Abstraction abstraction = Abstraction::single();
  int clip = 0;
  const Policy* evaluation = nullptr;
};

// Maximum-likelihood ARP from logged episodes mapped through `phi`:
// initial = start-state frequencies, reward = per-state mean reward,
// termination = fraction of final-step visit mass, transition = frequencies of
// observed continuations (each episode's final step is excluded from
// transition statistics but included in reward and termination statistics).
// Zero-mass states follow the unvisited convention (self-loop, reward 0,
// termination 1).
Arp estimate_arp_on_policy(const Dataset& dataset, const Abstraction& phi);

// Importance-weighted variant: every visit's contribution to reward,
// termination, and transition statistics is multiplied by its (clipped or
// cumulative) weight toward config.evaluation; initial stays frequency-based.
// With evaluation == behavior the output is bitwise identical to the
// on-policy estimate. Requires config.evaluation.
Arp estimate_arp_off_policy(const Dataset& dataset, const StarConfig& config);

// The STAR point estimate: estimate an ARP from the dataset (off-policy when
// config.evaluation is set) and return its expected return.
double star_estimate(const Dataset& dataset, const StarConfig& config);

// Trajectory-wise importance sampling: mean over episodes of full-trajectory
// weight times return.
double is_estimate(const Dataset& dataset, const Policy& pi_e);

// Per-decision IS: mean over episodes of sum_t rho_{0:t} R_t.
double pdis_estimate(const Dataset& dataset, const Policy& pi_e);

// Weighted (self-normalized) IS: sum(rho G) / sum(rho); 0 if the denominator
// is 0.
double wis_estimate(const Dataset& dataset, const Policy& pi_e);

// Weighted per-decision IS: sum_t [sum_i rho^i_{0:t} R^i_t / sum_i rho^i_{0:t}]
// where episodes shorter than t contribute nothing at step t and a zero
// denominator makes that step's term 0.
double wpdis_estimate(const Dataset& dataset, const Policy& pi_e);

// Model-based baseline for discrete-state datasets: fits per-(s,a) transition,
// reward, and termination estimates by maximum likelihood, then evaluates
// pi_e on the fitted model exactly via the induced reward process's linear
// system. Unvisited (s,a) pairs get a self-loop with zero reward and certain
// termination, which keeps the value finite.
double model_based_estimate(const Dataset& dataset, const Policy& pi_e, int num_states);

}  // namespace star
