#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "star/abstraction.hpp"
#include "star/mdp.hpp"
#include "star/policy.hpp"

namespace star {

// Abstract reward process: a finite Markov reward process over abstract
// states. A trajectory starts in z ~ initial, and from state z collects
// reward(z), terminates with probability termination(z), and otherwise moves
// to z' ~ transition(z, .). The transition matrix is conditional on
// continuation, so every row sums to 1 regardless of termination mass.
//
// States never visited by the distilling data follow a fixed convention:
// transition is a self-loop, reward is 0, initial is 0, and termination is 1
// (the last keeps the return's linear system nonsingular). `visited` marks
// which states actually occurred.
struct Arp {
  Eigen::MatrixXd transition;
  Eigen::VectorXd reward;
  Eigen::VectorXd initial;
  Eigen::VectorXd termination;
  std::vector<uint8_t> visited;
  // States observed in the data whose importance-weighted visit mass was
  // still zero (every visit carried weight 0). Their transition, reward, and
  // termination follow the unvisited convention; initial keeps its count.
  int starved_states = 0;

  int num_abstract() const { return static_cast<int>(reward.size()); }

  // Shape and stochasticity checks (rows of transition sum to 1 within 1e-10,
  // probabilities in range, rewards finite). Throws std::invalid_argument.
  void validate() const;
};

// Distills (mdp, pi) through `phi` exactly: propagates the state distribution
// forward over the horizon and aggregates visit, transition, reward, and
// termination mass per abstract state. The result satisfies performance
// preservation: arp_expected_return(ground_truth_arp(m, pi, phi)) equals
// exact_return_dp(m, pi) up to solver round-off, for any abstraction.
Arp ground_truth_arp(const TabularMdp& mdp, const Policy& pi, const Abstraction& phi);

// Expected return eta' (I - (I - diag(termination)) transition)^-1 reward,
// evaluated by LU solve. Throws NonTerminatingArp if a pivot falls below
// 1e-12 in magnitude, which signals recurrent mass that never terminates.
double arp_expected_return(const Arp& arp);

struct RolloutStats {
  double mean = 0.0;
  long truncated = 0;  // episodes stopped by the step cap instead of termination
};

// Monte Carlo mean return over `num_episodes` rollouts of the ARP, mainly a
// cross-check for arp_expected_return. Episodes that reach `step_cap` are
// truncated and counted.
RolloutStats arp_rollout_return(const Arp& arp, long num_episodes, uint64_t seed,
                                long step_cap = 100000);

// Plain-text round-trip persistence; byte-identical on re-save.
void save_arp(const Arp& arp, const std::string& path);
Arp load_arp(const std::string& path);

}  // namespace star
