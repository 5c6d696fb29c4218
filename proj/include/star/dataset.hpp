#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "star/state.hpp"

namespace star {

// One logged step: the state the agent acted in, the action it took, the
// reward collected, and the probability the behavior policy assigned to that
// action. Termination is implicit: the last record of an episode is the step
// after which the episode ended (stochastically or at the horizon cap).
struct StepRecord {
  State state;
  int action = 0;
  double reward = 0.0;
  double behavior_prob = 1.0;
};

struct Episode {
  std::vector<StepRecord> steps;

  int length() const { return static_cast<int>(steps.size()); }
  double total_return() const;
};

// Off-policy log: episodes plus the provenance needed to reproduce or reopen
// them (environment spec, behavior policy spec, master seed).
struct Dataset {
  std::string env_id;
  std::string policy_id;
  uint64_t seed = 0;
  std::vector<Episode> episodes;

  int num_episodes() const { return static_cast<int>(episodes.size()); }
  double mean_return() const;

  // Throws std::invalid_argument if the dataset is empty, any episode is
  // empty, a behavior probability falls outside (0, 1], a reward is not
  // finite, or states mix discrete and continuous forms.
  void validate() const;
};

// Plain-text round-trip format, one episode per line. Doubles are printed with
// 17 significant digits so save(load(x)) is value-exact and re-saving is
// byte-identical.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace star
