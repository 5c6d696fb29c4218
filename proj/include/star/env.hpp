#pragma once

#include <memory>
#include <string>

#include "star/mdp.hpp"
#include "star/rng.hpp"
#include "star/state.hpp"

namespace star {

struct StepResult {
  State next;
  double reward = 0.0;
  bool terminated = false;  // episode ended on entering `next` (before the cap)
};

// Sampling interface over an episodic environment. Implementations are
// stateless: reset() draws a start state, step() advances from an explicit
// current state. All randomness flows through the caller's Rng, which is what
// makes trajectory sampling reproducible.
class Env {
 public:
  virtual ~Env() = default;

  virtual State reset(Rng& rng) const = 0;
  virtual StepResult step(const State& state, int action, Rng& rng) const = 0;

  // Hard cap on acted steps per episode.
  virtual int horizon() const = 0;
  virtual int num_actions() const = 0;
  // Number of discrete states, or 0 for continuous environments.
  virtual int num_states() const = 0;
  // Stable identifier recorded in dataset provenance (no whitespace). For
  // environments built from spec strings this is the spec itself, so a dataset
  // header is enough to reopen the environment.
  virtual std::string id() const = 0;
};

// Samples episodes from an explicit tabular MDP.
class TabularEnv : public Env {
 public:
  TabularEnv(TabularMdp mdp, std::string id);

  State reset(Rng& rng) const override;
  StepResult step(const State& state, int action, Rng& rng) const override;
  int horizon() const override { return mdp_.horizon; }
  int num_actions() const override { return mdp_.num_actions; }
  int num_states() const override { return mdp_.num_states; }
  std::string id() const override { return id_; }
  const TabularMdp& mdp() const { return mdp_; }

 private:
  TabularMdp mdp_;
  std::string id_;
};

// Classic cart-pole balancing task (Barto, Sutton, Anderson), Euler
// integration with a 0.02s step. State is (x, x_dot, theta, theta_dot);
// actions are 0 (push left) and 1 (push right); reward is +1 per step. The
// episode ends when |theta| > 12 degrees or |x| > 2.4, or at the horizon cap.
class CartPoleEnv : public Env {
 public:
  explicit CartPoleEnv(int horizon = 50);

  State reset(Rng& rng) const override;
  StepResult step(const State& state, int action, Rng& rng) const override;
  int horizon() const override { return horizon_; }
  int num_actions() const override { return 2; }
  int num_states() const override { return 0; }
  std::string id() const override { return "cartpole"; }

 private:
  int horizon_;
};

}  // namespace star
