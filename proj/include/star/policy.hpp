#pragma once

#include <Eigen/Dense>
#include <string>

#include "star/rng.hpp"
#include "star/state.hpp"

namespace star {

// A stochastic policy over a finite action set {0, ..., num_actions()-1}.
// prob() must define a probability distribution for every state the policy is
// queried on; sampling uses a single uniform variate and a fixed-order scan so
// draws are reproducible bit for bit.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual int num_actions() const = 0;

  // Probability of `action` in `state`.
  virtual double prob(const State& state, int action) const = 0;

  // Stable identifier recorded in dataset provenance (no whitespace).
  virtual std::string id() const = 0;

  virtual int sample(const State& state, Rng& rng) const;
};

// Policy given by an explicit states-by-actions probability matrix.
class TabularPolicy : public Policy {
 public:
  TabularPolicy(Eigen::MatrixXd probs, std::string id);

  int num_actions() const override { return static_cast<int>(probs_.cols()); }
  int num_states() const { return static_cast<int>(probs_.rows()); }
  double prob(const State& state, int action) const override;
  std::string id() const override { return id_; }
  const Eigen::MatrixXd& matrix() const { return probs_; }

 private:
  Eigen::MatrixXd probs_;
  std::string id_;
};

// Same distribution in every state.
class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(int num_actions);
  int num_actions() const override { return num_actions_; }
  double prob(const State&, int action) const override;
  std::string id() const override { return "uniform"; }

 private:
  int num_actions_;
};

// Deterministic: always plays one action.
class AlwaysPolicy : public Policy {
 public:
  AlwaysPolicy(int action, int num_actions);
  int num_actions() const override { return num_actions_; }
  double prob(const State&, int action) const override;
  std::string id() const override;

 private:
  int action_;
  int num_actions_;
};

// Cart-pole heuristic: pushes toward the side the pole is falling to. Action 1
// (push right) has probability p when the pole leans left (theta < 0) and 1-p
// otherwise; theta == 0 counts as leaning right.
class LeanPolicy : public Policy {
 public:
  explicit LeanPolicy(double p);
  int num_actions() const override { return 2; }
  double prob(const State& state, int action) const override;
  std::string id() const override;

 private:
  double p_;
};

// Tabular policy that puts `weight` on one preferred action per state (drawn
// uniformly from `seed`) and splits the remainder evenly over the others.
TabularPolicy make_skewed_policy(int num_states, int num_actions, double weight, uint64_t seed);

}  // namespace star
