#include "star/env.hpp"

#include <cmath>
#include <stdexcept>

namespace star {

namespace {

// Draws from a finite distribution given as a matrix row, scanning indices in
// order so the draw depends only on the uniform variate.
int sample_row(const Eigen::MatrixXd& m, int row, Rng& rng) {
  const double u = rng.uniform01();
  double cum = 0.0;
  int last_positive = -1;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double p = m(row, j);
    if (p > 0.0) last_positive = static_cast<int>(j);
    cum += p;
    if (u < cum) return static_cast<int>(j);
  }
  return last_positive;
}

}  // namespace

TabularEnv::TabularEnv(TabularMdp mdp, std::string id) : mdp_(std::move(mdp)), id_(std::move(id)) {
  mdp_.validate();
}

State TabularEnv::reset(Rng& rng) const {
  const double u = rng.uniform01();
  double cum = 0.0;
  int last_positive = 0;
  for (int s = 0; s < mdp_.num_states; ++s) {
    const double p = mdp_.initial[s];
    if (p > 0.0) last_positive = s;
    cum += p;
    if (u < cum) return State::discrete(s);
  }
  return State::discrete(last_positive);
}

StepResult TabularEnv::step(const State& state, int action, Rng& rng) const {
  const int s = state.index();
  if (s >= mdp_.num_states) throw std::invalid_argument("TabularEnv::step: state out of range");
  if (action < 0 || action >= mdp_.num_actions) {
    throw std::invalid_argument("TabularEnv::step: action out of range");
  }
  StepResult out;
  const int next = sample_row(mdp_.transition[action], s, rng);
  out.next = State::discrete(next);
  out.reward = mdp_.reward(s, action);
  // Entry-based termination: the draw happens on arrival at `next`. Skipping
  // the draw when term is 0 keeps the variate stream identical whether or not
  // the branch is taken.
  const double beta = mdp_.term[next];
  out.terminated = beta > 0.0 && rng.uniform01() < beta;
  return out;
}

CartPoleEnv::CartPoleEnv(int horizon) : horizon_(horizon) {
  if (horizon < 1) throw std::invalid_argument("CartPoleEnv: horizon must be >= 1");
}

State CartPoleEnv::reset(Rng& rng) const {
  std::vector<double> v(4);
  for (auto& x : v) x = -0.05 + 0.1 * rng.uniform01();
  return State::continuous(std::move(v));
}

StepResult CartPoleEnv::step(const State& state, int action, Rng&) const {
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kLength = 0.5;  // half the pole length
  static constexpr double kPoleMassLength = kMassPole * kLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * M_PI / 360.0;
  static constexpr double kXThreshold = 2.4;

  const auto& v = state.values();
  if (v.size() != 4) throw std::invalid_argument("CartPoleEnv::step: state must have 4 entries");
  if (action < 0 || action > 1) throw std::invalid_argument("CartPoleEnv::step: action out of range");

  const double x = v[0], x_dot = v[1], theta = v[2], theta_dot = v[3];
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double cos_theta = std::cos(theta);
  const double sin_theta = std::sin(theta);
  const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_theta) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kLength * (4.0 / 3.0 - kMassPole * cos_theta * cos_theta / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_theta / kTotalMass;

  StepResult out;
  std::vector<double> next(4);
  next[0] = x + kTau * x_dot;
  next[1] = x_dot + kTau * x_acc;
  next[2] = theta + kTau * theta_dot;
  next[3] = theta_dot + kTau * theta_acc;
  out.reward = 1.0;
  out.terminated = next[0] < -kXThreshold || next[0] > kXThreshold ||
                   next[2] < -kThetaThreshold || next[2] > kThetaThreshold;
  out.next = State::continuous(std::move(next));
  return out;
}

}  // namespace star
