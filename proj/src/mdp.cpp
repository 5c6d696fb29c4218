#include "star/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "star/rng.hpp"

namespace star {

namespace {

void check_distribution(const Eigen::VectorXd& v, const char* what) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0 || v[i] > 1.0) {
      throw std::invalid_argument(std::string(what) + ": entries must be probabilities");
    }
    sum += v[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
  }
}

}  // namespace

void TabularMdp::validate() const {
  if (num_states < 1 || num_actions < 1) {
    throw std::invalid_argument("TabularMdp: empty state or action space");
  }
  if (horizon < 1) throw std::invalid_argument("TabularMdp: horizon must be >= 1");
  if (static_cast<int>(transition.size()) != num_actions) {
    throw std::invalid_argument("TabularMdp: need one transition matrix per action");
  }
  for (const auto& p : transition) {
    if (p.rows() != num_states || p.cols() != num_states) {
      throw std::invalid_argument("TabularMdp: transition matrix shape mismatch");
    }
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
      check_distribution(p.row(s).transpose(), "TabularMdp transition row");
    }
  }
  if (reward.rows() != num_states || reward.cols() != num_actions) {
    throw std::invalid_argument("TabularMdp: reward shape mismatch");
  }
  if (!reward.allFinite()) throw std::invalid_argument("TabularMdp: rewards must be finite");
  if (initial.size() != num_states) {
    throw std::invalid_argument("TabularMdp: initial distribution shape mismatch");
  }
  check_distribution(initial, "TabularMdp initial distribution");
  if (term.size() != num_states) {
    throw std::invalid_argument("TabularMdp: termination vector shape mismatch");
  }
  for (Eigen::Index s = 0; s < term.size(); ++s) {
    if (!std::isfinite(term[s]) || term[s] < 0.0 || term[s] > 1.0) {
      throw std::invalid_argument("TabularMdp: termination probabilities must be in [0,1]");
    }
  }
}

TabularMdp two_state_mdp() {
  TabularMdp m;
  m.num_states = 2;
  m.num_actions = 2;
  Eigen::MatrixXd stay(2, 2), switch_(2, 2);
  stay << 1, 0, 0, 1;
  switch_ << 0, 1, 1, 0;
  m.transition = {stay, switch_};
  m.reward.resize(2, 2);
  m.reward << 0, 0, 1, 1;
  m.initial = Eigen::Vector2d(1.0, 0.0);
  m.term = Eigen::Vector2d(0.0, 0.0);
  m.horizon = 2;
  m.validate();
  return m;
}

TabularMdp random_mdp(int num_states, int num_actions, int horizon, uint64_t seed,
                      double max_term) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw std::invalid_argument("random_mdp: sizes must be >= 1");
  }
  if (!(max_term >= 0.0 && max_term <= 1.0)) {
    throw std::invalid_argument("random_mdp: max_term must be in [0,1]");
  }
  Rng rng(hash_combine(seed, "random-mdp"));
  TabularMdp m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.horizon = horizon;
  m.transition.assign(num_actions, Eigen::MatrixXd(num_states, num_states));
  for (int a = 0; a < num_actions; ++a) {
    for (int s = 0; s < num_states; ++s) {
      double sum = 0.0;
      for (int t = 0; t < num_states; ++t) {
        // Offset keeps rows bounded away from degenerate all-zero draws.
        const double x = 0.05 + rng.uniform01();
        m.transition[a](s, t) = x;
        sum += x;
      }
      m.transition[a].row(s) /= sum;
    }
  }
  m.reward.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) m.reward(s, a) = rng.uniform01();
  }
  m.initial.resize(num_states);
  double isum = 0.0;
  for (int s = 0; s < num_states; ++s) {
    const double x = 0.05 + rng.uniform01();
    m.initial[s] = x;
    isum += x;
  }
  m.initial /= isum;
  m.term.resize(num_states);
  for (int s = 0; s < num_states; ++s) m.term[s] = max_term * rng.uniform01();
  m.validate();
  return m;
}

double exact_return_dp(const TabularMdp& mdp, const Policy& pi) {
  mdp.validate();
  if (pi.num_actions() != mdp.num_actions) {
    throw std::invalid_argument("exact_return_dp: policy/MDP action count mismatch");
  }
  const int S = mdp.num_states;

  // Expected one-step reward and state-to-state kernel under pi.
  Eigen::VectorXd reward_pi = Eigen::VectorXd::Zero(S);
  Eigen::MatrixXd kernel_pi = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    const State st = State::discrete(s);
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double p = pi.prob(st, a);
      if (p == 0.0) continue;
      reward_pi[s] += p * mdp.reward(s, a);
      kernel_pi.row(s) += p * mdp.transition[a].row(s);
    }
  }

  // d holds the probability of being alive in each state at step t. Entry
  // termination thins the flow after each transition; the horizon cap ends
  // everything after the final step, which needs no explicit handling since
  // rewards are collected before the cap applies.
  Eigen::VectorXd d = mdp.initial;
  double value = 0.0;
  for (int t = 0; t < mdp.horizon; ++t) {
    value += d.dot(reward_pi);
    if (t + 1 == mdp.horizon) break;
    Eigen::VectorXd next = kernel_pi.transpose() * d;
    for (int s = 0; s < S; ++s) next[s] *= 1.0 - mdp.term[s];
    d = next;
  }
  return value;
}

}  // namespace star
