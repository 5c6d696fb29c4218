#include "star/policy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace star {

int Policy::sample(const State& state, Rng& rng) const {
  const int n = num_actions();
  const double u = rng.uniform01();
  double cum = 0.0;
  int last_positive = -1;
  for (int a = 0; a < n; ++a) {
    const double p = prob(state, a);
    if (p < 0.0 || !std::isfinite(p)) {
      throw std::invalid_argument("Policy::sample: invalid action probability");
    }
    if (p > 0.0) last_positive = a;
    cum += p;
    if (u < cum) return a;
  }
  // Round-off can leave cum marginally below 1; fall back to the last action
  // with positive mass.
  if (last_positive < 0) {
    throw std::invalid_argument("Policy::sample: action distribution has zero total mass");
  }
  return last_positive;
}

TabularPolicy::TabularPolicy(Eigen::MatrixXd probs, std::string id)
    : probs_(std::move(probs)), id_(std::move(id)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw std::invalid_argument("TabularPolicy: empty probability matrix");
  }
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    double row = 0.0;
    for (Eigen::Index a = 0; a < probs_.cols(); ++a) {
      const double p = probs_(s, a);
      if (!std::isfinite(p) || p < 0.0) {
        throw std::invalid_argument("TabularPolicy: probabilities must be finite and nonnegative");
      }
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-12) {
      throw std::invalid_argument("TabularPolicy: row " + std::to_string(s) +
                                  " does not sum to 1");
    }
  }
}

double TabularPolicy::prob(const State& state, int action) const {
  const int s = state.index();
  if (s >= num_states()) {
    throw std::invalid_argument("TabularPolicy::prob: state index out of range");
  }
  if (action < 0 || action >= num_actions()) {
    throw std::invalid_argument("TabularPolicy::prob: action out of range");
  }
  return probs_(s, action);
}

UniformPolicy::UniformPolicy(int num_actions) : num_actions_(num_actions) {
  if (num_actions < 1) throw std::invalid_argument("UniformPolicy: num_actions must be >= 1");
}

double UniformPolicy::prob(const State&, int action) const {
  if (action < 0 || action >= num_actions_) {
    throw std::invalid_argument("UniformPolicy::prob: action out of range");
  }
  return 1.0 / num_actions_;
}

AlwaysPolicy::AlwaysPolicy(int action, int num_actions)
    : action_(action), num_actions_(num_actions) {
  if (num_actions < 1 || action < 0 || action >= num_actions) {
    throw std::invalid_argument("AlwaysPolicy: action out of range");
  }
}

double AlwaysPolicy::prob(const State&, int action) const {
  if (action < 0 || action >= num_actions_) {
    throw std::invalid_argument("AlwaysPolicy::prob: action out of range");
  }
  return action == action_ ? 1.0 : 0.0;
}

std::string AlwaysPolicy::id() const { return "always:" + std::to_string(action_); }

LeanPolicy::LeanPolicy(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("LeanPolicy: p must be in [0,1]");
}

double LeanPolicy::prob(const State& state, int action) const {
  const auto& v = state.values();
  if (v.size() < 3) throw std::invalid_argument("LeanPolicy::prob: state has no pole angle");
  if (action < 0 || action > 1) throw std::invalid_argument("LeanPolicy::prob: action out of range");
  const double theta = v[2];
  const double p_right = theta < 0.0 ? p_ : 1.0 - p_;
  return action == 1 ? p_right : 1.0 - p_right;
}

std::string LeanPolicy::id() const {
  std::ostringstream out;
  out << "lean:" << p_;
  return out.str();
}

TabularPolicy make_skewed_policy(int num_states, int num_actions, double weight, uint64_t seed) {
  if (num_states < 1 || num_actions < 1) {
    throw std::invalid_argument("make_skewed_policy: empty state or action space");
  }
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw std::invalid_argument("make_skewed_policy: weight must be in [0,1]");
  }
  Eigen::MatrixXd probs(num_states, num_actions);
  Rng rng(hash_combine(seed, "skewed-policy"));
  const double rest = num_actions > 1 ? (1.0 - weight) / (num_actions - 1) : 0.0;
  for (int s = 0; s < num_states; ++s) {
    const int preferred = rng.uniform_int(num_actions);
    for (int a = 0; a < num_actions; ++a) {
      probs(s, a) = num_actions == 1 ? 1.0 : (a == preferred ? weight : rest);
    }
  }
  std::ostringstream id;
  id << "skewed:w=" << weight << ",seed=" << seed;
  return TabularPolicy(std::move(probs), id.str());
}

}  // namespace star
