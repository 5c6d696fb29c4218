#include "star/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "star/errors.hpp"

namespace star {

namespace {

constexpr double kSupportFloor = 1e-12;

double checked_eval_prob(const Policy& pi_e, const StepRecord& step, size_t episode, size_t t) {
  const double p = pi_e.prob(step.state, step.action);
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw std::invalid_argument("evaluation policy returned invalid probability " +
                                std::to_string(p) + " at episode " + std::to_string(episode) +
                                ", timestep " + std::to_string(t));
  }
  return p;
}

}  // namespace

WeightTable compute_weights(const Dataset& dataset, const Policy& pi_e, int clip) {
  dataset.validate();
  if (clip < 0) throw std::invalid_argument("compute_weights: clip must be >= 0");

  WeightTable table;
  table.clip = clip;
  table.weights.reserve(dataset.episodes.size());
  double sum = 0.0, sum_sq = 0.0;
  for (size_t i = 0; i < dataset.episodes.size(); ++i) {
    const auto& episode = dataset.episodes[i];
    const int len = episode.length();
    std::vector<double> ratios(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
      const auto& step = episode.steps[static_cast<size_t>(t)];
      const double pe = checked_eval_prob(pi_e, step, i, static_cast<size_t>(t));
      const double pb = step.behavior_prob;
      if (pb < kSupportFloor) {
        if (pe > 0.0) {
          throw SupportViolation("support violation at episode " + std::to_string(i) +
                                 ", timestep " + std::to_string(t) +
                                 ": behavior probability " + std::to_string(pb) +
                                 " is (near) zero for an action the evaluation policy takes");
        }
        ratios[static_cast<size_t>(t)] = 0.0;
      } else {
        ratios[static_cast<size_t>(t)] = pe / pb;
      }
    }
    std::vector<double> w(static_cast<size_t>(len));
    if (clip == 0) {
      double cum = 1.0;
      for (int t = 0; t < len; ++t) {
        cum *= ratios[static_cast<size_t>(t)];
        w[static_cast<size_t>(t)] = cum;
      }
    } else {
      // Window product over the last `clip` ratios, recomputed directly:
      // windows are short and this avoids dividing by ratios that may be 0.
      for (int t = 0; t < len; ++t) {
        double prod = 1.0;
        for (int j = std::max(0, t - clip + 1); j <= t; ++j) {
          prod *= ratios[static_cast<size_t>(j)];
        }
        w[static_cast<size_t>(t)] = prod;
      }
    }
    for (double x : w) {
      table.max_weight = std::max(table.max_weight, x);
      sum += x;
      sum_sq += x * x;
    }
    table.weights.push_back(std::move(w));
  }
  table.effective_sample_size = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  return table;
}

namespace {

Arp estimate_arp_impl(const Dataset& dataset, const Abstraction& phi,
                      const std::vector<std::vector<double>>* weights) {
  dataset.validate();
  const int Z = phi.num_abstract();
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(Z);
  Eigen::VectorXd reward_mass = Eigen::VectorXd::Zero(Z);
  Eigen::VectorXd term_mass = Eigen::VectorXd::Zero(Z);
  Eigen::VectorXd init_count = Eigen::VectorXd::Zero(Z);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(Z, Z);
  std::vector<long> raw_visits(static_cast<size_t>(Z), 0);

  for (size_t i = 0; i < dataset.episodes.size(); ++i) {
    const auto& episode = dataset.episodes[i];
    const int len = episode.length();
    std::vector<int> z(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
      z[static_cast<size_t>(t)] = phi.apply(episode.steps[static_cast<size_t>(t)].state);
      if (z[static_cast<size_t>(t)] < 0 || z[static_cast<size_t>(t)] >= Z) {
        throw std::invalid_argument("estimate_arp: abstraction output out of range");
      }
    }
    init_count[z[0]] += 1.0;
    for (int t = 0; t < len; ++t) {
      const double w = weights ? (*weights)[i][static_cast<size_t>(t)] : 1.0;
      const int zt = z[static_cast<size_t>(t)];
      ++raw_visits[static_cast<size_t>(zt)];
      mass[zt] += w;
      reward_mass[zt] += w * episode.steps[static_cast<size_t>(t)].reward;
      if (t + 1 == len) {
        term_mass[zt] += w;
      } else {
        joint(zt, z[static_cast<size_t>(t + 1)]) += w;
      }
    }
  }

  Arp arp;
  arp.transition = Eigen::MatrixXd::Zero(Z, Z);
  arp.reward = Eigen::VectorXd::Zero(Z);
  arp.initial = init_count / static_cast<double>(dataset.episodes.size());
  arp.termination = Eigen::VectorXd::Zero(Z);
  arp.visited.assign(static_cast<size_t>(Z), 0);
  for (int z_i = 0; z_i < Z; ++z_i) {
    arp.visited[static_cast<size_t>(z_i)] = raw_visits[static_cast<size_t>(z_i)] > 0 ? 1 : 0;
    if (mass[z_i] <= 0.0) {
      // Zero visit mass: either the state never occurs, or every occurrence
      // carried importance weight 0. Both get the hardcoded convention;
      // the latter keeps its counted initial mass and is flagged starved.
      arp.transition(z_i, z_i) = 1.0;
      arp.termination[z_i] = 1.0;
      if (raw_visits[static_cast<size_t>(z_i)] > 0) ++arp.starved_states;
      continue;
    }
    arp.reward[z_i] = reward_mass[z_i] / mass[z_i];
    arp.termination[z_i] = std::min(1.0, term_mass[z_i] / mass[z_i]);
    const double row_sum = joint.row(z_i).sum();
    if (row_sum > 0.0) {
      arp.transition.row(z_i) = joint.row(z_i) / row_sum;
    } else {
      arp.transition(z_i, z_i) = 1.0;
    }
  }
  arp.validate();
  return arp;
}

}  // namespace

Arp estimate_arp_on_policy(const Dataset& dataset, const Abstraction& phi) {
  return estimate_arp_impl(dataset, phi, nullptr);
}

Arp estimate_arp_off_policy(const Dataset& dataset, const StarConfig& config) {
  if (config.evaluation == nullptr) {
    throw std::invalid_argument("estimate_arp_off_policy: config needs an evaluation policy");
  }
  const WeightTable table = compute_weights(dataset, *config.evaluation, config.clip);
  return estimate_arp_impl(dataset, config.abstraction, &table.weights);
}

double star_estimate(const Dataset& dataset, const StarConfig& config) {
  const Arp arp = config.evaluation ? estimate_arp_off_policy(dataset, config)
                                    : estimate_arp_on_policy(dataset, config.abstraction);
  return arp_expected_return(arp);
}

double is_estimate(const Dataset& dataset, const Policy& pi_e) {
  const WeightTable table = compute_weights(dataset, pi_e, 0);
  double sum = 0.0;
  for (size_t i = 0; i < dataset.episodes.size(); ++i) {
    sum += table.weights[i].back() * dataset.episodes[i].total_return();
  }
  return sum / static_cast<double>(dataset.episodes.size());
}

double pdis_estimate(const Dataset& dataset, const Policy& pi_e) {
  const WeightTable table = compute_weights(dataset, pi_e, 0);
  double sum = 0.0;
  for (size_t i = 0; i < dataset.episodes.size(); ++i) {
    const auto& steps = dataset.episodes[i].steps;
    for (size_t t = 0; t < steps.size(); ++t) {
      sum += table.weights[i][t] * steps[t].reward;
    }
  }
  return sum / static_cast<double>(dataset.episodes.size());
}

double wis_estimate(const Dataset& dataset, const Policy& pi_e) {
  const WeightTable table = compute_weights(dataset, pi_e, 0);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < dataset.episodes.size(); ++i) {
    const double w = table.weights[i].back();
    num += w * dataset.episodes[i].total_return();
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

double wpdis_estimate(const Dataset& dataset, const Policy& pi_e) {
  const WeightTable table = compute_weights(dataset, pi_e, 0);
  size_t max_len = 0;
  for (const auto& e : dataset.episodes) max_len = std::max(max_len, e.steps.size());
  double total = 0.0;
  for (size_t t = 0; t < max_len; ++t) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < dataset.episodes.size(); ++i) {
      const auto& steps = dataset.episodes[i].steps;
      if (t >= steps.size()) continue;
      num += table.weights[i][t] * steps[t].reward;
      den += table.weights[i][t];
    }
    if (den > 0.0) total += num / den;
  }
  return total;
}

double model_based_estimate(const Dataset& dataset, const Policy& pi_e, int num_states) {
  dataset.validate();
  if (num_states < 1) throw std::invalid_argument("model_based_estimate: num_states must be >= 1");
  const int A = pi_e.num_actions();

  Eigen::MatrixXd visits = Eigen::MatrixXd::Zero(num_states, A);
  Eigen::MatrixXd term_counts = Eigen::MatrixXd::Zero(num_states, A);
  Eigen::MatrixXd reward_sums = Eigen::MatrixXd::Zero(num_states, A);
  std::vector<Eigen::MatrixXd> next_counts(
      static_cast<size_t>(A), Eigen::MatrixXd::Zero(num_states, num_states));
  Eigen::VectorXd init_count = Eigen::VectorXd::Zero(num_states);

  for (const auto& episode : dataset.episodes) {
    const int len = episode.length();
    for (int t = 0; t < len; ++t) {
      const auto& step = episode.steps[static_cast<size_t>(t)];
      if (!step.state.is_discrete()) {
        throw std::invalid_argument("model_based_estimate: requires discrete states");
      }
      const int s = step.state.index();
      if (s >= num_states) {
        throw std::invalid_argument("model_based_estimate: state index out of range");
      }
      if (step.action >= A) {
        throw std::invalid_argument("model_based_estimate: logged action out of range");
      }
      if (t == 0) init_count[s] += 1.0;
      visits(s, step.action) += 1.0;
      reward_sums(s, step.action) += step.reward;
      if (t + 1 == len) {
        term_counts(s, step.action) += 1.0;
      } else {
        const int next = episode.steps[static_cast<size_t>(t + 1)].state.index();
        next_counts[static_cast<size_t>(step.action)](s, next) += 1.0;
      }
    }
  }

  // Project the fitted model through pi_e into a reward process over the raw
  // states, then reuse the ARP return machinery. Unvisited (s,a) pairs follow
  // the self-loop / zero-reward / certain-termination convention, so they
  // contribute termination mass but no value.
  Arp induced;
  induced.transition = Eigen::MatrixXd::Zero(num_states, num_states);
  induced.reward = Eigen::VectorXd::Zero(num_states);
  induced.initial = init_count / static_cast<double>(dataset.episodes.size());
  induced.termination = Eigen::VectorXd::Zero(num_states);
  induced.visited.assign(static_cast<size_t>(num_states), 0);
  for (int s = 0; s < num_states; ++s) {
    const State st = State::discrete(s);
    double term_pi = 0.0, reward_pi = 0.0;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(num_states);
    for (int a = 0; a < A; ++a) {
      const double p = pi_e.prob(st, a);
      if (visits(s, a) > 0.0) {
        induced.visited[static_cast<size_t>(s)] = 1;
        const double beta_sa = term_counts(s, a) / visits(s, a);
        term_pi += p * beta_sa;
        reward_pi += p * (reward_sums(s, a) / visits(s, a));
        const double continues = visits(s, a) - term_counts(s, a);
        if (continues > 0.0) {
          row += (p * (1.0 - beta_sa) / continues) * next_counts[static_cast<size_t>(a)].row(s).transpose();
        }
      } else {
        term_pi += p;  // unvisited pair: reward 0, certain termination
      }
    }
    induced.termination[s] = std::min(1.0, term_pi);
    induced.reward[s] = reward_pi;
    const double row_sum = row.sum();
    if (row_sum > 0.0) {
      induced.transition.row(s) = row.transpose() / row_sum;
    } else {
      induced.transition(s, s) = 1.0;
      induced.termination[s] = 1.0;
    }
  }
  return arp_expected_return(induced);
}

}  // namespace star
