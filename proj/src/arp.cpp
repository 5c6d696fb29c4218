#include "star/arp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "star/errors.hpp"
#include "star/rng.hpp"

namespace star {

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_row(std::ofstream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
  out << '\n';
}

}  // namespace

void Arp::validate() const {
  const int z = num_abstract();
  if (z < 1) throw std::invalid_argument("Arp: empty abstract state space");
  if (transition.rows() != z || transition.cols() != z) {
    throw std::invalid_argument("Arp: transition shape mismatch");
  }
  if (initial.size() != z || termination.size() != z) {
    throw std::invalid_argument("Arp: vector shape mismatch");
  }
  if (static_cast<int>(visited.size()) != z) {
    throw std::invalid_argument("Arp: visited flags shape mismatch");
  }
  if (!reward.allFinite()) throw std::invalid_argument("Arp: rewards must be finite");
  for (int i = 0; i < z; ++i) {
    double row = 0.0;
    for (int j = 0; j < z; ++j) {
      const double p = transition(i, j);
      if (!std::isfinite(p) || p < -1e-12 || p > 1.0 + 1e-12) {
        throw std::invalid_argument("Arp: transition entries must be probabilities");
      }
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-10) {
      throw std::invalid_argument("Arp: transition row " + std::to_string(i) +
                                  " does not sum to 1");
    }
    if (!std::isfinite(termination[i]) || termination[i] < 0.0 || termination[i] > 1.0 + 1e-12) {
      throw std::invalid_argument("Arp: termination probabilities must be in [0,1]");
    }
    if (!std::isfinite(initial[i]) || initial[i] < 0.0) {
      throw std::invalid_argument("Arp: initial distribution entries must be nonnegative");
    }
  }
  if (std::abs(initial.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("Arp: initial distribution does not sum to 1");
  }
}

Arp ground_truth_arp(const TabularMdp& mdp, const Policy& pi, const Abstraction& phi) {
  mdp.validate();
  if (pi.num_actions() != mdp.num_actions) {
    throw std::invalid_argument("ground_truth_arp: policy/MDP action count mismatch");
  }
  const int S = mdp.num_states;
  const int Z = phi.num_abstract();

  // One-hot abstraction matrix: column z of row s is 1 iff phi(s) = z.
  Eigen::MatrixXd phi_mat = Eigen::MatrixXd::Zero(S, Z);
  for (int s = 0; s < S; ++s) {
    const int z = phi.apply(State::discrete(s));
    if (z < 0 || z >= Z) throw std::invalid_argument("ground_truth_arp: abstraction out of range");
    phi_mat(s, z) = 1.0;
  }

  // Policy-averaged reward and transition kernel.
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
  const Eigen::VectorXd survive = Eigen::VectorXd::Ones(S) - mdp.term;

  // Forward pass over the horizon, aggregating abstract-state masses across
  // timesteps. d is the alive-state distribution at step t; the final step
  // terminates everything (horizon cap).
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(Z);
  Eigen::VectorXd reward_mass = Eigen::VectorXd::Zero(Z);
  Eigen::VectorXd term_mass = Eigen::VectorXd::Zero(Z);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(Z, Z);
  Eigen::VectorXd d = mdp.initial;
  for (int t = 0; t < mdp.horizon; ++t) {
    mass += phi_mat.transpose() * d;
    reward_mass += phi_mat.transpose() * d.cwiseProduct(reward_pi);
    if (t + 1 == mdp.horizon) {
      term_mass += phi_mat.transpose() * d;
      break;
    }
    const Eigen::MatrixXd flow = d.asDiagonal() * kernel_pi;       // flow(s, s')
    term_mass += phi_mat.transpose() * (flow * mdp.term);          // dies entering s'
    const Eigen::MatrixXd surviving = flow * survive.asDiagonal();
    joint += phi_mat.transpose() * surviving * phi_mat;
    d = surviving.colwise().sum().transpose();
  }

  Arp arp;
  arp.transition = Eigen::MatrixXd::Zero(Z, Z);
  arp.reward = Eigen::VectorXd::Zero(Z);
  arp.initial = phi_mat.transpose() * mdp.initial;
  arp.termination = Eigen::VectorXd::Zero(Z);
  arp.visited.assign(static_cast<size_t>(Z), 0);
  for (int z = 0; z < Z; ++z) {
    if (mass[z] <= 0.0) {
      // Unreachable abstract state: self-loop, zero reward, certain
      // termination. Initial mass is zero by construction.
      arp.transition(z, z) = 1.0;
      arp.termination[z] = 1.0;
      continue;
    }
    arp.visited[z] = 1;
    arp.reward[z] = reward_mass[z] / mass[z];
    arp.termination[z] = term_mass[z] / mass[z];
    const double row_sum = joint.row(z).sum();
    if (row_sum > 0.0) {
      arp.transition.row(z) = joint.row(z) / row_sum;
    } else {
      arp.transition(z, z) = 1.0;
    }
  }
  arp.validate();
  return arp;
}

double arp_expected_return(const Arp& arp) {
  arp.validate();
  const int z = arp.num_abstract();
  const Eigen::VectorXd survive = Eigen::VectorXd::Ones(z) - arp.termination;
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(z, z) - survive.asDiagonal() * arp.transition;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < pivots.size(); ++i) {
    if (std::abs(pivots[i]) < 1e-12) {
      throw NonTerminatingArp(
          "non-terminating ARP: recurrent mass never terminates (pivot " + std::to_string(i) +
          " is " + format_double(pivots[i]) + ")");
    }
  }
  const Eigen::VectorXd value = lu.solve(arp.reward);
  return arp.initial.dot(value);
}

RolloutStats arp_rollout_return(const Arp& arp, long num_episodes, uint64_t seed, long step_cap) {
  arp.validate();
  if (num_episodes < 1) {
    throw std::invalid_argument("arp_rollout_return: num_episodes must be >= 1");
  }
  if (step_cap < 1) throw std::invalid_argument("arp_rollout_return: step_cap must be >= 1");
  const int z_count = arp.num_abstract();

  const auto draw = [&](const Eigen::VectorXd& weights, Rng& rng) {
    const double u = rng.uniform01();
    double cum = 0.0;
    int last_positive = 0;
    for (int i = 0; i < z_count; ++i) {
      const double p = weights[i];
      if (p > 0.0) last_positive = i;
      cum += p;
      if (u < cum) return i;
    }
    return last_positive;
  };

  RolloutStats stats;
  double sum = 0.0;
  for (long i = 0; i < num_episodes; ++i) {
    Rng rng(hash_combine(seed, static_cast<uint64_t>(i)));
    int z = draw(arp.initial, rng);
    double total = 0.0;
    bool terminated = false;
    for (long t = 0; t < step_cap; ++t) {
      total += arp.reward[z];
      const double beta = arp.termination[z];
      if (beta >= 1.0 || (beta > 0.0 && rng.uniform01() < beta)) {
        terminated = true;
        break;
      }
      z = draw(arp.transition.row(z).transpose(), rng);
    }
    if (!terminated) ++stats.truncated;
    sum += total;
  }
  stats.mean = sum / static_cast<double>(num_episodes);
  return stats;
}

void save_arp(const Arp& arp, const std::string& path) {
  arp.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "star-arp v1 num_abstract=" << arp.num_abstract() << " starved=" << arp.starved_states
      << '\n';
  for (Eigen::Index i = 0; i < arp.transition.rows(); ++i) {
    write_row(out, arp.transition.row(i).transpose());
  }
  write_row(out, arp.reward);
  write_row(out, arp.initial);
  write_row(out, arp.termination);
  for (size_t i = 0; i < arp.visited.size(); ++i) {
    out << (i ? " " : "") << static_cast<int>(arp.visited[i]);
  }
  out << '\n';
  if (!out) throw IoError("failed while writing '" + path + "'");
}

Arp load_arp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(in, header)) throw IoError("'" + path + "': missing header");
  std::istringstream hs(header);
  std::string magic, version, tok;
  hs >> magic >> version;
  if (magic != "star-arp") throw IoError("'" + path + "': not an ARP file");
  if (version != "v1") throw IoError("'" + path + "': unsupported version " + version);
  long z = -1, starved = 0;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError("'" + path + "': malformed header field");
    const std::string key = tok.substr(0, eq);
    long value = 0;
    try {
      value = std::stol(tok.substr(eq + 1));
    } catch (const std::exception&) {
      throw IoError("'" + path + "': bad header field " + key);
    }
    if (key == "num_abstract") {
      z = value;
    } else if (key == "starved") {
      starved = value;
    } else {
      throw IoError("'" + path + "': unknown header field '" + key + "'");
    }
  }
  if (z < 1) throw IoError("'" + path + "': missing or bad num_abstract");

  const auto read_vector = [&](Eigen::VectorXd& v) {
    v.resize(z);
    for (long i = 0; i < z; ++i) {
      if (!(in >> v[i])) throw IoError("'" + path + "': truncated numeric data");
    }
  };

  Arp arp;
  arp.transition.resize(z, z);
  for (long i = 0; i < z; ++i) {
    for (long j = 0; j < z; ++j) {
      if (!(in >> arp.transition(i, j))) throw IoError("'" + path + "': truncated transition");
    }
  }
  read_vector(arp.reward);
  read_vector(arp.initial);
  read_vector(arp.termination);
  arp.visited.resize(static_cast<size_t>(z));
  for (long i = 0; i < z; ++i) {
    int flag = 0;
    if (!(in >> flag)) throw IoError("'" + path + "': truncated visited flags");
    arp.visited[static_cast<size_t>(i)] = flag ? 1 : 0;
  }
  arp.starved_states = static_cast<int>(starved);
  try {
    arp.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return arp;
}

}  // namespace star
