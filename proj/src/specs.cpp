#include "star/specs.hpp"

#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace star {

namespace {

// Splits "name:key=value,key=value" (or "name:value" for single-argument
// specs) into the name and the argument part.
std::pair<std::string, std::string> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

std::map<std::string, std::string> parse_kv(const std::string& args, const std::string& spec) {
  std::map<std::string, std::string> out;
  if (args.empty()) return out;
  std::stringstream ss(args);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("spec '" + spec + "': expected key=value, got '" + item + "'");
    }
    if (!out.emplace(item.substr(0, eq), item.substr(eq + 1)).second) {
      throw std::invalid_argument("spec '" + spec + "': duplicate key '" + item.substr(0, eq) + "'");
    }
  }
  return out;
}

long take_long(std::map<std::string, std::string>& kv, const std::string& key, long fallback,
               const std::string& spec) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    const long v = std::stol(it->second);
    kv.erase(it);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("spec '" + spec + "': bad integer for '" + key + "'");
  }
}

double take_double(std::map<std::string, std::string>& kv, const std::string& key,
                   double fallback, const std::string& spec) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    const double v = std::stod(it->second);
    kv.erase(it);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("spec '" + spec + "': bad number for '" + key + "'");
  }
}

void expect_empty(const std::map<std::string, std::string>& kv, const std::string& spec) {
  if (!kv.empty()) {
    throw std::invalid_argument("spec '" + spec + "': unknown key '" + kv.begin()->first + "'");
  }
}

// TabularEnv whose id() is the originating spec string.
class SpecTabularEnv : public TabularEnv {
 public:
  SpecTabularEnv(TabularMdp mdp, std::string spec) : TabularEnv(std::move(mdp), std::move(spec)) {}
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& spec) {
  const auto [name, args] = split_spec(spec);
  if (name == "twostate") {
    if (!args.empty()) throw std::invalid_argument("spec 'twostate' takes no arguments");
    return std::make_unique<SpecTabularEnv>(two_state_mdp(), spec);
  }
  if (name == "cartpole") {
    auto kv = parse_kv(args, spec);
    const long horizon = take_long(kv, "horizon", 50, spec);
    expect_empty(kv, spec);
    if (horizon != 50) {
      // id() must round-trip through dataset headers, so keep the spec string.
      class SpecCartPole : public CartPoleEnv {
       public:
        SpecCartPole(int h, std::string s) : CartPoleEnv(h), spec_(std::move(s)) {}
        std::string id() const override { return spec_; }

       private:
        std::string spec_;
      };
      return std::make_unique<SpecCartPole>(static_cast<int>(horizon), spec);
    }
    return std::make_unique<CartPoleEnv>(static_cast<int>(horizon));
  }
  if (name == "randmdp") {
    auto kv = parse_kv(args, spec);
    const long states = take_long(kv, "states", 5, spec);
    const long actions = take_long(kv, "actions", 2, spec);
    const long horizon = take_long(kv, "horizon", 20, spec);
    const long seed = take_long(kv, "seed", 1, spec);
    const double term = take_double(kv, "term", 0.2, spec);
    expect_empty(kv, spec);
    return std::make_unique<SpecTabularEnv>(
        random_mdp(static_cast<int>(states), static_cast<int>(actions), static_cast<int>(horizon),
                   static_cast<uint64_t>(seed), term),
        spec);
  }
  throw std::invalid_argument("unknown environment spec '" + spec + "'");
}

std::unique_ptr<Policy> make_policy(const std::string& spec, const Env& env) {
  const auto [name, args] = split_spec(spec);
  if (name == "uniform") {
    if (!args.empty()) throw std::invalid_argument("spec 'uniform' takes no arguments");
    return std::make_unique<UniformPolicy>(env.num_actions());
  }
  if (name == "always") {
    try {
      return std::make_unique<AlwaysPolicy>(std::stoi(args), env.num_actions());
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("spec '" + spec + "': expected always:<action>");
    }
  }
  if (name == "lean") {
    if (env.num_states() > 0) {
      throw std::invalid_argument("spec '" + spec +
                                  "' reads continuous state and cannot drive a discrete-state "
                                  "environment");
    }
    try {
      return std::make_unique<LeanPolicy>(std::stod(args));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("spec '" + spec + "': expected lean:<p>");
    }
  }
  if (name == "skewed") {
    auto kv = parse_kv(args, spec);
    const double weight = take_double(kv, "w", 0.9, spec);
    const long seed = take_long(kv, "seed", 1, spec);
    expect_empty(kv, spec);
    if (env.num_states() < 1) {
      throw std::invalid_argument("spec '" + spec + "': skewed policies need a tabular environment");
    }
    return std::make_unique<TabularPolicy>(
        make_skewed_policy(env.num_states(), env.num_actions(), weight,
                           static_cast<uint64_t>(seed)));
  }
  throw std::invalid_argument("unknown policy spec '" + spec + "'");
}

}  // namespace star
