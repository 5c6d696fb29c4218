#pragma once

#include <memory>
#include <string>

#include "star/env.hpp"
#include "star/policy.hpp"

namespace star {

// Builds an environment from a spec string. Supported:
//   "twostate"
//   "cartpole" or "cartpole:horizon=50"
//   "randmdp:states=5,actions=2,horizon=20,seed=1,term=0.2"
// The returned environment's id() is the spec string itself, so dataset
// provenance headers are sufficient to reopen the environment. Unknown names
// or keys throw std::invalid_argument.
std::unique_ptr<Env> make_env(const std::string& spec);

// Builds a policy from a spec string, sized against `env`. Supported:
//   "uniform"
//   "always:<action>"
//   "lean:<p>"                      (cart-pole style continuous states)
//   "skewed:w=<weight>,seed=<seed>" (tabular environments only)
std::unique_ptr<Policy> make_policy(const std::string& spec, const Env& env);

}  // namespace star
