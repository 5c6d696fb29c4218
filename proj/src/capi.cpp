#include "star/star_c.h"

#include <cstdint>
#include <iostream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "star/abstraction.hpp"
#include "star/arp.hpp"
#include "star/dataset.hpp"
#include "star/env.hpp"
#include "star/errors.hpp"
#include "star/estimators.hpp"
#include "star/harness.hpp"
#include "star/policy.hpp"
#include "star/rng.hpp"
#include "star/sampling.hpp"
#include "star/specs.hpp"

struct star_env {
  std::unique_ptr<star::Env> env;
};
struct star_policy {
  std::unique_ptr<star::Policy> policy;
};
struct star_dataset {
  star::Dataset dataset;
};
struct star_abstraction {
  star::Abstraction phi;
};
struct star_arp {
  star::Arp arp;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
star_status guarded(F&& fn) noexcept {
  try {
    fn();
    return STAR_OK;
  } catch (const star::SupportViolation& e) {
    g_last_error = e.what();
    return STAR_ERR_SUPPORT;
  } catch (const star::NonTerminatingArp& e) {
    g_last_error = e.what();
    return STAR_ERR_SINGULAR;
  } catch (const star::IoError& e) {
    g_last_error = e.what();
    return STAR_ERR_IO;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return STAR_ERR_INVALID;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return STAR_ERR_FAILURE;
  } catch (...) {
    g_last_error = "unknown error";
    return STAR_ERR_FAILURE;
  }
}

star_status fail_invalid(const std::string& message) {
  g_last_error = message;
  return STAR_ERR_INVALID;
}

}  // namespace

extern "C" {

const char* star_version(void) { return "1.0.0"; }

const char* star_last_error(void) { return g_last_error.c_str(); }

/* --- environments and policies --------------------------------------- */

star_status star_env_open(const char* spec, star_env** out) {
  if (spec == nullptr || out == nullptr) return fail_invalid("star_env_open: null argument");
  return guarded([&] { *out = new star_env{star::make_env(spec)}; });
}

void star_env_close(star_env* env) { delete env; }

star_status star_policy_open(const star_env* env, const char* spec, star_policy** out) {
  if (env == nullptr || spec == nullptr || out == nullptr) {
    return fail_invalid("star_policy_open: null argument");
  }
  return guarded([&] { *out = new star_policy{star::make_policy(spec, *env->env)}; });
}

void star_policy_close(star_policy* policy) { delete policy; }

/* --- datasets ---------------------------------------------------------- */

star_status star_dataset_sample(const star_env* env, const star_policy* behavior,
                                long num_episodes, uint64_t seed, star_dataset** out) {
  if (env == nullptr || behavior == nullptr || out == nullptr) {
    return fail_invalid("star_dataset_sample: null argument");
  }
  if (num_episodes < 1 || num_episodes > std::numeric_limits<int>::max()) {
    return fail_invalid("star_dataset_sample: num_episodes out of range");
  }
  return guarded([&] {
    *out = new star_dataset{star::sample_trajectories(*env->env, *behavior->policy,
                                                      static_cast<int>(num_episodes), seed)};
  });
}

star_status star_dataset_save(const star_dataset* dataset, const char* path) {
  if (dataset == nullptr || path == nullptr) return fail_invalid("star_dataset_save: null argument");
  return guarded([&] { star::save_dataset(dataset->dataset, path); });
}

star_status star_dataset_load(const char* path, star_dataset** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("star_dataset_load: null argument");
  return guarded([&] { *out = new star_dataset{star::load_dataset(path)}; });
}

star_status star_dataset_num_episodes(const star_dataset* dataset, long* out) {
  if (dataset == nullptr || out == nullptr) {
    return fail_invalid("star_dataset_num_episodes: null argument");
  }
  *out = static_cast<long>(dataset->dataset.episodes.size());
  return STAR_OK;
}

star_status star_dataset_mean_return(const star_dataset* dataset, double* out) {
  if (dataset == nullptr || out == nullptr) {
    return fail_invalid("star_dataset_mean_return: null argument");
  }
  return guarded([&] { *out = dataset->dataset.mean_return(); });
}

void star_dataset_close(star_dataset* dataset) { delete dataset; }

/* --- state abstractions ------------------------------------------------ */

star_status star_abstraction_identity(const star_env* env, star_abstraction** out) {
  if (env == nullptr || out == nullptr) {
    return fail_invalid("star_abstraction_identity: null argument");
  }
  return guarded([&] {
    const int num_states = env->env->num_states();
    if (num_states <= 0) {
      throw std::invalid_argument(
          "star_abstraction_identity: environment does not have discrete states");
    }
    *out = new star_abstraction{star::Abstraction::identity(num_states)};
  });
}

star_status star_abstraction_single(star_abstraction** out) {
  if (out == nullptr) return fail_invalid("star_abstraction_single: null argument");
  return guarded([&] { *out = new star_abstraction{star::Abstraction::single()}; });
}

star_status star_abstraction_kmeans(const star_dataset* dataset, int num_abstract, uint64_t seed,
                                    int standardize, star_abstraction** out) {
  if (dataset == nullptr || out == nullptr) {
    return fail_invalid("star_abstraction_kmeans: null argument");
  }
  return guarded([&] {
    star::KMeansResult fit = star::kmeans_fit(star::collect_states(dataset->dataset), num_abstract,
                                              seed, standardize != 0);
    *out = new star_abstraction{std::move(fit.abstraction)};
  });
}

star_status star_abstraction_save(const star_abstraction* abstraction, const char* path) {
  if (abstraction == nullptr || path == nullptr) {
    return fail_invalid("star_abstraction_save: null argument");
  }
  return guarded([&] { star::save_abstraction(abstraction->phi, path); });
}

star_status star_abstraction_load(const char* path, star_abstraction** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("star_abstraction_load: null argument");
  return guarded([&] { *out = new star_abstraction{star::load_abstraction(path)}; });
}

void star_abstraction_close(star_abstraction* abstraction) { delete abstraction; }

/* --- abstract reward processes ---------------------------------------- */

star_status star_arp_estimate(const star_dataset* dataset, const star_abstraction* abstraction,
                              const star_policy* evaluation, int clip, star_arp** out) {
  if (dataset == nullptr || abstraction == nullptr || out == nullptr) {
    return fail_invalid("star_arp_estimate: null argument");
  }
  return guarded([&] {
    if (evaluation == nullptr) {
      *out = new star_arp{star::estimate_arp_on_policy(dataset->dataset, abstraction->phi)};
      return;
    }
    star::StarConfig config;
    config.abstraction = abstraction->phi;
    config.clip = clip;
    config.evaluation = evaluation->policy.get();
    *out = new star_arp{star::estimate_arp_off_policy(dataset->dataset, config)};
  });
}

star_status star_arp_expected_return(const star_arp* arp, double* out) {
  if (arp == nullptr || out == nullptr) {
    return fail_invalid("star_arp_expected_return: null argument");
  }
  return guarded([&] { *out = star::arp_expected_return(arp->arp); });
}

star_status star_arp_save(const star_arp* arp, const char* path) {
  if (arp == nullptr || path == nullptr) return fail_invalid("star_arp_save: null argument");
  return guarded([&] { star::save_arp(arp->arp, path); });
}

star_status star_arp_load(const char* path, star_arp** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("star_arp_load: null argument");
  return guarded([&] { *out = new star_arp{star::load_arp(path)}; });
}

void star_arp_close(star_arp* arp) { delete arp; }

/* --- point estimates and ground truth ---------------------------------- */

star_status star_point_estimate(const star_env* env, const star_dataset* dataset,
                                const char* estimator, const star_policy* evaluation,
                                const star_abstraction* abstraction, int clip, double* out) {
  if (env == nullptr || dataset == nullptr || estimator == nullptr || out == nullptr) {
    return fail_invalid("star_point_estimate: null argument");
  }
  const std::string id(estimator);
  if (id != "star" && evaluation == nullptr) {
    return fail_invalid("star_point_estimate: estimator '" + id +
                        "' requires an evaluation policy");
  }
  return guarded([&] {
    double value = 0.0;
    if (id == "star") {
      star::StarConfig config;
      if (abstraction != nullptr) config.abstraction = abstraction->phi;
      config.clip = clip;
      config.evaluation = evaluation == nullptr ? nullptr : evaluation->policy.get();
      value = star::star_estimate(dataset->dataset, config);
    } else if (id == "is") {
      value = star::is_estimate(dataset->dataset, *evaluation->policy);
    } else if (id == "pdis") {
      value = star::pdis_estimate(dataset->dataset, *evaluation->policy);
    } else if (id == "wis") {
      value = star::wis_estimate(dataset->dataset, *evaluation->policy);
    } else if (id == "wpdis") {
      value = star::wpdis_estimate(dataset->dataset, *evaluation->policy);
    } else if (id == "mbased") {
      const int num_states = env->env->num_states();
      if (num_states <= 0) {
        throw std::invalid_argument(
            "star_point_estimate: mbased requires a discrete-state environment");
      }
      value = star::model_based_estimate(dataset->dataset, *evaluation->policy, num_states);
    } else {
      throw std::invalid_argument("star_point_estimate: unknown estimator '" + id + "'");
    }
    *out = value;
  });
}

star_status star_truth(const star_env* env, const star_policy* policy, long mc_episodes,
                       uint64_t seed, double* value, double* std_error) {
  if (env == nullptr || policy == nullptr || value == nullptr || std_error == nullptr) {
    return fail_invalid("star_truth: null argument");
  }
  return guarded([&] {
    if (env->env->num_states() > 0) {
      const auto* tabular = dynamic_cast<const star::TabularEnv*>(env->env.get());
      if (tabular == nullptr) {
        throw std::invalid_argument("star_truth: discrete environment without a tabular model");
      }
      *value = star::exact_return_dp(tabular->mdp(), *policy->policy);
      *std_error = 0.0;
      return;
    }
    if (mc_episodes < 1) {
      throw std::invalid_argument(
          "star_truth: continuous environments need mc_episodes > 0 for Monte Carlo truth");
    }
    const star::McEstimate mc =
        star::monte_carlo_return(*env->env, *policy->policy, mc_episodes, seed);
    *value = mc.mean;
    *std_error = mc.std_error;
  });
}

/* --- experiment harness ------------------------------------------------- */

star_status star_sweep_run(const char* config_path, const char* overrides, int verbose) {
  if (config_path == nullptr) return fail_invalid("star_sweep_run: null config path");
  return guarded([&] {
    star::harness::SweepConfig config = star::harness::load_sweep_config(config_path);
    if (overrides != nullptr) {
      std::string rest(overrides);
      while (!rest.empty()) {
        const auto semi = rest.find(';');
        const std::string part = rest.substr(0, semi);
        rest = semi == std::string::npos ? "" : rest.substr(semi + 1);
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
          throw std::invalid_argument("star_sweep_run: override '" + part +
                                      "' is not key=value");
        }
        star::harness::apply_override(config, part.substr(0, eq), part.substr(eq + 1));
      }
      config.validate();
    }
    star::harness::run_sweep(config, verbose != 0 ? &std::cerr : nullptr);
  });
}

star_status star_summarize(const char* trials_dir, const char* out_dir) {
  if (trials_dir == nullptr || out_dir == nullptr) {
    return fail_invalid("star_summarize: null argument");
  }
  return guarded([&] { star::harness::summarize_dir(trials_dir, out_dir); });
}

} /* extern "C" */
