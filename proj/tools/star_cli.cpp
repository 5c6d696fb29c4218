// Command-line front end for the star library. Talks to the library through
// the C API only.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "star/star_c.h"

namespace {

struct EnvCloser {
  void operator()(star_env* p) const { star_env_close(p); }
};
struct PolicyCloser {
  void operator()(star_policy* p) const { star_policy_close(p); }
};
struct DatasetCloser {
  void operator()(star_dataset* p) const { star_dataset_close(p); }
};
struct AbstractionCloser {
  void operator()(star_abstraction* p) const { star_abstraction_close(p); }
};

using EnvPtr = std::unique_ptr<star_env, EnvCloser>;
using PolicyPtr = std::unique_ptr<star_policy, PolicyCloser>;
using DatasetPtr = std::unique_ptr<star_dataset, DatasetCloser>;
using AbstractionPtr = std::unique_ptr<star_abstraction, AbstractionCloser>;

// Checks a C API status; on failure prints the message and exits nonzero.
void check(star_status status, const char* what) {
  if (status == STAR_OK) return;
  std::fprintf(stderr, "error: %s: %s\n", what, star_last_error());
  std::exit(1);
}

EnvPtr open_env(const std::string& spec) {
  star_env* env = nullptr;
  check(star_env_open(spec.c_str(), &env), "opening environment");
  return EnvPtr(env);
}

PolicyPtr open_policy(const star_env* env, const std::string& spec, const char* what) {
  star_policy* policy = nullptr;
  check(star_policy_open(env, spec.c_str(), &policy), what);
  return PolicyPtr(policy);
}

DatasetPtr load_dataset(const std::string& path) {
  star_dataset* dataset = nullptr;
  check(star_dataset_load(path.c_str(), &dataset), "loading dataset");
  return DatasetPtr(dataset);
}

// Reads the environment spec out of a dataset file header so subcommands that
// take only a dataset can rebuild policies of the right shape.
std::string dataset_env_spec(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) {
    std::fprintf(stderr, "error: cannot open dataset '%s'\n", path.c_str());
    std::exit(1);
  }
  std::string header;
  for (int ch = std::fgetc(f); ch != EOF && ch != '\n'; ch = std::fgetc(f)) {
    header.push_back(static_cast<char>(ch));
  }
  std::fclose(f);
  const std::string key = " env=";
  const auto at = header.find(key);
  if (at == std::string::npos) {
    std::fprintf(stderr, "error: '%s' has no dataset header\n", path.c_str());
    std::exit(1);
  }
  const auto begin = at + key.size();
  const auto end = header.find(' ', begin);
  return header.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"star: off-policy evaluation through distilled abstract reward processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(star_version()));

  // --- generate ---------------------------------------------------------
  auto* generate = app.add_subcommand("generate", "Sample a dataset from a behavior policy");
  std::string gen_env, gen_policy, gen_out;
  long gen_episodes = 1000;
  uint64_t gen_seed = 0;
  generate->add_option("--env", gen_env, "environment spec, e.g. twostate, cartpole")->required();
  generate->add_option("--policy", gen_policy, "behavior policy spec, e.g. uniform, lean:0.5")
      ->required();
  generate->add_option("--episodes", gen_episodes, "number of episodes")->required();
  generate->add_option("--seed", gen_seed, "master seed")->capture_default_str();
  generate->add_option("--out", gen_out, "output dataset path")->required();
  generate->callback([&] {
    const EnvPtr env = open_env(gen_env);
    const PolicyPtr policy = open_policy(env.get(), gen_policy, "opening behavior policy");
    star_dataset* dataset = nullptr;
    check(star_dataset_sample(env.get(), policy.get(), gen_episodes, gen_seed, &dataset),
          "sampling dataset");
    const DatasetPtr holder(dataset);
    check(star_dataset_save(dataset, gen_out.c_str()), "saving dataset");
    double mean = 0.0;
    check(star_dataset_mean_return(dataset, &mean), "computing mean return");
    std::printf("wrote %ld episodes to %s (behavior mean return %.6g)\n", gen_episodes,
                gen_out.c_str(), mean);
  });

  // --- estimate ---------------------------------------------------------
  auto* estimate = app.add_subcommand("estimate", "Run one estimator on a saved dataset");
  std::string est_data, est_name = "star", est_policy, est_abstraction;
  int est_k = 0, est_clip = 0;
  uint64_t est_seed = 0;
  bool est_standardize = false;
  estimate->add_option("--data", est_data, "dataset path")->required();
  estimate->add_option("--estimator", est_name, "star, is, pdis, wis, wpdis, or mbased")->capture_default_str();
  estimate->add_option("--policy", est_policy,
                       "evaluation policy spec (omit for on-policy star)");
  estimate->add_option("--abstraction", est_abstraction,
                       "abstraction file, or 'identity'/'single' (star only)");
  estimate->add_option("--kmeans", est_k, "fit a k-means abstraction with this many clusters");
  estimate->add_flag("--standardize", est_standardize,
                     "standardize k-means dimensions (with --kmeans)");
  estimate->add_option("--clip", est_clip, "clipping window c, 0 = unclipped (star only)")->capture_default_str();
  estimate->add_option("--seed", est_seed, "seed for k-means initialization")->capture_default_str();
  estimate->callback([&] {
    const EnvPtr env = open_env(dataset_env_spec(est_data));
    const DatasetPtr dataset = load_dataset(est_data);
    PolicyPtr evaluation;
    if (!est_policy.empty()) {
      evaluation = open_policy(env.get(), est_policy, "opening evaluation policy");
    }
    AbstractionPtr abstraction;
    if (est_k > 0 && !est_abstraction.empty()) {
      std::fprintf(stderr, "error: pass --kmeans or --abstraction, not both\n");
      std::exit(1);
    }
    if (est_k > 0) {
      star_abstraction* phi = nullptr;
      check(star_abstraction_kmeans(dataset.get(), est_k, est_seed, est_standardize ? 1 : 0, &phi),
            "fitting k-means abstraction");
      abstraction.reset(phi);
    } else if (est_abstraction == "identity") {
      star_abstraction* phi = nullptr;
      check(star_abstraction_identity(env.get(), &phi), "building identity abstraction");
      abstraction.reset(phi);
    } else if (est_abstraction == "single") {
      star_abstraction* phi = nullptr;
      check(star_abstraction_single(&phi), "building single abstraction");
      abstraction.reset(phi);
    } else if (!est_abstraction.empty()) {
      star_abstraction* phi = nullptr;
      check(star_abstraction_load(est_abstraction.c_str(), &phi), "loading abstraction");
      abstraction.reset(phi);
    }
    double value = 0.0;
    check(star_point_estimate(env.get(), dataset.get(), est_name.c_str(), evaluation.get(),
                              abstraction.get(), est_clip, &value),
          "estimating");
    std::printf("%.17g\n", value);
  });

  // --- truth ------------------------------------------------------------
  auto* truth = app.add_subcommand("truth", "Ground-truth expected return of a policy");
  std::string truth_env, truth_policy;
  long truth_episodes = 200000;
  uint64_t truth_seed = 0;
  truth->add_option("--env", truth_env, "environment spec")->required();
  truth->add_option("--policy", truth_policy, "policy spec")->required();
  truth->add_option("--episodes", truth_episodes,
                    "Monte Carlo episodes (continuous-state environments)")
      ->capture_default_str();
  truth->add_option("--seed", truth_seed, "Monte Carlo seed")->capture_default_str();
  truth->callback([&] {
    const EnvPtr env = open_env(truth_env);
    const PolicyPtr policy = open_policy(env.get(), truth_policy, "opening policy");
    double value = 0.0, std_error = 0.0;
    check(star_truth(env.get(), policy.get(), truth_episodes, truth_seed, &value, &std_error),
          "computing truth");
    std::printf("%.17g (stderr %.3g)\n", value, std_error);
  });

  // --- sweep ------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Run a benchmark sweep from a config file");
  std::string sweep_config, sweep_overrides;
  bool sweep_quiet = false;
  sweep->add_option("config", sweep_config, "INI config file")->required();
  sweep->add_option("--set", sweep_overrides,
                    "overrides, e.g. \"seed=1;trials=10;out_dir=out2;workers=4\"");
  sweep->add_flag("--quiet", sweep_quiet, "suppress progress output");
  sweep->callback([&] {
    check(star_sweep_run(sweep_config.c_str(),
                         sweep_overrides.empty() ? nullptr : sweep_overrides.c_str(),
                         sweep_quiet ? 0 : 1),
          "running sweep");
  });

  // --- summarize ----------------------------------------------------------
  auto* summarize = app.add_subcommand("summarize", "Rebuild summaries from per-trial files");
  std::string sum_trials, sum_out;
  summarize->add_option("--trials", sum_trials, "directory of per-trial CSV files")->required();
  summarize->add_option("--out", sum_out, "output directory")->required();
  summarize->callback([&] {
    check(star_summarize(sum_trials.c_str(), sum_out.c_str()), "summarizing");
    std::printf("summaries written to %s\n", sum_out.c_str());
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
