#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "star/env.hpp"
#include "star/policy.hpp"

namespace star::harness {

// Sweep description: which environment and policy pair to benchmark, the
// dataset-size / |Z| / clipping grids, and execution knobs. Loaded from an
// INI-style config file ([env], [policies], [sweep], [output] sections) with
// a few flag-style overrides on top.
struct SweepConfig {
  std::string env_spec;
  std::string behavior_spec;
  std::string evaluation_spec;
  std::vector<long> sizes;                // dataset sizes, strictly increasing
  std::vector<int> num_abstract;          // |Z| grid (star, and mbased on continuous states)
  std::vector<int> clips;                 // clipping grid (0 = unclipped)
  std::vector<std::string> estimators = {"star", "is", "pdis", "wis", "wpdis", "mbased"};
  int trials = 200;
  uint64_t seed = 0;
  bool standardize = false;               // standardize k-means inputs
  long truth_episodes = 0;                // Monte Carlo truth size; 0 = exact DP (tabular only)
  std::string out_dir = "out";
  int workers = 1;

  void validate() const;
};

SweepConfig load_sweep_config(const std::string& path);

// Applies one override; keys: seed, trials, out_dir, workers.
void apply_override(SweepConfig& config, const std::string& key, const std::string& value);

// One benchmark measurement. num_abstract and clip are 0 where the concept
// does not apply (the IS family has neither; mbased has no clip and only gets
// a |Z| when it runs on k-means-discretized continuous states).
struct TrialResult {
  std::string estimator;
  int num_abstract = 0;
  int clip = 0;
  long n = 0;
  int trial = 0;
  uint64_t seed = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double sq_error = 0.0;
};

// Aggregate over the trials of one (estimator, |Z|, c, n) cell. std_error is
// the standard error of the mse (spread of squared errors across trials).
struct SummaryRow {
  std::string estimator;
  int num_abstract = 0;
  int clip = 0;
  long n = 0;
  long trials = 0;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
};

struct TruthInfo {
  double value = 0.0;
  double std_error = 0.0;  // 0 for exact DP
  std::string method;      // "dp" or "mc"
};

// Seed for one trial: a fold of the master seed with every coordinate of the
// trial's grid cell. Adding grid cells or estimators never perturbs the
// streams of existing cells.
uint64_t trial_seed(uint64_t master, const std::string& env_id, const std::string& estimator,
                    int num_abstract, int clip, long n, int trial);

// Exact DP truth on tabular environments, Monte Carlo otherwise.
TruthInfo compute_truth(const SweepConfig& config, const Env& env, const Policy& evaluation);

// Runs one trial: samples a dataset of size n under the behavior policy with
// the trial seed, fits the abstraction on its states where the estimator
// needs one (refit per trial), runs the estimator against the evaluation
// policy, and compares to `truth`. Deterministic given the config and cell.
TrialResult run_trial(const SweepConfig& config, const Env& env, const Policy& behavior,
                      const Policy& evaluation, const std::string& estimator, int num_abstract,
                      int clip, long n, int trial, double truth);

// Groups results by (estimator, num_abstract, clip, n) and aggregates. Every
// group needs >= 2 trials and a consistent truth; rows come out sorted. The
// invariant mse = bias^2 + variance (population variance) is enforced.
std::vector<SummaryRow> summarize(const std::vector<TrialResult>& results);

// Runs the whole sweep: truth, all grid-cell trials on a worker pool with one
// atomically written file per trial (completed trials are skipped, so an
// interrupted sweep resumes where it stopped), then the summary phase. A
// failed trial is recorded as a .err file next to where its result would go
// and the sweep continues. Outputs under config.out_dir:
//   truth.csv, trials/ (per-trial files), trials.csv, summary.csv,
//   heatmap_star_n<n>.csv (per dataset size), selection.csv
void run_sweep(const SweepConfig& config, std::ostream* log = nullptr);

// The summary phase alone: reads per-trial files from `trials_dir` and writes
// trials.csv, summary.csv, heatmaps, and selection.csv under `out_dir`.
void summarize_dir(const std::string& trials_dir, const std::string& out_dir);

}  // namespace star::harness
