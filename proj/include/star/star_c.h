/* C API for the star library.
 *
 * Every object is an opaque handle created by a star_*_open/star_*_fit
 * function and released by the matching star_*_close. Functions return
 * star_status; on any status other than STAR_OK the out-parameters are left
 * untouched and star_last_error() returns a message for the calling thread.
 * Handles may be shared across threads only for read-only use.
 */
#ifndef STAR_C_H
#define STAR_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum star_status {
  STAR_OK = 0,
  STAR_ERR_INVALID = 1,  /* bad argument or malformed input */
  STAR_ERR_IO = 2,       /* file missing, unreadable, or malformed */
  STAR_ERR_SUPPORT = 3,  /* evaluation policy puts mass where behavior has none */
  STAR_ERR_SINGULAR = 4, /* estimated reward process never terminates */
  STAR_ERR_FAILURE = 5   /* any other failure */
} star_status;

typedef struct star_env star_env;
typedef struct star_policy star_policy;
typedef struct star_dataset star_dataset;
typedef struct star_abstraction star_abstraction;
typedef struct star_arp star_arp;

/* Library version string, e.g. "1.0.0". */
const char* star_version(void);

/* Message for the most recent failing call on this thread ("" if none). The
 * pointer stays valid until the next failing call on the same thread. */
const char* star_last_error(void);

/* --- environments and policies --------------------------------------- */

/* spec examples: "twostate", "cartpole", "cartpole:horizon=20",
 * "randmdp:states=5,actions=3,horizon=20,seed=7",
 * "randmdp:states=5,actions=3,horizon=20,seed=7,term=0.3" */
star_status star_env_open(const char* spec, star_env** out);
void star_env_close(star_env* env);

/* spec examples: "uniform", "always:1", "lean:0.9",
 * "skewed:w=0.9,seed=3". The policy is sized for the given environment. */
star_status star_policy_open(const star_env* env, const char* spec, star_policy** out);
void star_policy_close(star_policy* policy);

/* --- datasets ---------------------------------------------------------- */

star_status star_dataset_sample(const star_env* env, const star_policy* behavior,
                                long num_episodes, uint64_t seed, star_dataset** out);
star_status star_dataset_save(const star_dataset* dataset, const char* path);
star_status star_dataset_load(const char* path, star_dataset** out);
star_status star_dataset_num_episodes(const star_dataset* dataset, long* out);
star_status star_dataset_mean_return(const star_dataset* dataset, double* out);
void star_dataset_close(star_dataset* dataset);

/* --- state abstractions ------------------------------------------------ */

star_status star_abstraction_identity(const star_env* env, star_abstraction** out);
star_status star_abstraction_single(star_abstraction** out);
/* Fits k-means over every state in the dataset (discrete states are one-hot
 * embedded). standardize != 0 scales coordinates to unit variance first. */
star_status star_abstraction_kmeans(const star_dataset* dataset, int num_abstract, uint64_t seed,
                                    int standardize, star_abstraction** out);
star_status star_abstraction_save(const star_abstraction* abstraction, const char* path);
star_status star_abstraction_load(const char* path, star_abstraction** out);
void star_abstraction_close(star_abstraction* abstraction);

/* --- abstract reward processes ---------------------------------------- */

/* Estimates an abstract reward process from the dataset. evaluation == NULL
 * means on-policy; otherwise steps are importance-weighted toward the
 * evaluation policy with clip window c (clip == 0 means unclipped). */
star_status star_arp_estimate(const star_dataset* dataset, const star_abstraction* abstraction,
                              const star_policy* evaluation, int clip, star_arp** out);
star_status star_arp_expected_return(const star_arp* arp, double* out);
star_status star_arp_save(const star_arp* arp, const char* path);
star_status star_arp_load(const char* path, star_arp** out);
void star_arp_close(star_arp* arp);

/* --- point estimates and ground truth ---------------------------------- */

/* estimator is one of "star", "is", "pdis", "wis", "wpdis", "mbased".
 * abstraction applies to "star" only (NULL means collapse-to-one); clip
 * applies to "star" only. "mbased" requires a discrete-state environment. */
star_status star_point_estimate(const star_env* env, const star_dataset* dataset,
                                const char* estimator, const star_policy* evaluation,
                                const star_abstraction* abstraction, int clip, double* out);

/* Ground-truth expected return of the policy: exact dynamic programming for
 * discrete-state environments (mc_episodes ignored, *std_error = 0),
 * Monte Carlo with mc_episodes rollouts otherwise. */
star_status star_truth(const star_env* env, const star_policy* policy, long mc_episodes,
                       uint64_t seed, double* value, double* std_error);

/* --- experiment harness ------------------------------------------------- */

/* Runs the sweep described by an INI config file. overrides is NULL or a
 * semicolon-separated list of key=value pairs (keys: seed, trials, out_dir,
 * workers). Progress goes to stderr if verbose != 0. */
star_status star_sweep_run(const char* config_path, const char* overrides, int verbose);

/* Rebuilds trials.csv, summary.csv, heatmaps, and selection.csv in out_dir
 * from the per-trial files under trials_dir. */
star_status star_summarize(const char* trials_dir, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STAR_C_H */
