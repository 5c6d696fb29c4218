#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "star/dataset.hpp"
#include "star/state.hpp"

namespace star {

// A total map from environment states to abstract state indices
// {0, ..., num_abstract()-1}. Four variants:
//   identity  - discrete states map to themselves
//   single    - everything maps to 0
//   lookup    - explicit per-state table (discrete states only)
//   centroid  - nearest centroid in Euclidean distance, with optional
//               per-dimension standardization; discrete states are one-hot
//               embedded to the centroid dimension first
class Abstraction {
 public:
  enum class Kind { identity, single, lookup, centroid };

  static Abstraction identity(int num_states);
  static Abstraction single();
  static Abstraction lookup(std::vector<int> table, int num_abstract);
  static Abstraction centroid(Eigen::MatrixXd centers);
  static Abstraction centroid_standardized(Eigen::MatrixXd centers, Eigen::VectorXd mean,
                                           Eigen::VectorXd scale);

  Kind kind() const { return kind_; }
  int num_abstract() const { return num_abstract_; }

  // Maps a state to its abstract index. Throws std::invalid_argument for
  // states the map is not defined on (wrong kind, index or dimension out of
  // range). Distance ties resolve to the lowest centroid index.
  int apply(const State& state) const;

  // Variant internals, exposed for persistence and tests.
  const std::vector<int>& table() const { return table_; }
  const Eigen::MatrixXd& centers() const { return centers_; }
  bool standardized() const { return standardized_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Abstraction() = default;

  Kind kind_ = Kind::single;
  int num_abstract_ = 1;
  std::vector<int> table_;
  Eigen::MatrixXd centers_;
  bool standardized_ = false;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

struct KMeansResult {
  Abstraction abstraction = Abstraction::single();
  double inertia = 0.0;    // sum of squared distances to assigned centroids
  int iterations = 0;      // completed assign-update rounds
  std::vector<int> assignment;  // final cluster of each input point
};

// Lloyd's algorithm with deterministic tie-breaking. Initial centroids are k
// distinct input points sampled uniformly without replacement; clusters that
// empty out are reseeded to the point currently farthest from its assigned
// centroid. Refitting with the same seed and inputs is bit-identical. Throws
// std::invalid_argument if the input has fewer than k distinct points.
// With standardize set, distances are computed in per-dimension standardized
// space (zero-variance dimensions are left unscaled).
KMeansResult kmeans_fit(const std::vector<Eigen::VectorXd>& points, int k, uint64_t seed,
                        bool standardize = false, int max_iters = 100, double tol = 1e-8);

// Convenience overload: embeds states first (one-hot for discrete states,
// with dimension max index + 1 unless `one_hot_dim` is given).
KMeansResult kmeans_fit(const std::vector<State>& states, int k, uint64_t seed,
                        bool standardize = false, int max_iters = 100, double tol = 1e-8,
                        int one_hot_dim = 0);

// All step states of the dataset, in episode order.
std::vector<State> collect_states(const Dataset& dataset);

// One-hot embeds a discrete state; passes a continuous state through
// (one_hot_dim is ignored for continuous states).
Eigen::VectorXd embed_state(const State& state, int one_hot_dim);

// How far the abstract process is from c-th order Markov, in [0, 1]: the
// occupancy-weighted average, over observed length-(c+1) abstract histories h,
// of the total-variation distance between the empirical next-abstract-state
// distribution given h and the one given h's length-c suffix. Only positions
// with an in-episode successor contribute (termination is not an outcome
// symbol, since under a horizon cap "ends next step" is a property of elapsed
// time, not of any state abstraction). Returns 0 when no position has both a
// full history and a successor.
double markov_violation_score(const Dataset& dataset, const Abstraction& phi, int order);

// Plain-text round-trip persistence; byte-identical on re-save.
void save_abstraction(const Abstraction& phi, const std::string& path);
Abstraction load_abstraction(const std::string& path);

}  // namespace star
