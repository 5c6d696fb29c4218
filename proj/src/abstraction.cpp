#include "star/abstraction.hpp"

#include <algorithm>
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

}  // namespace

Abstraction Abstraction::identity(int num_states) {
  if (num_states < 1) throw std::invalid_argument("Abstraction::identity: num_states must be >= 1");
  Abstraction a;
  a.kind_ = Kind::identity;
  a.num_abstract_ = num_states;
  return a;
}

Abstraction Abstraction::single() {
  Abstraction a;
  a.kind_ = Kind::single;
  a.num_abstract_ = 1;
  return a;
}

Abstraction Abstraction::lookup(std::vector<int> table, int num_abstract) {
  if (table.empty()) throw std::invalid_argument("Abstraction::lookup: empty table");
  if (num_abstract < 1) throw std::invalid_argument("Abstraction::lookup: num_abstract must be >= 1");
  for (int z : table) {
    if (z < 0 || z >= num_abstract) {
      throw std::invalid_argument("Abstraction::lookup: table entry out of range");
    }
  }
  Abstraction a;
  a.kind_ = Kind::lookup;
  a.num_abstract_ = num_abstract;
  a.table_ = std::move(table);
  return a;
}

Abstraction Abstraction::centroid(Eigen::MatrixXd centers) {
  if (centers.rows() < 1 || centers.cols() < 1) {
    throw std::invalid_argument("Abstraction::centroid: empty centroid matrix");
  }
  if (!centers.allFinite()) {
    throw std::invalid_argument("Abstraction::centroid: centroids must be finite");
  }
  Abstraction a;
  a.kind_ = Kind::centroid;
  a.num_abstract_ = static_cast<int>(centers.rows());
  a.centers_ = std::move(centers);
  return a;
}

Abstraction Abstraction::centroid_standardized(Eigen::MatrixXd centers, Eigen::VectorXd mean,
                                               Eigen::VectorXd scale) {
  Abstraction a = centroid(std::move(centers));
  if (mean.size() != a.centers_.cols() || scale.size() != a.centers_.cols()) {
    throw std::invalid_argument("Abstraction::centroid_standardized: scaling shape mismatch");
  }
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 0.0)) {
      throw std::invalid_argument("Abstraction::centroid_standardized: scale must be positive");
    }
  }
  a.standardized_ = true;
  a.mean_ = std::move(mean);
  a.scale_ = std::move(scale);
  return a;
}

int Abstraction::apply(const State& state) const {
  switch (kind_) {
    case Kind::identity: {
      const int s = state.index();
      if (s >= num_abstract_) {
        throw std::invalid_argument("Abstraction::apply: state index out of range");
      }
      return s;
    }
    case Kind::single:
      return 0;
    case Kind::lookup: {
      const int s = state.index();
      if (s >= static_cast<int>(table_.size())) {
        throw std::invalid_argument("Abstraction::apply: state index out of range");
      }
      return table_[s];
    }
    case Kind::centroid: {
      const Eigen::VectorXd x = embed_state(state, static_cast<int>(centers_.cols()));
      if (x.size() != centers_.cols()) {
        throw std::invalid_argument("Abstraction::apply: state dimension mismatch");
      }
      Eigen::VectorXd q = x;
      if (standardized_) q = (q - mean_).cwiseQuotient(scale_);
      int best = 0;
      double best_d = (centers_.row(0).transpose() - q).squaredNorm();
      for (int j = 1; j < num_abstract_; ++j) {
        const double d = (centers_.row(j).transpose() - q).squaredNorm();
        if (d < best_d) {
          best = j;
          best_d = d;
        }
      }
      return best;
    }
  }
  throw std::logic_error("Abstraction::apply: unknown kind");
}

Eigen::VectorXd embed_state(const State& state, int one_hot_dim) {
  if (!state.is_discrete()) {
    const auto& v = state.values();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  const int s = state.index();
  if (s >= one_hot_dim) {
    throw std::invalid_argument("embed_state: index " + std::to_string(s) +
                                " does not fit in one-hot dimension " + std::to_string(one_hot_dim));
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(one_hot_dim);
  x[s] = 1.0;
  return x;
}

std::vector<State> collect_states(const Dataset& dataset) {
  std::vector<State> out;
  for (const auto& e : dataset.episodes) {
    for (const auto& step : e.steps) out.push_back(step.state);
  }
  return out;
}

namespace {

struct AssignResult {
  std::vector<int> assignment;
  std::vector<double> dist;  // squared distance to assigned centroid
  double inertia = 0.0;
};

AssignResult assign_nearest(const std::vector<Eigen::VectorXd>& points,
                            const Eigen::MatrixXd& centers) {
  AssignResult r;
  r.assignment.resize(points.size());
  r.dist.resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d = (centers.row(0).transpose() - points[i]).squaredNorm();
    for (Eigen::Index j = 1; j < centers.rows(); ++j) {
      const double d = (centers.row(j).transpose() - points[i]).squaredNorm();
      if (d < best_d) {  // strict: ties keep the lowest index
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    r.assignment[i] = best;
    r.dist[i] = best_d;
    r.inertia += best_d;
  }
  return r;
}

// Reseeds empty clusters to the point farthest from its assigned centroid
// (lowest point index on ties). A donated-from cluster can empty out in turn,
// so clusters are processed as a queue; total work is bounded by 2k as a
// defensive cap.
void fix_empty_clusters(const std::vector<Eigen::VectorXd>& points, Eigen::MatrixXd& centers,
                        AssignResult& r) {
  const int k = static_cast<int>(centers.rows());
  std::vector<int> count(k, 0);
  for (int a : r.assignment) ++count[a];
  std::vector<int> queue;
  for (int j = 0; j < k; ++j) {
    if (count[j] == 0) queue.push_back(j);
  }
  int ops = 0;
  for (size_t q = 0; q < queue.size(); ++q) {
    if (++ops > 2 * k) throw std::logic_error("kmeans_fit: empty-cluster repair did not settle");
    const int j = queue[q];
    int far = -1;
    double far_d = -1.0;
    for (size_t i = 0; i < points.size(); ++i) {
      if (r.dist[i] > far_d) {
        far_d = r.dist[i];
        far = static_cast<int>(i);
      }
    }
    const int donor = r.assignment[far];
    centers.row(j) = points[far].transpose();
    r.assignment[far] = j;
    r.dist[far] = 0.0;
    ++count[j];
    if (--count[donor] == 0) queue.push_back(donor);
  }
  if (!queue.empty()) {
    r.inertia = 0.0;
    for (double d : r.dist) r.inertia += d;
  }
}

}  // namespace

KMeansResult kmeans_fit(const std::vector<Eigen::VectorXd>& raw_points, int k, uint64_t seed,
                        bool standardize, int max_iters, double tol) {
  if (raw_points.empty()) throw std::invalid_argument("kmeans_fit: no points");
  if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("kmeans_fit: max_iters must be >= 1");
  const Eigen::Index dim = raw_points.front().size();
  for (const auto& p : raw_points) {
    if (p.size() != dim) throw std::invalid_argument("kmeans_fit: inconsistent point dimensions");
    if (!p.allFinite()) throw std::invalid_argument("kmeans_fit: points must be finite");
  }

  // Optional per-dimension standardization; zero-variance dimensions are left
  // unscaled so constant features do not blow up.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
  std::vector<Eigen::VectorXd> points;
  if (standardize) {
    for (const auto& p : raw_points) mean += p;
    mean /= static_cast<double>(raw_points.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& p : raw_points) var += (p - mean).cwiseAbs2();
    var /= static_cast<double>(raw_points.size());
    for (Eigen::Index d = 0; d < dim; ++d) {
      const double sd = std::sqrt(var[d]);
      scale[d] = sd > 0.0 ? sd : 1.0;
    }
    points.reserve(raw_points.size());
    for (const auto& p : raw_points) points.push_back((p - mean).cwiseQuotient(scale));
  } else {
    points = raw_points;
  }

  // Initial centroids: k distinct point values, sampled uniformly without
  // replacement (partial Fisher-Yates over the deduplicated list, which is in
  // first-occurrence order).
  std::vector<int> distinct;
  {
    std::map<std::vector<double>, int> seen;
    for (size_t i = 0; i < points.size(); ++i) {
      std::vector<double> key(points[i].data(), points[i].data() + dim);
      if (seen.emplace(std::move(key), static_cast<int>(i)).second) {
        distinct.push_back(static_cast<int>(i));
      }
    }
  }
  if (static_cast<int>(distinct.size()) < k) {
    throw std::invalid_argument("kmeans_fit: insufficient distinct states (" +
                                std::to_string(distinct.size()) + " distinct, k=" +
                                std::to_string(k) + ")");
  }
  Rng rng(hash_combine(seed, "kmeans-init"));
  const int m = static_cast<int>(distinct.size());
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.uniform_int(m - i);
    std::swap(distinct[i], distinct[j]);
  }
  Eigen::MatrixXd centers(k, dim);
  for (int j = 0; j < k; ++j) centers.row(j) = points[distinct[j]].transpose();

  AssignResult cur = assign_nearest(points, centers);
  fix_empty_clusters(points, centers, cur);
  int iterations = 0;
  while (iterations < max_iters) {
    // Update phase: move each centroid to the mean of its members, then
    // reassign. Stops once the largest centroid movement falls below tol
    // (assignments are then stable too, since a zero shift reproduces them).
    Eigen::MatrixXd next_centers = Eigen::MatrixXd::Zero(k, dim);
    std::vector<double> count(k, 0.0);
    for (size_t i = 0; i < points.size(); ++i) {
      next_centers.row(cur.assignment[i]) += points[i].transpose();
      count[cur.assignment[i]] += 1.0;
    }
    for (int j = 0; j < k; ++j) next_centers.row(j) /= count[j];
    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      shift = std::max(shift, (next_centers.row(j) - centers.row(j)).norm());
    }

    AssignResult next = assign_nearest(points, next_centers);
    fix_empty_clusters(points, next_centers, next);
    ++iterations;
    centers = std::move(next_centers);
    cur = std::move(next);
    if (shift < tol) break;
  }

  KMeansResult result;
  result.abstraction = standardize
                           ? Abstraction::centroid_standardized(centers, mean, scale)
                           : Abstraction::centroid(centers);
  result.inertia = cur.inertia;
  result.iterations = iterations;
  result.assignment = std::move(cur.assignment);
  return result;
}

KMeansResult kmeans_fit(const std::vector<State>& states, int k, uint64_t seed, bool standardize,
                        int max_iters, double tol, int one_hot_dim) {
  if (states.empty()) throw std::invalid_argument("kmeans_fit: no states");
  int dim = one_hot_dim;
  if (dim == 0 && states.front().is_discrete()) {
    for (const auto& s : states) dim = std::max(dim, s.index() + 1);
  }
  std::vector<Eigen::VectorXd> points;
  points.reserve(states.size());
  for (const auto& s : states) points.push_back(embed_state(s, dim));
  return kmeans_fit(points, k, seed, standardize, max_iters, tol);
}

double markov_violation_score(const Dataset& dataset, const Abstraction& phi, int order) {
  if (order < 1) throw std::invalid_argument("markov_violation_score: order must be >= 1");
  dataset.validate();

  // Counts of next abstract state per length-(c+1) history and per length-c
  // suffix, over positions that have both a full history and a successor.
  std::map<std::vector<int>, std::map<int, double>> long_counts;
  std::map<std::vector<int>, std::map<int, double>> short_counts;
  double total = 0.0;
  for (const auto& episode : dataset.episodes) {
    const int len = episode.length();
    std::vector<int> z(len);
    for (int t = 0; t < len; ++t) z[t] = phi.apply(episode.steps[t].state);
    for (int t = order; t + 1 < len; ++t) {
      std::vector<int> hist(z.begin() + (t - order), z.begin() + t + 1);
      std::vector<int> suffix(hist.begin() + 1, hist.end());
      long_counts[hist][z[t + 1]] += 1.0;
      short_counts[suffix][z[t + 1]] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) return 0.0;

  double score = 0.0;
  for (const auto& [hist, outcomes] : long_counts) {
    const std::vector<int> suffix(hist.begin() + 1, hist.end());
    const auto& short_outcomes = short_counts.at(suffix);
    double n_long = 0.0, n_short = 0.0;
    for (const auto& [_, c] : outcomes) n_long += c;
    for (const auto& [_, c] : short_outcomes) n_short += c;
    // Total variation over the union of observed outcomes.
    double tv = 0.0;
    for (const auto& [next, c] : short_outcomes) {
      const auto it = outcomes.find(next);
      const double p = it == outcomes.end() ? 0.0 : it->second / n_long;
      tv += std::abs(p - c / n_short);
    }
    for (const auto& [next, c] : outcomes) {
      if (short_outcomes.find(next) == short_outcomes.end()) tv += c / n_long;
    }
    score += (n_long / total) * 0.5 * tv;
  }
  return score;
}

void save_abstraction(const Abstraction& phi, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "star-abstraction v1 kind=";
  switch (phi.kind()) {
    case Abstraction::Kind::identity:
      out << "identity num_abstract=" << phi.num_abstract() << '\n';
      break;
    case Abstraction::Kind::single:
      out << "single num_abstract=1\n";
      break;
    case Abstraction::Kind::lookup: {
      out << "lookup num_abstract=" << phi.num_abstract()
          << " num_states=" << phi.table().size() << '\n';
      const auto& t = phi.table();
      for (size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << t[i];
      out << '\n';
      break;
    }
    case Abstraction::Kind::centroid: {
      out << "centroid num_abstract=" << phi.num_abstract() << " dim=" << phi.centers().cols()
          << " standardized=" << (phi.standardized() ? 1 : 0) << '\n';
      for (Eigen::Index j = 0; j < phi.centers().rows(); ++j) {
        for (Eigen::Index d = 0; d < phi.centers().cols(); ++d) {
          out << (d ? " " : "") << format_double(phi.centers()(j, d));
        }
        out << '\n';
      }
      if (phi.standardized()) {
        for (Eigen::Index d = 0; d < phi.mean().size(); ++d) {
          out << (d ? " " : "") << format_double(phi.mean()[d]);
        }
        out << '\n';
        for (Eigen::Index d = 0; d < phi.scale().size(); ++d) {
          out << (d ? " " : "") << format_double(phi.scale()[d]);
        }
        out << '\n';
      }
      break;
    }
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

namespace {

std::map<std::string, std::string> parse_header_fields(std::istringstream& hs,
                                                       const std::string& path) {
  std::map<std::string, std::string> fields;
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError("'" + path + "': malformed header field");
    fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return fields;
}

long header_long(const std::map<std::string, std::string>& fields, const std::string& key,
                 const std::string& path) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw IoError("'" + path + "': missing header field " + key);
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw IoError("'" + path + "': bad header field " + key);
  }
}

std::vector<double> read_row(std::istream& in, Eigen::Index n, const std::string& path) {
  std::vector<double> row(static_cast<size_t>(n));
  for (auto& x : row) {
    if (!(in >> x)) throw IoError("'" + path + "': truncated numeric row");
  }
  return row;
}

}  // namespace

Abstraction load_abstraction(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(in, header)) throw IoError("'" + path + "': missing header");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "star-abstraction") throw IoError("'" + path + "': not an abstraction file");
  if (version != "v1") throw IoError("'" + path + "': unsupported version " + version);
  const auto fields = parse_header_fields(hs, path);
  const auto kind_it = fields.find("kind");
  if (kind_it == fields.end()) throw IoError("'" + path + "': missing kind");
  const std::string& kind = kind_it->second;

  if (kind == "identity") {
    return Abstraction::identity(static_cast<int>(header_long(fields, "num_abstract", path)));
  }
  if (kind == "single") {
    return Abstraction::single();
  }
  if (kind == "lookup") {
    const long num_abstract = header_long(fields, "num_abstract", path);
    const long num_states = header_long(fields, "num_states", path);
    std::vector<int> table(static_cast<size_t>(num_states));
    for (auto& z : table) {
      if (!(in >> z)) throw IoError("'" + path + "': truncated lookup table");
    }
    return Abstraction::lookup(std::move(table), static_cast<int>(num_abstract));
  }
  if (kind == "centroid") {
    const long k = header_long(fields, "num_abstract", path);
    const long dim = header_long(fields, "dim", path);
    const long standardized = header_long(fields, "standardized", path);
    if (k < 1 || dim < 1) throw IoError("'" + path + "': bad centroid shape");
    Eigen::MatrixXd centers(k, dim);
    for (long j = 0; j < k; ++j) {
      const auto row = read_row(in, dim, path);
      for (long d = 0; d < dim; ++d) centers(j, d) = row[static_cast<size_t>(d)];
    }
    if (!standardized) return Abstraction::centroid(std::move(centers));
    const auto mean_row = read_row(in, dim, path);
    const auto scale_row = read_row(in, dim, path);
    Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(mean_row.data(), dim);
    Eigen::VectorXd scale = Eigen::Map<const Eigen::VectorXd>(scale_row.data(), dim);
    return Abstraction::centroid_standardized(std::move(centers), std::move(mean),
                                              std::move(scale));
  }
  throw IoError("'" + path + "': unknown abstraction kind '" + kind + "'");
}

}  // namespace star
