#include "star/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "star/abstraction.hpp"
#include "star/arp.hpp"
#include "star/errors.hpp"
#include "star/estimators.hpp"
#include "star/rng.hpp"
#include "star/sampling.hpp"
#include "star/specs.hpp"

namespace star::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTrialHeader =
    "estimator,num_abstract,clip_c,n,trial,seed,estimate,truth,sq_error";
constexpr const char* kSummaryHeader =
    "estimator,num_abstract,clip_c,n,trials,mse,bias,variance,stderr";

const std::vector<std::string> kKnownEstimators = {"star", "is",    "pdis",
                                                   "wis",  "wpdis", "mbased"};

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

long parse_long(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const long v = std::stol(trim(s), &pos);
    if (pos != trim(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer for " + what + ": '" + s + "'");
  }
}

double parse_double_field(const std::string& s, const std::string& what) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number for " + what + ": '" + s + "'");
  }
}

// Writes content to path atomically (temp file + rename), so a file's
// existence implies it is complete.
void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw IoError("failed while writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace

void SweepConfig::validate() const {
  if (env_spec.empty()) throw std::invalid_argument("SweepConfig: env spec is required");
  if (behavior_spec.empty()) throw std::invalid_argument("SweepConfig: behavior policy is required");
  if (evaluation_spec.empty()) {
    throw std::invalid_argument("SweepConfig: evaluation policy is required");
  }
  if (sizes.empty()) throw std::invalid_argument("SweepConfig: dataset sizes grid is empty");
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw std::invalid_argument("SweepConfig: dataset sizes must be >= 1");
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw std::invalid_argument("SweepConfig: dataset sizes must be strictly increasing");
    }
  }
  if (num_abstract.empty()) throw std::invalid_argument("SweepConfig: num_abstract grid is empty");
  for (int z : num_abstract) {
    if (z < 1) throw std::invalid_argument("SweepConfig: num_abstract entries must be >= 1");
  }
  if (clips.empty()) throw std::invalid_argument("SweepConfig: clip grid is empty");
  for (int c : clips) {
    if (c < 0) throw std::invalid_argument("SweepConfig: clip entries must be >= 0");
  }
  if (estimators.empty()) throw std::invalid_argument("SweepConfig: estimators list is empty");
  std::set<std::string> seen;
  for (const auto& e : estimators) {
    if (std::find(kKnownEstimators.begin(), kKnownEstimators.end(), e) == kKnownEstimators.end()) {
      throw std::invalid_argument("SweepConfig: unknown estimator '" + e + "'");
    }
    if (!seen.insert(e).second) {
      throw std::invalid_argument("SweepConfig: duplicate estimator '" + e + "'");
    }
  }
  if (trials < 2) throw std::invalid_argument("SweepConfig: trials must be >= 2");
  if (workers < 1) throw std::invalid_argument("SweepConfig: workers must be >= 1");
  if (truth_episodes < 0) throw std::invalid_argument("SweepConfig: truth_episodes must be >= 0");
  if (out_dir.empty()) throw std::invalid_argument("SweepConfig: output dir is required");
}

void apply_override(SweepConfig& config, const std::string& key, const std::string& value) {
  if (key == "seed") {
    config.seed = static_cast<uint64_t>(parse_long(value, "seed"));
  } else if (key == "trials") {
    config.trials = static_cast<int>(parse_long(value, "trials"));
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "workers") {
    config.workers = static_cast<int>(parse_long(value, "workers"));
  } else {
    throw std::invalid_argument("unknown config override '" + key + "'");
  }
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  SweepConfig config;
  std::string line, section;
  int line_no = 0;
  const auto fail = [&](const std::string& message) {
    throw IoError("config '" + path + "' line " + std::to_string(line_no) + ": " + message);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "env" && section != "policies" && section != "sweep" &&
          section != "output") {
        fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (section == "env" && key == "spec") {
        config.env_spec = value;
      } else if (section == "policies" && key == "behavior") {
        config.behavior_spec = value;
      } else if (section == "policies" && key == "evaluation") {
        config.evaluation_spec = value;
      } else if (section == "sweep" && key == "sizes") {
        config.sizes.clear();
        for (const auto& v : split(value, ',')) config.sizes.push_back(parse_long(v, "sizes"));
      } else if (section == "sweep" && key == "num_abstract") {
        config.num_abstract.clear();
        for (const auto& v : split(value, ',')) {
          config.num_abstract.push_back(static_cast<int>(parse_long(v, "num_abstract")));
        }
      } else if (section == "sweep" && key == "clip") {
        config.clips.clear();
        for (const auto& v : split(value, ',')) {
          config.clips.push_back(static_cast<int>(parse_long(v, "clip")));
        }
      } else if (section == "sweep" && key == "estimators") {
        config.estimators.clear();
        for (const auto& v : split(value, ',')) config.estimators.push_back(trim(v));
      } else if (section == "sweep" && key == "trials") {
        config.trials = static_cast<int>(parse_long(value, "trials"));
      } else if (section == "sweep" && key == "seed") {
        config.seed = static_cast<uint64_t>(parse_long(value, "seed"));
      } else if (section == "sweep" && key == "standardize") {
        if (value == "true") {
          config.standardize = true;
        } else if (value == "false") {
          config.standardize = false;
        } else {
          fail("standardize must be true or false");
        }
      } else if (section == "sweep" && key == "truth_episodes") {
        config.truth_episodes = parse_long(value, "truth_episodes");
      } else if (section == "output" && key == "dir") {
        config.out_dir = value;
      } else if (section == "output" && key == "workers") {
        config.workers = static_cast<int>(parse_long(value, "workers"));
      } else {
        fail("unknown key '" + key + "' in section [" + section + "]");
      }
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError("config '" + path + "': " + e.what());
  }
  return config;
}

uint64_t trial_seed(uint64_t master, const std::string& env_id, const std::string& estimator,
                    int num_abstract, int clip, long n, int trial) {
  uint64_t h = master;
  h = hash_combine(h, env_id);
  h = hash_combine(h, estimator);
  h = hash_combine(h, static_cast<uint64_t>(num_abstract));
  h = hash_combine(h, static_cast<uint64_t>(clip));
  h = hash_combine(h, static_cast<uint64_t>(n));
  h = hash_combine(h, static_cast<uint64_t>(trial));
  return h;
}

TruthInfo compute_truth(const SweepConfig& config, const Env& env, const Policy& evaluation) {
  TruthInfo info;
  if (env.num_states() > 0) {
    const auto* tabular = dynamic_cast<const TabularEnv*>(&env);
    if (tabular == nullptr) {
      throw std::invalid_argument("compute_truth: discrete environment without a tabular model");
    }
    info.value = exact_return_dp(tabular->mdp(), evaluation);
    info.method = "dp";
    return info;
  }
  if (config.truth_episodes < 1) {
    throw std::invalid_argument(
        "compute_truth: continuous environments need truth_episodes > 0 for Monte Carlo truth");
  }
  const McEstimate mc = monte_carlo_return(env, evaluation, config.truth_episodes,
                                           hash_combine(config.seed, "truth"));
  info.value = mc.mean;
  info.std_error = mc.std_error;
  info.method = "mc";
  return info;
}

namespace {

Abstraction fit_trial_abstraction(const Dataset& dataset, const Env& env, int num_abstract,
                                  uint64_t trial_seed_value, bool standardize) {
  const uint64_t abstraction_seed = hash_combine(trial_seed_value, "abstraction");
  return kmeans_fit(collect_states(dataset), num_abstract, abstraction_seed, standardize,
                    /*max_iters=*/100, /*tol=*/1e-8, /*one_hot_dim=*/env.num_states())
      .abstraction;
}

// Model-based baseline on k-means-discretized continuous states: relabel the
// dataset through the abstraction and project the evaluation policy onto
// abstract states by visitation-weighted averaging.
double model_based_on_abstraction(const Dataset& dataset, const Policy& evaluation,
                                  const Abstraction& phi) {
  const int Z = phi.num_abstract();
  const int A = evaluation.num_actions();
  Dataset relabeled;
  relabeled.env_id = dataset.env_id;
  relabeled.policy_id = dataset.policy_id;
  relabeled.seed = dataset.seed;
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(Z, A);
  Eigen::VectorXd visits = Eigen::VectorXd::Zero(Z);
  for (const auto& episode : dataset.episodes) {
    Episode out;
    for (const auto& step : episode.steps) {
      const int z = phi.apply(step.state);
      out.steps.push_back(StepRecord{State::discrete(z), step.action, step.reward,
                                     step.behavior_prob});
      for (int a = 0; a < A; ++a) probs(z, a) += evaluation.prob(step.state, a);
      visits[z] += 1.0;
    }
    relabeled.episodes.push_back(std::move(out));
  }
  for (int z = 0; z < Z; ++z) {
    if (visits[z] > 0.0) {
      const double row_sum = probs.row(z).sum();
      if (row_sum > 0.0) {
        probs.row(z) /= row_sum;
        continue;
      }
    }
    probs.row(z).setConstant(1.0 / A);
  }
  const TabularPolicy projected(std::move(probs), "projected");
  return model_based_estimate(relabeled, projected, Z);
}

}  // namespace

TrialResult run_trial(const SweepConfig& config, const Env& env, const Policy& behavior,
                      const Policy& evaluation, const std::string& estimator, int num_abstract,
                      int clip, long n, int trial, double truth) {
  TrialResult result;
  result.estimator = estimator;
  result.num_abstract = num_abstract;
  result.clip = clip;
  result.n = n;
  result.trial = trial;
  result.seed = trial_seed(config.seed, env.id(), estimator, num_abstract, clip, n, trial);
  result.truth = truth;

  const Dataset dataset = sample_trajectories(env, behavior, static_cast<int>(n), result.seed);
  if (estimator == "star") {
    StarConfig star_config;
    star_config.abstraction =
        fit_trial_abstraction(dataset, env, num_abstract, result.seed, config.standardize);
    star_config.clip = clip;
    star_config.evaluation = &evaluation;
    result.estimate = star_estimate(dataset, star_config);
  } else if (estimator == "is") {
    result.estimate = is_estimate(dataset, evaluation);
  } else if (estimator == "pdis") {
    result.estimate = pdis_estimate(dataset, evaluation);
  } else if (estimator == "wis") {
    result.estimate = wis_estimate(dataset, evaluation);
  } else if (estimator == "wpdis") {
    result.estimate = wpdis_estimate(dataset, evaluation);
  } else if (estimator == "mbased") {
    if (env.num_states() > 0) {
      result.estimate = model_based_estimate(dataset, evaluation, env.num_states());
    } else {
      const Abstraction phi =
          fit_trial_abstraction(dataset, env, num_abstract, result.seed, config.standardize);
      result.estimate = model_based_on_abstraction(dataset, evaluation, phi);
    }
  } else {
    throw std::invalid_argument("run_trial: unknown estimator '" + estimator + "'");
  }
  const double err = result.estimate - truth;
  result.sq_error = err * err;
  return result;
}

namespace {

std::string trial_row(const TrialResult& r) {
  const bool has_abstract = r.estimator == "star" || r.num_abstract > 0;
  const bool has_clip = r.estimator == "star";
  std::ostringstream out;
  out << r.estimator << ',';
  if (has_abstract) out << r.num_abstract;
  out << ',';
  if (has_clip) out << r.clip;
  out << ',' << r.n << ',' << r.trial << ',' << r.seed << ',' << format_double(r.estimate) << ','
      << format_double(r.truth) << ',' << format_double(r.sq_error);
  return out.str();
}

TrialResult parse_trial_row(const std::string& line, const std::string& where) {
  const auto fields = split(line, ',');
  if (fields.size() != 9) {
    throw IoError(where + ": expected 9 fields, got " + std::to_string(fields.size()));
  }
  TrialResult r;
  r.estimator = fields[0];
  r.num_abstract = fields[1].empty() ? 0 : static_cast<int>(parse_long(fields[1], "num_abstract"));
  r.clip = fields[2].empty() ? 0 : static_cast<int>(parse_long(fields[2], "clip_c"));
  r.n = parse_long(fields[3], "n");
  r.trial = static_cast<int>(parse_long(fields[4], "trial"));
  try {
    r.seed = std::stoull(fields[5]);
  } catch (const std::exception&) {
    throw IoError(where + ": bad seed '" + fields[5] + "'");
  }
  r.estimate = parse_double_field(fields[6], "estimate");
  r.truth = parse_double_field(fields[7], "truth");
  r.sq_error = parse_double_field(fields[8], "sq_error");
  return r;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<TrialResult>& results) {
  if (results.empty()) throw std::invalid_argument("summarize: no results");
  using Key = std::tuple<std::string, int, int, long>;
  std::map<Key, std::vector<const TrialResult*>> groups;
  for (const auto& r : results) {
    groups[Key(r.estimator, r.num_abstract, r.clip, r.n)].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    const long k = static_cast<long>(members.size());
    if (k < 2) {
      throw std::invalid_argument("summarize: group " + std::get<0>(key) + " (|Z|=" +
                                  std::to_string(std::get<1>(key)) + ", c=" +
                                  std::to_string(std::get<2>(key)) + ", n=" +
                                  std::to_string(std::get<3>(key)) + ") has fewer than 2 trials");
    }
    const double truth = members.front()->truth;
    for (const auto* m : members) {
      if (m->truth != truth) {
        throw std::invalid_argument("summarize: inconsistent truth within a group");
      }
    }
    double mean = 0.0, mse = 0.0;
    for (const auto* m : members) {
      mean += m->estimate;
      mse += m->sq_error;
    }
    mean /= static_cast<double>(k);
    mse /= static_cast<double>(k);
    double variance = 0.0, mse_spread = 0.0;
    for (const auto* m : members) {
      const double d = m->estimate - mean;
      variance += d * d;
      const double e = m->sq_error - mse;
      mse_spread += e * e;
    }
    variance /= static_cast<double>(k);
    mse_spread /= static_cast<double>(k);

    SummaryRow row;
    row.estimator = std::get<0>(key);
    row.num_abstract = std::get<1>(key);
    row.clip = std::get<2>(key);
    row.n = std::get<3>(key);
    row.trials = k;
    row.mse = mse;
    row.bias = mean - truth;
    row.variance = variance;
    row.std_error = std::sqrt(mse_spread / static_cast<double>(k));
    const double recomposed = row.bias * row.bias + row.variance;
    if (std::abs(row.mse - recomposed) > 1e-12 * std::max(1.0, std::abs(row.mse))) {
      throw std::logic_error("summarize: mse != bias^2 + variance beyond tolerance");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string summary_row_csv(const SummaryRow& row) {
  const bool has_abstract = row.estimator == "star" || row.num_abstract > 0;
  const bool has_clip = row.estimator == "star";
  std::ostringstream out;
  out << row.estimator << ',';
  if (has_abstract) out << row.num_abstract;
  out << ',';
  if (has_clip) out << row.clip;
  out << ',' << row.n << ',' << row.trials << ',' << format_double(row.mse) << ','
      << format_double(row.bias) << ',' << format_double(row.variance) << ','
      << format_double(row.std_error);
  return out.str();
}

void write_heatmaps_and_selection(const std::vector<SummaryRow>& summary, const fs::path& out_dir) {
  std::vector<const SummaryRow*> star_rows;
  for (const auto& row : summary) {
    if (row.estimator == "star") star_rows.push_back(&row);
  }
  std::set<long> sizes;
  std::set<int> zs, cs;
  for (const auto* row : star_rows) {
    sizes.insert(row->n);
    zs.insert(row->num_abstract);
    cs.insert(row->clip);
  }

  for (long n : sizes) {
    std::map<std::pair<int, int>, double> cells;
    for (const auto* row : star_rows) {
      if (row->n == n) cells[{row->num_abstract, row->clip}] = row->mse;
    }
    std::ostringstream out;
    out << "num_abstract";
    for (int c : cs) out << ',' << c;
    out << '\n';
    for (int z : zs) {
      out << z;
      for (int c : cs) {
        const auto it = cells.find({z, c});
        out << ',' << (it == cells.end() ? "nan" : format_double(std::log10(it->second)));
      }
      out << '\n';
    }
    atomic_write(out_dir / ("heatmap_star_n" + std::to_string(n) + ".csv"), out.str());
  }

  // Best and median STAR cells per dataset size. Best is the minimum-MSE cell
  // (ties to the smaller |Z|, then smaller c); the median of an even count is
  // the lower of the two middle cells.
  std::ostringstream sel;
  sel << "n,role,num_abstract,clip_c,mse\n";
  for (long n : sizes) {
    std::vector<const SummaryRow*> cells;
    for (const auto* row : star_rows) {
      if (row->n == n) cells.push_back(row);
    }
    std::sort(cells.begin(), cells.end(), [](const SummaryRow* a, const SummaryRow* b) {
      return std::tie(a->mse, a->num_abstract, a->clip) <
             std::tie(b->mse, b->num_abstract, b->clip);
    });
    const SummaryRow* best = cells.front();
    const SummaryRow* median = cells[(cells.size() - 1) / 2];
    sel << n << ",best," << best->num_abstract << ',' << best->clip << ','
        << format_double(best->mse) << '\n';
    sel << n << ",median," << median->num_abstract << ',' << median->clip << ','
        << format_double(median->mse) << '\n';
  }
  atomic_write(out_dir / "selection.csv", sel.str());
}

}  // namespace

void summarize_dir(const std::string& trials_dir, const std::string& out_dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(trials_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<TrialResult> rows;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open '" + file.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + file.string() + "': empty trial file");
    if (trim(line) != kTrialHeader) {
      throw IoError("'" + file.string() + "': unexpected trial header");
    }
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      rows.push_back(
          parse_trial_row(line, file.string() + " line " + std::to_string(line_no)));
    }
  }
  if (rows.empty()) throw IoError("summarize_dir: no trial rows under '" + trials_dir + "'");

  std::sort(rows.begin(), rows.end(), [](const TrialResult& a, const TrialResult& b) {
    return std::tie(a.estimator, a.num_abstract, a.clip, a.n, a.trial) <
           std::tie(b.estimator, b.num_abstract, b.clip, b.n, b.trial);
  });

  const fs::path out_path(out_dir);
  fs::create_directories(out_path);
  {
    std::ostringstream out;
    out << kTrialHeader << '\n';
    for (const auto& r : rows) out << trial_row(r) << '\n';
    atomic_write(out_path / "trials.csv", out.str());
  }

  // Groups that lost trials to recorded failures can fall below the two-trial
  // minimum; they are dropped here rather than failing the whole summary.
  {
    using Key = std::tuple<std::string, int, int, long>;
    std::map<Key, long> counts;
    for (const auto& r : rows) ++counts[Key(r.estimator, r.num_abstract, r.clip, r.n)];
    std::vector<TrialResult> kept;
    kept.reserve(rows.size());
    for (auto& r : rows) {
      if (counts[Key(r.estimator, r.num_abstract, r.clip, r.n)] >= 2) kept.push_back(std::move(r));
    }
    rows = std::move(kept);
  }
  if (rows.empty()) throw IoError("summarize_dir: no group has >= 2 trials");

  const std::vector<SummaryRow> summary = summarize(rows);
  {
    std::ostringstream out;
    out << kSummaryHeader << '\n';
    for (const auto& row : summary) out << summary_row_csv(row) << '\n';
    atomic_write(out_path / "summary.csv", out.str());
  }
  write_heatmaps_and_selection(summary, out_path);
}

namespace {

struct Job {
  std::string estimator;
  int num_abstract = 0;
  int clip = 0;
  long n = 0;
  int trial = 0;
  fs::path out;
};

std::string job_stem(const Job& job) {
  std::ostringstream name;
  name << job.estimator << "_z" << job.num_abstract << "_c" << job.clip << "_n" << job.n << "_t"
       << job.trial;
  return name.str();
}

TruthInfo load_or_compute_truth(const SweepConfig& config, const Env& env,
                                const Policy& evaluation, const fs::path& out_dir) {
  const fs::path truth_path = out_dir / "truth.csv";
  const std::string method = env.num_states() > 0 ? "dp" : "mc";
  const long episodes = method == "mc" ? config.truth_episodes : 0;
  const uint64_t seed = hash_combine(config.seed, "truth");
  const std::string prefix = env.id() + "," + evaluation.id() + "," + method + "," +
                             std::to_string(episodes) + "," + std::to_string(seed) + ",";
  if (fs::exists(truth_path)) {
    std::ifstream in(truth_path);
    std::string header, line;
    if (in && std::getline(in, header) && std::getline(in, line) &&
        line.compare(0, prefix.size(), prefix) == 0) {
      // Policy ids may themselves contain commas, so only the part after the
      // matched prefix is split into value,std_error.
      const auto fields = split(line.substr(prefix.size()), ',');
      if (fields.size() == 2) {
        TruthInfo cached;
        cached.value = parse_double_field(fields[0], "truth value");
        cached.std_error = parse_double_field(fields[1], "truth stderr");
        cached.method = method;
        return cached;
      }
    }
  }
  const TruthInfo info = compute_truth(config, env, evaluation);
  atomic_write(truth_path, "env,policy,method,episodes,seed,value,std_error\n" + prefix +
                               format_double(info.value) + "," + format_double(info.std_error) +
                               "\n");
  return info;
}

}  // namespace

void run_sweep(const SweepConfig& config, std::ostream* log) {
  config.validate();
  const auto env = make_env(config.env_spec);
  const auto behavior = make_policy(config.behavior_spec, *env);
  const auto evaluation = make_policy(config.evaluation_spec, *env);
  if (behavior->num_actions() != env->num_actions() ||
      evaluation->num_actions() != env->num_actions()) {
    throw std::invalid_argument("run_sweep: policy/environment action count mismatch");
  }

  const fs::path out_dir(config.out_dir);
  const fs::path trials_dir = out_dir / "trials";
  fs::create_directories(trials_dir);

  const TruthInfo truth = load_or_compute_truth(config, *env, *evaluation, out_dir);
  if (log) {
    *log << "truth (" << truth.method << "): " << format_double(truth.value) << "\n";
  }

  // Enumerate the full job grid. The |Z| and clip grids apply to star; mbased
  // inherits the |Z| grid only when it needs a discretization (continuous
  // states); the IS family has no grid.
  std::vector<Job> jobs;
  const bool continuous = env->num_states() == 0;
  for (const auto& estimator : config.estimators) {
    std::vector<std::pair<int, int>> cells;
    if (estimator == "star") {
      for (int z : config.num_abstract) {
        for (int c : config.clips) cells.emplace_back(z, c);
      }
    } else if (estimator == "mbased" && continuous) {
      for (int z : config.num_abstract) cells.emplace_back(z, 0);
    } else {
      cells.emplace_back(0, 0);
    }
    for (long n : config.sizes) {
      for (const auto& [z, c] : cells) {
        for (int trial = 0; trial < config.trials; ++trial) {
          Job job{estimator, z, c, n, trial, {}};
          job.out = trials_dir / (job_stem(job) + ".csv");
          jobs.push_back(std::move(job));
        }
      }
    }
  }

  std::vector<const Job*> pending;
  for (const auto& job : jobs) {
    if (!fs::exists(job.out)) pending.push_back(&job);
  }
  if (log) {
    *log << jobs.size() << " trials total, " << jobs.size() - pending.size()
         << " already complete, " << pending.size() << " to run\n";
  }

  std::atomic<size_t> next{0};
  std::atomic<long> failures{0};
  const int worker_count = static_cast<int>(
      std::min<size_t>(static_cast<size_t>(config.workers), std::max<size_t>(pending.size(), 1)));
  const auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const Job& job = *pending[i];
      const fs::path err_path = job.out.string() + ".err";
      try {
        const TrialResult result =
            run_trial(config, *env, *behavior, *evaluation, job.estimator, job.num_abstract,
                      job.clip, job.n, job.trial, truth.value);
        atomic_write(job.out, std::string(kTrialHeader) + "\n" + trial_row(result) + "\n");
        if (fs::exists(err_path)) fs::remove(err_path);
      } catch (const std::exception& e) {
        atomic_write(err_path, std::string(e.what()) + "\n");
        failures.fetch_add(1);
      }
    }
  };
  if (worker_count <= 1 || pending.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (log && failures.load() > 0) {
    *log << failures.load() << " trials failed; see .err files under " << trials_dir << "\n";
  }

  summarize_dir(trials_dir.string(), out_dir.string());
  if (log) *log << "outputs written to " << out_dir.string() << "\n";
}

}  // namespace star::harness
