#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "star/errors.hpp"
#include "star/harness.hpp"
#include "star/rng.hpp"
#include "star/specs.hpp"
#include "support/oracles.hpp"

using namespace star;
using namespace star::harness;
using star::testing::TempDir;
using star::testing::read_file;

namespace fs = std::filesystem;

namespace {

std::string write_config(const TempDir& tmp, const std::string& name, const std::string& body) {
  const std::string path = tmp.file(name);
  std::ofstream out(path);
  out << body;
  return path;
}

SweepConfig small_tabular_config(const std::string& out_dir) {
  SweepConfig c;
  c.env_spec = "twostate";
  c.behavior_spec = "uniform";
  c.evaluation_spec = "skewed:w=0.9,seed=1";
  c.sizes = {20, 40};
  c.num_abstract = {1, 2};
  c.clips = {0, 1};
  c.estimators = {"star", "is", "pdis", "wis", "wpdis", "mbased"};
  c.trials = 3;
  c.seed = 7;
  c.out_dir = out_dir;
  c.workers = 1;
  return c;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("sweep configs load from INI text with comments and defaults") {
  TempDir tmp("config_load");
  const std::string path = write_config(tmp, "sweep.ini",
                                        "# benchmark configuration\n"
                                        "[env]\n"
                                        "spec = twostate\n"
                                        "[policies]\n"
                                        "behavior = uniform\n"
                                        "evaluation = always:1  # deterministic target\n"
                                        "[sweep]\n"
                                        "sizes = 10, 20, 40\n"
                                        "num_abstract = 1,2\n"
                                        "clip = 0,1,2\n"
                                        "estimators = star, wpdis\n"
                                        "trials = 5\n"
                                        "seed = 99\n"
                                        "standardize = true\n"
                                        "truth_episodes = 0\n"
                                        "[output]\n"
                                        "dir = " + tmp.file("out") + "\n"
                                        "workers = 2\n");
  const SweepConfig c = load_sweep_config(path);
  CHECK(c.env_spec == "twostate");
  CHECK(c.behavior_spec == "uniform");
  CHECK(c.evaluation_spec == "always:1");
  CHECK(c.sizes == std::vector<long>{10, 20, 40});
  CHECK(c.num_abstract == std::vector<int>{1, 2});
  CHECK(c.clips == std::vector<int>{0, 1, 2});
  CHECK(c.estimators == std::vector<std::string>{"star", "wpdis"});
  CHECK(c.trials == 5);
  CHECK(c.seed == 99);
  CHECK(c.standardize);
  CHECK(c.workers == 2);
}

TEST_CASE("config errors carry the file and line") {
  TempDir tmp("config_bad");
  auto expect_io = [&](const std::string& name, const std::string& body,
                       const std::string& needle) {
    const std::string path = write_config(tmp, name, body);
    try {
      load_sweep_config(path);
      FAIL("expected IoError for " << name);
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_io("s.ini", "[bogus]\n", "unknown section");
  expect_io("k.ini", "[sweep]\nmystery = 1\n", "unknown key");
  expect_io("v.ini", "[sweep]\ntrials = soon\n", "line 2");
  expect_io("h.ini", "[env\nspec = twostate\n", "malformed section");
  expect_io("e.ini", "[sweep]\ntrials\n", "expected key = value");
  CHECK_THROWS_AS(load_sweep_config(tmp.file("missing.ini")), IoError);
}

TEST_CASE("config validation rejects inconsistent grids") {
  TempDir tmp("config_validate");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  CHECK_NOTHROW(c.validate());

  SweepConfig bad = c;
  bad.sizes = {20, 20};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.sizes.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.estimators = {"star", "star"};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.estimators = {"magic"};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.trials = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.workers = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.clips = {-1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.num_abstract = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.env_spec.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("flag-style overrides update the config") {
  TempDir tmp("config_override");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  apply_override(c, "seed", "123");
  apply_override(c, "trials", "9");
  apply_override(c, "workers", "3");
  apply_override(c, "out_dir", tmp.file("elsewhere"));
  CHECK(c.seed == 123);
  CHECK(c.trials == 9);
  CHECK(c.workers == 3);
  CHECK(c.out_dir == tmp.file("elsewhere"));
  CHECK_THROWS_AS(apply_override(c, "sizes", "1,2"), std::invalid_argument);
  CHECK_THROWS_AS(apply_override(c, "trials", "many"), std::invalid_argument);
}

TEST_CASE("trial seeds differ across every grid coordinate") {
  std::set<uint64_t> seen;
  const uint64_t base = trial_seed(1, "twostate", "star", 2, 1, 100, 0);
  seen.insert(base);
  seen.insert(trial_seed(2, "twostate", "star", 2, 1, 100, 0));
  seen.insert(trial_seed(1, "cartpole", "star", 2, 1, 100, 0));
  seen.insert(trial_seed(1, "twostate", "wis", 2, 1, 100, 0));
  seen.insert(trial_seed(1, "twostate", "star", 3, 1, 100, 0));
  seen.insert(trial_seed(1, "twostate", "star", 2, 2, 100, 0));
  seen.insert(trial_seed(1, "twostate", "star", 2, 1, 200, 0));
  seen.insert(trial_seed(1, "twostate", "star", 2, 1, 100, 1));
  CHECK(seen.size() == 8);
  CHECK(base == trial_seed(1, "twostate", "star", 2, 1, 100, 0));
}

TEST_CASE("truth is exact DP on tabular environments and Monte Carlo otherwise") {
  TempDir tmp("truth");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  c.evaluation_spec = "uniform";
  const auto env = make_env(c.env_spec);
  const auto eval = make_policy(c.evaluation_spec, *env);
  const TruthInfo t = compute_truth(c, *env, *eval);
  CHECK(t.method == "dp");
  CHECK(t.value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.std_error == 0.0);

  SweepConfig cc = c;
  cc.env_spec = "cartpole:horizon=10";
  cc.evaluation_spec = "lean:0.9";
  const auto cp = make_env(cc.env_spec);
  const auto lean = make_policy(cc.evaluation_spec, *cp);
  CHECK_THROWS_AS(compute_truth(cc, *cp, *lean), std::invalid_argument);
  cc.truth_episodes = 2000;
  const TruthInfo mc = compute_truth(cc, *cp, *lean);
  CHECK(mc.method == "mc");
  CHECK(mc.std_error > 0.0);
  CHECK(mc.value > 1.0);
  CHECK(mc.value <= 10.0);
}

TEST_CASE("run_trial is deterministic and honest about its inputs") {
  TempDir tmp("run_trial");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  const auto env = make_env(c.env_spec);
  const auto behavior = make_policy(c.behavior_spec, *env);
  const auto eval = make_policy(c.evaluation_spec, *env);
  const TruthInfo t = compute_truth(c, *env, *eval);

  const TrialResult a = run_trial(c, *env, *behavior, *eval, "star", 2, 1, 50, 3, t.value);
  const TrialResult b = run_trial(c, *env, *behavior, *eval, "star", 2, 1, 50, 3, t.value);
  CHECK(a.estimate == b.estimate);
  CHECK(a.seed == b.seed);
  CHECK(a.sq_error == (a.estimate - a.truth) * (a.estimate - a.truth));
  CHECK(a.estimator == "star");
  CHECK(a.n == 50);
  CHECK(a.trial == 3);

  const TrialResult other = run_trial(c, *env, *behavior, *eval, "star", 2, 1, 50, 4, t.value);
  CHECK(other.seed != a.seed);

  const TrialResult wis = run_trial(c, *env, *behavior, *eval, "wis", 0, 0, 50, 0, t.value);
  CHECK(wis.num_abstract == 0);
  CHECK(wis.clip == 0);
  CHECK(std::isfinite(wis.estimate));
}

TEST_CASE("summarize reproduces the documented bias/variance arithmetic") {
  auto trial = [](double estimate, double truth, int index) {
    TrialResult r;
    r.estimator = "star";
    r.num_abstract = 2;
    r.clip = 0;
    r.n = 100;
    r.trial = index;
    r.estimate = estimate;
    r.truth = truth;
    r.sq_error = (estimate - truth) * (estimate - truth);
    return r;
  };

  // estimates {1,1}: zero error. {0,2}: pure variance. {2,2}: pure bias.
  auto rows = summarize({trial(1.0, 1.0, 0), trial(1.0, 1.0, 1)});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mse == 0.0);
  CHECK(rows[0].bias == 0.0);
  CHECK(rows[0].variance == 0.0);
  CHECK(rows[0].trials == 2);

  rows = summarize({trial(0.0, 1.0, 0), trial(2.0, 1.0, 1)});
  CHECK(rows[0].mse == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rows[0].bias == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rows[0].variance == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rows[0].std_error == 0.0);  // both squared errors equal 1

  rows = summarize({trial(2.0, 1.0, 0), trial(2.0, 1.0, 1)});
  CHECK(rows[0].mse == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rows[0].bias == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rows[0].variance == doctest::Approx(0.0).epsilon(1e-15));

  // Spread of squared errors {0,4}: stderr = sqrt(popvar/2) = sqrt(4/2).
  rows = summarize({trial(1.0, 1.0, 0), trial(3.0, 1.0, 1)});
  CHECK(rows[0].std_error == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(summarize({trial(1.0, 1.0, 0)}), std::invalid_argument);
  auto bad = trial(1.0, 2.0, 1);  // same key, different truth
  CHECK_THROWS_AS(summarize({trial(1.0, 1.0, 0), bad}), std::invalid_argument);
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("a small sweep produces the full documented output tree") {
  TempDir tmp("sweep_small");
  const SweepConfig c = small_tabular_config(tmp.file("out"));
  std::ostringstream log;
  run_sweep(c, &log);

  const fs::path out(c.out_dir);
  CHECK(fs::exists(out / "truth.csv"));
  CHECK(fs::exists(out / "trials.csv"));
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(fs::exists(out / "selection.csv"));
  CHECK(fs::exists(out / "heatmap_star_n20.csv"));
  CHECK(fs::exists(out / "heatmap_star_n40.csv"));

  // Cells per n: star 2x2, plus mbased/is/pdis/wis/wpdis with one cell each.
  size_t trial_files = 0;
  for (const auto& e : fs::directory_iterator(out / "trials")) {
    if (e.path().extension() == ".csv") ++trial_files;
  }
  CHECK(trial_files == 54);  // 9 cells x 2 sizes x 3 trials

  const auto trials = read_csv((out / "trials.csv").string());
  REQUIRE(trials.size() == 55);  // header + 54 rows
  CHECK(trials[0] == std::vector<std::string>{"estimator", "num_abstract", "clip_c", "n", "trial",
                                              "seed", "estimate", "truth", "sq_error"});
  // IS-family rows leave |Z| and clip blank; star rows carry both.
  bool blanks_ok = true;
  for (size_t i = 1; i < trials.size(); ++i) {
    const auto& r = trials[i];
    REQUIRE(r.size() == 9);
    if (r[0] == "star") {
      blanks_ok = blanks_ok && !r[1].empty() && !r[2].empty();
    } else {
      blanks_ok = blanks_ok && r[2].empty();
    }
  }
  CHECK(blanks_ok);

  const auto summary = read_csv((out / "summary.csv").string());
  REQUIRE(summary.size() == 19);  // header + 18 groups
  CHECK(summary[0] == std::vector<std::string>{"estimator", "num_abstract", "clip_c", "n",
                                               "trials", "mse", "bias", "variance", "stderr"});
  // Each summary row satisfies mse = bias^2 + variance at printed precision.
  for (size_t i = 1; i < summary.size(); ++i) {
    const double mse = std::stod(summary[i][5]);
    const double bias = std::stod(summary[i][6]);
    const double variance = std::stod(summary[i][7]);
    CHECK(std::abs(mse - (bias * bias + variance)) <= 1e-12 * std::max(1.0, std::abs(mse)));
    CHECK(summary[i][4] == "3");
  }

  // Heatmaps: one row per |Z|, one column per clip value.
  const auto heat = read_csv((out / "heatmap_star_n20.csv").string());
  REQUIRE(heat.size() == 3);
  CHECK(heat[0] == std::vector<std::string>{"num_abstract", "0", "1"});
  CHECK(heat[1][0] == "1");
  CHECK(heat[2][0] == "2");
  REQUIRE(heat[1].size() == 3);

  // Selection: best and median rows for each n.
  const auto sel = read_csv((out / "selection.csv").string());
  REQUIRE(sel.size() == 5);
  CHECK(sel[0] == std::vector<std::string>{"n", "role", "num_abstract", "clip_c", "mse"});
  std::set<std::string> roles;
  for (size_t i = 1; i < sel.size(); ++i) roles.insert(sel[i][1]);
  CHECK(roles == std::set<std::string>{"best", "median"});

  CHECK(log.str().find("failed") == std::string::npos);
}

TEST_CASE("sweeps resume from partial results and rebuild identical outputs") {
  TempDir tmp("sweep_resume");
  const SweepConfig c = small_tabular_config(tmp.file("out"));
  run_sweep(c, nullptr);
  const fs::path out(c.out_dir);
  const std::string trials_before = read_file((out / "trials.csv").string());
  const std::string summary_before = read_file((out / "summary.csv").string());

  // Delete a few trial files and the aggregate outputs, then rerun.
  int removed = 0;
  for (const auto& e : fs::directory_iterator(out / "trials")) {
    if (e.path().extension() == ".csv" && ++removed <= 7) fs::remove(e.path());
  }
  REQUIRE(removed >= 7);
  fs::remove(out / "trials.csv");
  fs::remove(out / "summary.csv");
  run_sweep(c, nullptr);
  CHECK(read_file((out / "trials.csv").string()) == trials_before);
  CHECK(read_file((out / "summary.csv").string()) == summary_before);
}

TEST_CASE("the same config writes byte-identical outputs anywhere") {
  TempDir tmp("sweep_repro");
  SweepConfig a = small_tabular_config(tmp.file("out_a"));
  SweepConfig b = small_tabular_config(tmp.file("out_b"));
  a.workers = 1;
  b.workers = 2;  // concurrency must not leak into the results
  run_sweep(a, nullptr);
  run_sweep(b, nullptr);
  for (const std::string name :
       {"trials.csv", "summary.csv", "selection.csv", "heatmap_star_n20.csv",
        "heatmap_star_n40.csv", "truth.csv"}) {
    CHECK(read_file(tmp.file("out_a/" + name)) == read_file(tmp.file("out_b/" + name)));
  }
}

TEST_CASE("failing cells are recorded as .err files while the sweep continues") {
  TempDir tmp("sweep_err");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  // k-means cannot find 50 distinct states on the two-state problem, so every
  // star trial fails; wis is untouched.
  c.estimators = {"star", "wis"};
  c.num_abstract = {50};
  c.clips = {0};
  c.sizes = {20};
  c.trials = 2;
  std::ostringstream log;
  run_sweep(c, &log);

  const fs::path out(c.out_dir);
  int err_files = 0;
  for (const auto& e : fs::directory_iterator(out / "trials")) {
    if (e.path().extension() == ".err") ++err_files;
  }
  CHECK(err_files == 2);
  CHECK(log.str().find("failed") != std::string::npos);

  const auto summary = read_csv((out / "summary.csv").string());
  REQUIRE(summary.size() == 2);  // header + the wis group
  CHECK(summary[1][0] == "wis");

  // The error text names the cause.
  for (const auto& e : fs::directory_iterator(out / "trials")) {
    if (e.path().extension() == ".err") {
      CHECK(read_file(e.path().string()).find("insufficient distinct states") !=
            std::string::npos);
    }
  }

  // Once the grid is fixed, the stale .err files do not block a rerun.
  SweepConfig fixed = c;
  fixed.num_abstract = {2};
  run_sweep(fixed, nullptr);
  const auto summary2 = read_csv((out / "summary.csv").string());
  CHECK(summary2.size() == 3);  // star and wis groups
}

TEST_CASE("cached truth values are reused instead of recomputed") {
  TempDir tmp("truth_cache");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  c.estimators = {"wis"};
  c.sizes = {10};
  c.trials = 2;
  // Pre-seed the cache with a sentinel truth value matching the cache key.
  fs::create_directories(c.out_dir);
  const uint64_t truth_seed = hash_combine(c.seed, "truth");
  std::ofstream cache(tmp.file("out/truth.csv"));
  cache << "env,policy,method,episodes,seed,value,std_error\n"
        << "twostate," << "skewed:w=0.9,seed=1" << ",dp,0," << truth_seed << ",123.5,0\n";
  cache.close();
  run_sweep(c, nullptr);
  const auto trials = read_csv(tmp.file("out/trials.csv"));
  REQUIRE(trials.size() == 3);
  CHECK(trials[1][7] == "123.5");  // the sentinel value was used as truth
}

TEST_CASE("run_sweep validates policy and environment compatibility") {
  TempDir tmp("sweep_bad");
  SweepConfig c = small_tabular_config(tmp.file("out"));
  c.evaluation_spec = "lean:0.9";  // cart-pole policy on a tabular env
  CHECK_THROWS(run_sweep(c, nullptr));
}
