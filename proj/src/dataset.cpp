#include "star/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "star/errors.hpp"

namespace star {

namespace {

constexpr const char* kMagic = "star-dataset";
constexpr const char* kVersion = "v1";

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Continuous coordinates always carry a decimal marker so a one-dimensional
// vector like "3.0" cannot be read back as the discrete state 3.
std::string format_coordinate(double x) {
  std::string s = format_double(x);
  if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string format_state(const State& s) {
  if (s.is_discrete()) return std::to_string(s.index());
  std::string out;
  const auto& v = s.values();
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_coordinate(v[i]);
  }
  return out;
}

State parse_state(const std::string& token, const std::string& where) {
  if (token.empty()) throw IoError("dataset parse error (" + where + "): empty state");
  if (token.find_first_of(".,eE") == std::string::npos) {
    try {
      return State::discrete(std::stoi(token));
    } catch (const std::exception&) {
      throw IoError("dataset parse error (" + where + "): bad state '" + token + "'");
    }
  }
  std::vector<double> values;
  std::stringstream ss(token);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      size_t pos = 0;
      values.push_back(std::stod(part, &pos));
      if (pos != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw IoError("dataset parse error (" + where + "): bad coordinate '" + part + "'");
    }
  }
  if (values.empty()) throw IoError("dataset parse error (" + where + "): empty state vector");
  return State::continuous(std::move(values));
}

double parse_double(const std::string& token, const std::string& where) {
  try {
    size_t pos = 0;
    const double x = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument(token);
    return x;
  } catch (const std::exception&) {
    throw IoError("dataset parse error (" + where + "): bad number '" + token + "'");
  }
}

}  // namespace

double Episode::total_return() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.reward;
  return sum;
}

double Dataset::mean_return() const {
  if (episodes.empty()) throw std::invalid_argument("Dataset::mean_return: empty dataset");
  double sum = 0.0;
  for (const auto& e : episodes) sum += e.total_return();
  return sum / static_cast<double>(episodes.size());
}

void Dataset::validate() const {
  if (episodes.empty()) throw std::invalid_argument("Dataset: no episodes");
  const bool discrete = episodes.front().steps.empty()
                            ? true
                            : episodes.front().steps.front().state.is_discrete();
  size_t dim = 0;
  for (size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    if (e.steps.empty()) {
      throw std::invalid_argument("Dataset: episode " + std::to_string(i) + " is empty");
    }
    for (const auto& step : e.steps) {
      if (step.state.is_discrete() != discrete) {
        throw std::invalid_argument("Dataset: mixed discrete and continuous states");
      }
      if (!discrete) {
        if (dim == 0) dim = step.state.values().size();
        if (step.state.values().size() != dim) {
          throw std::invalid_argument("Dataset: inconsistent state dimension");
        }
      }
      if (step.action < 0) throw std::invalid_argument("Dataset: negative action");
      if (!std::isfinite(step.reward)) throw std::invalid_argument("Dataset: non-finite reward");
      if (!(step.behavior_prob > 0.0 && step.behavior_prob <= 1.0)) {
        throw std::invalid_argument("Dataset: behavior probability outside (0,1]");
      }
    }
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kMagic << ' ' << kVersion << " env=" << dataset.env_id
      << " policy=" << dataset.policy_id << " seed=" << dataset.seed << '\n';
  for (const auto& episode : dataset.episodes) {
    for (size_t t = 0; t < episode.steps.size(); ++t) {
      const auto& s = episode.steps[t];
      if (t) out << ';';
      out << format_state(s.state) << '|' << s.action << '|' << format_double(s.reward) << '|'
          << format_double(s.behavior_prob);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(in, header)) throw IoError("'" + path + "': missing header");

  Dataset dataset;
  {
    std::istringstream hs(header);
    std::string magic, version, field;
    hs >> magic >> version;
    if (magic != kMagic) throw IoError("'" + path + "': not a dataset file");
    if (version != kVersion) throw IoError("'" + path + "': unsupported version " + version);
    bool have_env = false, have_policy = false, have_seed = false;
    while (hs >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw IoError("'" + path + "': malformed header field");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "env") {
        dataset.env_id = value;
        have_env = true;
      } else if (key == "policy") {
        dataset.policy_id = value;
        have_policy = true;
      } else if (key == "seed") {
        try {
          dataset.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw IoError("'" + path + "': bad seed '" + value + "'");
        }
        have_seed = true;
      } else {
        throw IoError("'" + path + "': unknown header field '" + key + "'");
      }
    }
    if (!have_env || !have_policy || !have_seed) {
      throw IoError("'" + path + "': header must carry env, policy, and seed");
    }
  }

  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Episode episode;
    std::stringstream ls(line);
    std::string record;
    while (std::getline(ls, record, ';')) {
      const std::string where = "line " + std::to_string(line_no);
      std::string fields[4];
      {
        std::stringstream rs(record);
        int k = 0;
        std::string f;
        while (std::getline(rs, f, '|')) {
          if (k >= 4) throw IoError("dataset parse error (" + where + "): too many fields");
          fields[k++] = f;
        }
        if (k != 4) throw IoError("dataset parse error (" + where + "): expected 4 fields");
      }
      StepRecord step;
      step.state = parse_state(fields[0], where);
      step.action = static_cast<int>(parse_double(fields[1], where));
      step.reward = parse_double(fields[2], where);
      step.behavior_prob = parse_double(fields[3], where);
      episode.steps.push_back(std::move(step));
    }
    dataset.episodes.push_back(std::move(episode));
  }
  try {
    dataset.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return dataset;
}

}  // namespace star
