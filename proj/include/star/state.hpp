#pragma once

#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace star {

// A state is either a discrete index into a tabular model or a fixed-length
// vector of doubles (a continuous observation).
class State {
 public:
  State() : value_(0) {}

  static State discrete(int index) {
    if (index < 0) throw std::invalid_argument("State::discrete: negative index");
    return State(index);
  }

  static State continuous(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("State::continuous: empty vector");
    return State(std::move(values));
  }

  bool is_discrete() const { return std::holds_alternative<int>(value_); }

  int index() const {
    if (!is_discrete()) throw std::invalid_argument("State::index called on a continuous state");
    return std::get<int>(value_);
  }

  const std::vector<double>& values() const {
    if (is_discrete()) throw std::invalid_argument("State::values called on a discrete state");
    return std::get<std::vector<double>>(value_);
  }

  bool operator==(const State& other) const { return value_ == other.value_; }
  bool operator!=(const State& other) const { return !(*this == other); }

 private:
  explicit State(int index) : value_(index) {}
  explicit State(std::vector<double> values) : value_(std::move(values)) {}

  std::variant<int, std::vector<double>> value_;
};

}  // namespace star
