#pragma once

#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdn {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bad or inconsistent user input (files, flags, bounds). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver reported a state the caller cannot proceed from (infeasible
/// instance, singular system). CLI exit code 1.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal invariant. CLI exit code 3.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Dense row-major (rows x cols) array of doubles.
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

namespace log {

enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

/// Current verbosity, read once from WDNRTR_LOG (quiet|warn|info|debug).
Level level();
bool enabled(Level lv);
void write(Level lv, const std::string& msg);

inline void warn(const std::string& msg) { write(Level::warn, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void debug(const std::string& msg) { write(Level::debug, msg); }

}  // namespace log

}  // namespace wdn
