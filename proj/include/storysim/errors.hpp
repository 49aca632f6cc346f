#ifndef STORYSIM_ERRORS_HPP
#define STORYSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace storysim {

// Error families map onto the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, NumericalError -> 4 (partial grid -> 5).
// Programmer-level precondition violations throw std::invalid_argument.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evidence assignment with probability zero under the network.
class ImpossibleEvidenceError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long iteration = -1)
      : std::runtime_error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")"
                                          : what),
        iteration_(iteration) {}

  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

}  // namespace storysim

#endif
