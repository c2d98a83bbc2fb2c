#ifndef QAC_ERRORS_HPP_
#define QAC_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qac {

// Invalid or unsatisfiable configuration (arena too small, reservoir too
// small, out-of-range hyperparameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidActionError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Non-finite loss or gradient during optimization.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text did not match any question template. `position` is the character
// offset into the whitespace-normalized input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Unknown color, material or relation word.
class LexicalError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace qac

#endif  // QAC_ERRORS_HPP_
