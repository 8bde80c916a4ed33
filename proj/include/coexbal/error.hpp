#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coexbal {

// Precondition violations of library operations (bad sizes, non-positive
// coefficients, insufficient granularity, ...).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input files. `record()` is the 1-based line (text formats) or
// element index (JSON formats) that triggered the failure, 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t record = 0)
      : std::runtime_error(record ? what + " (record " + std::to_string(record) + ")" : what),
        record_(record) {}

  std::size_t record() const noexcept { return record_; }

private:
  std::size_t record_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail
}  // namespace coexbal
