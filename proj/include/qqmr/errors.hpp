#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qqmr
{

/// Caller violated a size or shape precondition.
class usage_error : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class parse_error : public std::runtime_error
{
public:
  parse_error(const std::string &what, std::size_t line)
    : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
      line_(line)
  {
  }

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class io_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A recurrence hit a division by a vanishing quantity.
class breakdown_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// An integration produced a non-finite state.
class divergence_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace qqmr
