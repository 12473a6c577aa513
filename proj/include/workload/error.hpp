#ifndef WORKLOAD_ERROR_HPP
#define WORKLOAD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace workload {

// Base for every data or invariant failure raised by the library. The CLI maps
// these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace workload

#endif  // WORKLOAD_ERROR_HPP
