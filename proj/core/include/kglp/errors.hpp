#pragma once

#include <stdexcept>
#include <string>

namespace kglp {

// Base class for all toolkit errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Problems caused by user-supplied inputs (missing files, malformed lines,
// vocabulary mismatches).  The CLI maps these to exit code 2; everything
// else that escapes is a runtime failure (exit code 1).
class input_error : public error {
 public:
  explicit input_error(const std::string& what) : error(what) {}
};

}  // namespace kglp
