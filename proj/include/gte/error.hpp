#pragma once

#include <stdexcept>
#include <string>

namespace gte {

// Every contract violation in the library surfaces as this type; the CLI maps
// it to exit code 2 when it originates from input validation.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace gte
