#pragma once

#include <stdexcept>
#include <string>

namespace stgraph {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {      // operand dimensions disagree
  using Error::Error;
};
struct ParameterError : Error {  // argument value outside its legal range
  using Error::Error;
};
struct ContractError : Error {   // caller violated an API precondition
  using Error::Error;
};
struct DataError : Error {       // malformed or degenerate input data
  using Error::Error;
};
struct NumericError : Error {    // NaN / divergence detected at runtime
  using Error::Error;
};
struct StateError : Error {      // operation invoked out of order
  using Error::Error;
};
struct ParseError : Error {      // file format problems
  using Error::Error;
};

}  // namespace stgraph
