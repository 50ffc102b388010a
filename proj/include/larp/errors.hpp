#pragma once

#include <stdexcept>
#include <string>

namespace larp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (bad JSON, unknown names, wrong table shapes).
struct ParseError : Error {
  using Error::Error;
};

// Structurally well-formed input that violates a model constraint
// (cyclic graph, row sums, duplicate findings, ...).
struct ValidationError : Error {
  using Error::Error;
};

// A query that cannot be answered on the given tree state.
struct QueryError : Error {
  using Error::Error;
};

// Arithmetic that has no defined result (x/0 with x > 0, P(e) = 0 posteriors).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace larp
