#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ddarts {

// Error categories surfaced by the library. The CLI maps these onto
// process exit codes; tests match on the code rather than the message.
enum class Errc {
  invalid_argument,     // precondition violation on an operation
  document_malformed,   // unparseable or structurally wrong document
  unknown_op,           // operation name not part of any search space
  invariant_violation,  // well-formed document violating a genotype invariant
  shape_mismatch,       // tensor/vector/cell shape disagreement
  underivable_source,   // Algorithm-1 modulus degenerates to zero
  divergence,           // non-finite loss during training
  io,                   // file read/write failure
  config,               // bad run configuration
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string location = "")
      : std::runtime_error(location.empty() ? message : message + " [at " + location + "]"),
        code_(code),
        location_(std::move(location)) {}

  Errc code() const { return code_; }
  const std::string& location() const { return location_; }

 private:
  Errc code_;
  std::string location_;
};

}  // namespace ddarts
