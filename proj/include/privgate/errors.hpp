#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace privgate {

// Root of every error the gateway throws on purpose. `kind()` is the stable
// name used in machine-readable error lines and HTTP bodies.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define PRIVGATE_DECLARE_ERROR(Name, Base)                          \
  class Name : public Base {                                        \
   public:                                                          \
    using Base::Base;                                               \
    const char* kind() const noexcept override { return #Name; }    \
  }

PRIVGATE_DECLARE_ERROR(ConfigError, Error);
PRIVGATE_DECLARE_ERROR(TransportError, Error);
PRIVGATE_DECLARE_ERROR(ProtocolError, Error);
PRIVGATE_DECLARE_ERROR(ParseError, Error);
PRIVGATE_DECLARE_ERROR(ScriptExhausted, Error);
PRIVGATE_DECLARE_ERROR(StorageError, Error);
PRIVGATE_DECLARE_ERROR(EmptyInput, Error);
PRIVGATE_DECLARE_ERROR(InconsistentUniverse, Error);
PRIVGATE_DECLARE_ERROR(PreconditionError, Error);
PRIVGATE_DECLARE_ERROR(ValidationError, Error);

#undef PRIVGATE_DECLARE_ERROR

// Raised by the corpus loader; carries the 1-based line that failed.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

  const char* kind() const noexcept override { return "SchemaError"; }
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

}  // namespace privgate
