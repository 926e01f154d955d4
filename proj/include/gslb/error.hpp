#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gslb {

enum class Errc {
  EmptyPool,
  UnderflowClose,
  UnknownApp,
  NodeDown,
  LastAddress,
  DuplicateAddress,
  UnknownAddress,
  AllSelectorsDown,
  NoHealthyBackend,
  Overloaded,
  UnknownAssignment,
  UnknownBackend,
  TimeReversal,
  SystemUnavailable,
  MixedSpecs,
  SchemaError,
  BindFailure,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure the library reports carries one of the codes above so
// callers (and tests) can branch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gslb
