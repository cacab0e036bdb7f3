#pragma once

#include <stdexcept>
#include <string>

namespace bondsim {

enum class ErrorCode {
  domain,                 // argument outside the mathematical domain
  insufficient_data,      // fewer samples than a window needs
  unsupported_hash_rate,  // commitment fraction below the supported minimum
  protocol_violation,     // illegal bond-state transition or event
  config,                 // malformed or inconsistent configuration
  data,                   // malformed input data (CSV rows etc.)
  io,
  internal,               // broken invariant
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const char* what) {
  if (!condition) fail(code, what);
}

}  // namespace bondsim
