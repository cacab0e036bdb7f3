#include "bondsim/error.hpp"

namespace bondsim {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "domain error";
    case ErrorCode::insufficient_data: return "insufficient data";
    case ErrorCode::unsupported_hash_rate: return "unsupported hash rate";
    case ErrorCode::protocol_violation: return "protocol violation";
    case ErrorCode::config: return "config error";
    case ErrorCode::data: return "data error";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown error";
}

}  // namespace bondsim
