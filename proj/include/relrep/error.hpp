#pragma once

#include <stdexcept>
#include <string>

namespace relrep {

enum class ErrorCode {
  argument,
  domain,
  not_identifiable,
  degenerate,
  unsupported_order,
  config,
  numerical,
  singularity_guard,
  io,
};

// Every failure raised by the core carries one of the codes above so the C
// layer can map it to a status without string matching.
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

}  // namespace relrep
