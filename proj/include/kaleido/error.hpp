#pragma once

#include <stdexcept>
#include <string>

namespace kaleido {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Generation,
  MissingChambers,
  Degenerate,
  InconsistentGeometry,
  IllPosed,
  PointBehindCamera,
};

// Every failure raised by the library carries one of the codes above so that
// the C API and the CLI can map it to a stable status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for the failure classes that mean "the input geometry does not
  // determine a unique answer".
  bool is_degeneracy() const noexcept {
    return code_ == ErrorCode::Degenerate || code_ == ErrorCode::InconsistentGeometry ||
           code_ == ErrorCode::IllPosed;
  }

 private:
  ErrorCode code_;
};

}  // namespace kaleido
