#pragma once

#include <stdexcept>
#include <string>

namespace beaconnav {

enum class ErrorCode {
  InvalidArgument,
  FrameMismatch,
  ConstraintViolation,
  UnknownBeacon,
  LoadError,
  SaveError,
  Duplicate,
  NotFound,
  FrameTooLarge,
  Protocol,
  IncompleteStage,
  IllegalSequence,
  InvalidResponse,
  SampleTooSmall,
  DegenerateSample,
  PairingError,
  Config,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the whole library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace beaconnav
