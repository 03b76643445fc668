#include "beaconnav/error.hpp"

namespace beaconnav {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::FrameMismatch: return "frame-error";
    case ErrorCode::ConstraintViolation: return "constraint-violation";
    case ErrorCode::UnknownBeacon: return "unknown-beacon";
    case ErrorCode::LoadError: return "load-error";
    case ErrorCode::SaveError: return "save-error";
    case ErrorCode::Duplicate: return "duplicate-error";
    case ErrorCode::NotFound: return "not-found-error";
    case ErrorCode::FrameTooLarge: return "frame-error";
    case ErrorCode::Protocol: return "protocol-error";
    case ErrorCode::IncompleteStage: return "incomplete-stage";
    case ErrorCode::IllegalSequence: return "illegal-sequence";
    case ErrorCode::InvalidResponse: return "invalid-response";
    case ErrorCode::SampleTooSmall: return "sample-too-small";
    case ErrorCode::DegenerateSample: return "degenerate-sample";
    case ErrorCode::PairingError: return "pairing-error";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

}  // namespace beaconnav
