#ifndef VMA_ERROR_HPP_
#define VMA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace vma {

enum class ErrorCode {
  InvalidGeometry,
  FrameMismatch,
  EmptyTrajectory,
  EmptyGroundTruth,
  InternalGeometryError,
  InvalidArgument,
  Parse,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::InternalGeometryError: return "InternalGeometryError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vma

#endif  // VMA_ERROR_HPP_
