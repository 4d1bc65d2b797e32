#pragma once

#include <stdexcept>
#include <string>

namespace fatswarm {

enum class ErrorCode {
  InvalidArgument,
  ViewerInsideOccluder,
  ViewerInsideDisk,
  OverlappingDisks,
  IndexOutOfRange,
  DimensionMismatch,
  ShapeMismatch,
  PlacementFailure,
  NoForwardRecorded,
  EmptyInitialSet,
  NonFiniteLoss,
  DiscoveryFailure,
  ConfigParse,
  IoFailure,
  UnknownExperiment,
  MissingCheckpoint,
  ParseFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fatswarm
