#include "fatswarm/error.hpp"

namespace fatswarm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ViewerInsideOccluder: return "ViewerInsideOccluder";
    case ErrorCode::ViewerInsideDisk: return "ViewerInsideDisk";
    case ErrorCode::OverlappingDisks: return "OverlappingDisks";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::NoForwardRecorded: return "NoForwardRecorded";
    case ErrorCode::EmptyInitialSet: return "EmptyInitialSet";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DiscoveryFailure: return "DiscoveryFailure";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnknownExperiment: return "UnknownExperiment";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::ParseFailure: return "ParseFailure";
  }
  return "Unknown";
}

}  // namespace fatswarm
