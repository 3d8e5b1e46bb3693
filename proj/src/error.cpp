#include "cqreduce/error.hpp"

namespace cqreduce {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidTruncation: return "invalid-truncation";
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kTruncationInsufficient: return "truncation-insufficient";
    case ErrorKind::kExcludedOrigin: return "excluded-origin";
    case ErrorKind::kAccuracy: return "accuracy";
    case ErrorKind::kDegenerateBasis: return "degenerate-basis";
    case ErrorKind::kEnvelope: return "envelope";
    case ErrorKind::kDegenerateStructure: return "degenerate-structure";
    case ErrorKind::kDomainEscape: return "domain-escape";
    case ErrorKind::kIllConditionedDecomposition: return "ill-conditioned-decomposition";
    case ErrorKind::kMaskedRegion: return "masked-region";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace cqreduce
