#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cqreduce {

enum class ErrorKind {
  kInvalidTruncation,
  kInvalidParameter,
  kIndex,
  kShape,
  kTruncationInsufficient,
  kExcludedOrigin,
  kAccuracy,
  kDegenerateBasis,
  kEnvelope,
  kDegenerateStructure,
  kDomainEscape,
  kIllConditionedDecomposition,
  kMaskedRegion,
  kConfig,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cqreduce
