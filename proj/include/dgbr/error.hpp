#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dgbr {

enum class ErrorKind {
  kInvalidInput,
  kParse,
  kSchema,
  kShape,
  kDomain,
  kUnsupportedDimension,
  kInvalidWeights,
  kInvalidTrainingData,
  kEmptyResult,
  kGenerationFailure,
  kInsufficientEnvironments,
  kTuningFailure,
  kConfig,
  kIo,
};

/// Stable machine-readable name, e.g. "shape-error".
std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dgbr
