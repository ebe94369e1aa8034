#pragma once

#include <stdexcept>
#include <string>

namespace ssgait {

// Base classes map onto the CLI exit codes: ConfigError -> 2 (usage),
// DataError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySilhouette : DataError {
  EmptySilhouette() : DataError("silhouette has no nonzero pixel") {}
};
struct SequenceTooShort : DataError {
  explicit SequenceTooShort(const std::string& what) : DataError(what) {}
};
struct InsufficientIdentities : DataError {
  explicit InsufficientIdentities(const std::string& what) : DataError(what) {}
};
struct NotEnoughData : DataError {
  explicit NotEnoughData(const std::string& what) : DataError(what) {}
};
struct IoError : DataError {
  explicit IoError(const std::string& what) : DataError(what) {}
};

struct ShapeMismatch : NumericError {
  explicit ShapeMismatch(const std::string& what) : NumericError(what) {}
};
struct IndivisibleHeight : NumericError {
  explicit IndivisibleHeight(const std::string& what) : NumericError(what) {}
};
struct DegenerateNorm : NumericError {
  explicit DegenerateNorm(const std::string& what) : NumericError(what) {}
};
struct DegenerateBatch : NumericError {
  explicit DegenerateBatch(const std::string& what) : NumericError(what) {}
};
struct NonFiniteLoss : NumericError {
  explicit NonFiniteLoss(const std::string& what) : NumericError(what) {}
};

struct VersionMismatch : DataError {
  explicit VersionMismatch(const std::string& what) : DataError(what) {}
};
struct CorruptCheckpoint : DataError {
  explicit CorruptCheckpoint(const std::string& what) : DataError(what) {}
};

}  // namespace ssgait
