#pragma once

#include <stdexcept>
#include <string>

namespace vigraph {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or shape mismatches handed to an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Dataset loading. Each failure mode has its own type so callers (and the
// CLI's exit-code mapping) can tell them apart.
class LoadError : public Error {
 public:
  using Error::Error;
};
class MissingFileError : public LoadError {
 public:
  using LoadError::LoadError;
};
class MalformedLineError : public LoadError {
 public:
  using LoadError::LoadError;
};
class NodeIdOutOfRangeError : public LoadError {
 public:
  using LoadError::LoadError;
};
class FeatureWidthError : public LoadError {
 public:
  using LoadError::LoadError;
};
class UnknownSplitTagError : public LoadError {
 public:
  using LoadError::LoadError;
};
class MissingLabelError : public LoadError {
 public:
  using LoadError::LoadError;
};

/// Imbalance construction cannot produce the requested scenario.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// A loss term became NaN or infinite during training.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, std::string term)
      : Error("non-finite " + term + " loss at epoch " + std::to_string(epoch)),
        epoch_(epoch),
        term_(std::move(term)) {}
  int epoch() const noexcept { return epoch_; }
  const std::string& term() const noexcept { return term_; }

 private:
  int epoch_;
  std::string term_;
};

/// Configuration file or flag violates the schema. `path` is a JSON pointer
/// to the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A pipeline stage failed; wraps the original message with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace vigraph
