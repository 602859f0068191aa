#pragma once

#include <stdexcept>
#include <string>

namespace csot {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value outside the domain of an operation (non-finite input, bad parameter).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operands whose grid sizes or channel counts do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A malformed binary or text file.
class FormatError : public Error {
 public:
  enum class Kind { Io, BadMagic, UnsupportedVersion, DimensionOverflow, Truncated, Parse };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// CG produced a non-finite iterate.
class SolverDivergence : public Error {
 public:
  SolverDivergence(int iteration, const std::string& what)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Bad configuration key or value.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Failure while processing a specific frame of a sequence (1-based index).
class TrackingError : public Error {
 public:
  TrackingError(int frame, const std::string& what)
      : Error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}
  int frame() const noexcept { return frame_; }

 private:
  int frame_;
};

}  // namespace csot
