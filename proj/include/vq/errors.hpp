#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vq {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that do not fit together (dimension mismatch, bad flags).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mathematical precondition violated (empty centroid, negative distortion).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Broken internal contract, e.g. partial cell tables that do not tile [0, M).
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be turned into vectors. Carries a 1-based location.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::size_t row, std::size_t column = 0)
      : Error(what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Binary or image file does not follow its format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An encoded stream references a codevector that does not exist.
class CorruptStreamError : public Error {
 public:
  using Error::Error;
};

}  // namespace vq
