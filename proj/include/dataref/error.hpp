#pragma once

#include <stdexcept>
#include <string>

namespace dataref {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or inconsistent configuration (word lists, seeds, thresholds).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input that does not follow one of the documented file formats.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Lookup of a session, item or paper that does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in a state that does not allow it.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dataref
