#pragma once

#include <stdexcept>
#include <string>

namespace fsjump {

// Base class for every data error raised by the library. The CLI maps these
// to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class TaxonomyCountError : public Error {
 public:
  using Error::Error;
};

class UnknownLabelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DegenerateHipsError : public Error {
 public:
  using Error::Error;
};

class InvalidAnnotationError : public Error {
 public:
  using Error::Error;
};

class IdMismatchError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsjump
